use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DramConfig {
    pub fixed_latency: u64,
    /// Minimum cycles between two request starts.
    pub min_gap: u64,
}

impl Default for DramConfig {
    fn default() -> Self {
        Self {
            fixed_latency: 100,
            min_gap: 4,
        }
    }
}

/// FIFO channel: requests start in arrival order, one per `min_gap`, and
/// finish `fixed_latency` after they start.
#[derive(Debug, Clone)]
pub struct Dram {
    cfg: DramConfig,
    next_start: u64,
    pub reads: u64,
    pub writes: u64,
    pub queue_cycles: u64,
}

impl Dram {
    pub fn new(cfg: DramConfig) -> Self {
        Self {
            cfg,
            next_start: 0,
            reads: 0,
            writes: 0,
            queue_cycles: 0,
        }
    }

    /// Enqueues a request at `now` (calls must come in non-decreasing `now`)
    /// and returns its completion cycle.
    pub fn issue(&mut self, now: u64, write: bool) -> u64 {
        let start = now.max(self.next_start);
        self.queue_cycles += start - now;
        self.next_start = start + self.cfg.min_gap;
        if write {
            self.writes += 1;
        } else {
            self.reads += 1;
        }
        start + self.cfg.fixed_latency
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_spacing() {
        let mut d = Dram::new(DramConfig::default());
        assert_eq!(d.issue(10, false), 110);
        assert_eq!(d.issue(10, false), 114);
        assert_eq!(d.issue(11, true), 118);
        assert_eq!(d.issue(200, false), 300);
        assert_eq!((d.reads, d.writes), (3, 1));
        assert_eq!(d.queue_cycles, 4 + 7);
    }
}

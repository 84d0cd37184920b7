use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheGeometry {
    pub size_bytes: u64,
    #[serde(default = "default_block")]
    pub block_bytes: u64,
    pub ways: usize,
    pub tag_latency: u64,
    pub data_latency: u64,
}

fn default_block() -> u64 {
    64
}

impl CacheGeometry {
    pub fn sets(&self) -> usize {
        (self.size_bytes / (self.block_bytes * self.ways as u64)) as usize
    }

    pub fn lines(&self) -> usize {
        self.sets() * self.ways
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_bytes != 64 {
            return Err(Error::Config("block size must be 64 B".into()));
        }
        if self.ways == 0 || self.size_bytes == 0 {
            return Err(Error::Config("cache size and ways must be positive".into()));
        }
        let way_bytes = self.block_bytes * self.ways as u64;
        if !self.size_bytes.is_multiple_of(way_bytes) || !(self.size_bytes / way_bytes).is_power_of_two() {
            return Err(Error::Config(format!(
                "cache of {} B with {} ways does not give a power-of-two set count",
                self.size_bytes, self.ways
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OwnerClass {
    Core,
    Accel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheLine {
    /// Block address (address >> 6); the set index is part of it.
    pub block: u64,
    pub valid: bool,
    pub dirty: bool,
    pub owner: Option<OwnerClass>,
    pub lru_stamp: u64,
    pub referenced: bool,
    /// Predictor signature of the access that inserted the line.
    pub signature: u64,
}

/// A valid line pushed out by an insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evicted {
    pub block: u64,
    pub dirty: bool,
    pub owner: OwnerClass,
    pub referenced: bool,
    pub signature: u64,
}

impl From<CacheLine> for Evicted {
    fn from(l: CacheLine) -> Self {
        Self {
            block: l.block,
            dirty: l.dirty,
            owner: l.owner.expect("valid lines have owners"),
            referenced: l.referenced,
            signature: l.signature,
        }
    }
}

/// Set-associative, true-LRU, write-back cache over 64 B blocks.
#[derive(Debug, Clone)]
pub struct Cache {
    geom: CacheGeometry,
    lines: Vec<CacheLine>,
    clock: u64,
    set_mask: u64,
}

impl Cache {
    pub fn new(geom: CacheGeometry) -> Result<Self> {
        geom.validate()?;
        Ok(Self {
            lines: vec![CacheLine::default(); geom.lines()],
            set_mask: geom.sets() as u64 - 1,
            clock: 0,
            geom,
        })
    }

    pub fn geometry(&self) -> &CacheGeometry {
        &self.geom
    }

    fn set_range(&self, block: u64) -> std::ops::Range<usize> {
        let s = (block & self.set_mask) as usize * self.geom.ways;
        s..s + self.geom.ways
    }

    fn find(&self, block: u64) -> Option<usize> {
        self.set_range(block)
            .find(|&i| self.lines[i].valid && self.lines[i].block == block)
    }

    pub fn contains(&self, block: u64) -> bool {
        self.find(block).is_some()
    }

    pub fn line(&self, block: u64) -> Option<&CacheLine> {
        self.find(block).map(|i| &self.lines[i])
    }

    /// Hit check that updates recency and marks the line referenced. Returns
    /// the line state before the touch.
    pub fn access(&mut self, block: u64, write: bool) -> Option<CacheLine> {
        let i = self.find(block)?;
        let before = self.lines[i];
        self.clock += 1;
        let l = &mut self.lines[i];
        l.lru_stamp = self.clock;
        l.referenced = true;
        l.dirty |= write;
        Some(before)
    }

    /// Installs `block` as most-recently used. An already-present block is
    /// refreshed in place; otherwise the LRU way (invalid ways first) is
    /// replaced and returned if it held a valid line.
    pub fn insert(
        &mut self,
        block: u64,
        owner: OwnerClass,
        dirty: bool,
        signature: u64,
    ) -> Option<Evicted> {
        self.clock += 1;
        if let Some(i) = self.find(block) {
            let l = &mut self.lines[i];
            l.lru_stamp = self.clock;
            l.dirty |= dirty;
            return None;
        }
        let range = self.set_range(block);
        let victim = range
            .clone()
            .find(|&i| !self.lines[i].valid)
            .unwrap_or_else(|| {
                range
                    .min_by_key(|&i| self.lines[i].lru_stamp)
                    .expect("ways > 0")
            });
        let old = self.lines[victim];
        self.lines[victim] = CacheLine {
            block,
            valid: true,
            dirty,
            owner: Some(owner),
            lru_stamp: self.clock,
            referenced: false,
            signature,
        };
        old.valid.then(|| old.into())
    }

    pub fn invalidate(&mut self, block: u64) -> Option<CacheLine> {
        let i = self.find(block)?;
        let old = self.lines[i];
        self.lines[i] = CacheLine::default();
        Some(old)
    }

    /// Valid lines owned by cores and by the accelerator.
    pub fn occupancy(&self) -> (usize, usize) {
        let mut c = (0, 0);
        for l in self.lines.iter().filter(|l| l.valid) {
            match l.owner {
                Some(OwnerClass::Core) => c.0 += 1,
                Some(OwnerClass::Accel) => c.1 += 1,
                None => {}
            }
        }
        c
    }

    /// Valid blocks of one set, least recently used first.
    pub fn set_blocks_lru_order(&self, set: usize) -> Vec<u64> {
        let s = set * self.geom.ways;
        let mut v: Vec<&CacheLine> = self.lines[s..s + self.geom.ways]
            .iter()
            .filter(|l| l.valid)
            .collect();
        v.sort_by_key(|l| l.lru_stamp);
        v.into_iter().map(|l| l.block).collect()
    }

    /// Checks that no block is valid twice within its set.
    pub fn check_single_copy(&self) -> Result<()> {
        for set in 0..self.geom.sets() {
            let mut b = self.set_blocks_lru_order(set);
            let n = b.len();
            b.sort_unstable();
            b.dedup();
            if b.len() != n {
                return Err(Error::Invariant(format!("duplicate block in set {set}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Cache {
        Cache::new(CacheGeometry {
            size_bytes: 4 * 4 * 64,
            block_bytes: 64,
            ways: 4,
            tag_latency: 1,
            data_latency: 1,
        })
        .unwrap()
    }

    #[test]
    fn second_access_hits() {
        let mut c = tiny();
        assert!(c.access(7, false).is_none());
        c.insert(7, OwnerClass::Core, false, 0);
        assert!(c.access(7, false).is_some());
    }

    #[test]
    fn lru_victim_and_occupancy() {
        let mut c = tiny();
        // blocks 0,4,8,12 share set 0
        for b in [0, 4, 8, 12] {
            assert!(c.insert(b, OwnerClass::Accel, false, 0).is_none());
        }
        c.access(0, false);
        let ev = c.insert(16, OwnerClass::Core, false, 0).unwrap();
        assert_eq!(ev.block, 4);
        assert!(!ev.referenced);
        assert_eq!(c.occupancy(), (1, 3));
        assert_eq!(c.set_blocks_lru_order(0), vec![8, 12, 0, 16]);
    }

    #[test]
    fn invalidate_removes() {
        let mut c = tiny();
        c.insert(3, OwnerClass::Core, true, 0);
        let old = c.invalidate(3).unwrap();
        assert!(old.dirty);
        assert!(!c.contains(3));
        assert_eq!(c.occupancy(), (0, 0));
    }

    #[test]
    fn bad_geometry() {
        let g = CacheGeometry {
            size_bytes: 3 * 64 * 4,
            block_bytes: 64,
            ways: 4,
            tag_latency: 1,
            data_latency: 1,
        };
        assert!(Cache::new(g).is_err());
    }
}

use super::{Cache, CacheGeometry, OwnerClass};
use crate::error::Result;
use crate::trace::{AccessKind, AccessSequence};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayStats {
    pub accesses: u64,
    pub private_hits: u64,
    pub llc_accesses: u64,
    pub llc_hits: u64,
}

impl ReplayStats {
    pub fn llc_hit_rate(&self) -> f64 {
        if self.llc_accesses == 0 {
            0.0
        } else {
            self.llc_hits as f64 / self.llc_accesses as f64
        }
    }
}

/// Untimed replay of one trace through an optional private cache and an
/// LLC. The first `warmup` accesses only warm the caches.
pub fn replay_standalone(
    seq: &AccessSequence,
    private: Option<CacheGeometry>,
    llc: CacheGeometry,
    warmup: usize,
) -> Result<ReplayStats> {
    let mut l1 = private.map(Cache::new).transpose()?;
    let mut l2 = Cache::new(llc)?;
    let mut s = ReplayStats::default();
    for (i, a) in seq.accesses.iter().enumerate() {
        let count = i >= warmup;
        let block = a.address >> 6;
        let write = a.kind == AccessKind::Write;
        s.accesses += count as u64;
        if let Some(p) = l1.as_mut() {
            if p.access(block, write).is_some() {
                s.private_hits += count as u64;
                continue;
            }
            if let Some(ev) = p.insert(block, OwnerClass::Core, write, 0) {
                if ev.dirty && l2.access(ev.block, true).is_none() {
                    l2.insert(ev.block, OwnerClass::Core, true, 0);
                }
            }
        }
        s.llc_accesses += count as u64;
        if l2.access(block, write && l1.is_none()).is_some() {
            s.llc_hits += count as u64;
        } else {
            l2.insert(block, OwnerClass::Core, write && l1.is_none(), 0);
        }
    }
    Ok(s)
}

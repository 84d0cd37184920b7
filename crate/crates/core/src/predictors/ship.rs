use std::sync::atomic::{AtomicU64, Ordering};

pub const SHIP_ENTRIES: usize = 4096;
pub const SHIP_INIT: u8 = 3;
pub const SHIP_MAX: u8 = 7;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShipEvent {
    /// Line left the cache without being touched after insertion.
    InsertEvictNoReuse,
    /// Line was re-referenced.
    HitReref,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShipPrediction {
    Reuse,
    NoReuse,
}

/// Signature-indexed 3-bit saturating counters.
#[derive(Debug)]
pub struct ShipTable {
    counters: Vec<u8>,
    sig_bits: u32,
    id: u64,
}

impl ShipTable {
    pub fn new(entries: usize) -> Self {
        assert!(entries.is_power_of_two(), "SHiP table size must be a power of two");
        Self {
            counters: vec![SHIP_INIT; entries],
            sig_bits: entries.trailing_zeros(),
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        }
    }

    /// Distinct for every table ever built in this process.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn sig_bits(&self) -> u32 {
        self.sig_bits
    }

    fn slot(&self, signature: u64) -> usize {
        (signature & ((1 << self.sig_bits) - 1)) as usize
    }

    /// Signature of a core access: its PC surrogate folded to `sig_bits`.
    pub fn core_signature(&self, tag: u64) -> u64 {
        let t = tag >> 2;
        t ^ (t >> self.sig_bits) ^ (t >> (2 * self.sig_bits))
    }

    /// Signature of an accelerator access: low bits of its block address.
    pub fn accel_signature(&self, address: u64) -> u64 {
        address >> 6
    }

    pub fn counter(&self, signature: u64) -> u8 {
        self.counters[self.slot(signature)]
    }

    pub fn observe(&mut self, signature: u64, event: ShipEvent) {
        let s = self.slot(signature);
        let c = &mut self.counters[s];
        match event {
            ShipEvent::HitReref => *c = (*c + 1).min(SHIP_MAX),
            ShipEvent::InsertEvictNoReuse => *c = c.saturating_sub(1),
        }
    }

    pub fn predict(&self, signature: u64) -> ShipPrediction {
        if self.counter(signature) == 0 {
            ShipPrediction::NoReuse
        } else {
            ShipPrediction::Reuse
        }
    }
}

impl Clone for ShipTable {
    /// A clone is a new table with its own identity.
    fn clone(&self) -> Self {
        Self {
            counters: self.counters.clone(),
            sig_bits: self.sig_bits,
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        }
    }
}

impl Default for ShipTable {
    fn default() -> Self {
        Self::new(SHIP_ENTRIES)
    }
}

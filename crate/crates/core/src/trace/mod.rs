//! Memory access sequences: the data model shared by every other module,
//! the on-disk trace formats, and the synthetic trace generators.

mod core_gen;
mod io;
mod systolic;

pub use core_gen::{assign_requester, generate_core_trace, CoreProfile, CORE_BASE};
pub use io::{
    layers_sidecar_path, parse_trace, read_layer_marks, write_layer_marks, write_trace,
    TraceFormat, BINARY_MAGIC, BINARY_RECORD_BYTES, BINARY_VERSION,
};
pub use systolic::{
    generate_systolic_trace, AcceleratorSpec, Dataflow, LayerSpec, FILTER_BASE, IFMAP_BASE,
    OFMAP_BASE, REGION_STRIDE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    Read,
    Write,
}

impl AccessKind {
    pub fn as_char(self) -> char {
        match self {
            AccessKind::Read => 'R',
            AccessKind::Write => 'W',
        }
    }
}

/// One timed read or write issued by a core or by the accelerator.
///
/// `timestamp` is in requester-local cycles. `tag` is a program-counter
/// surrogate for cores and always zero for the accelerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemoryAccess {
    pub timestamp: u64,
    pub requester_id: u8,
    pub address: u64,
    pub kind: AccessKind,
    pub tag: u64,
}

impl MemoryAccess {
    pub fn read(timestamp: u64, requester_id: u8, address: u64) -> Self {
        Self {
            timestamp,
            requester_id,
            address,
            kind: AccessKind::Read,
            tag: 0,
        }
    }

    pub fn write(timestamp: u64, requester_id: u8, address: u64) -> Self {
        Self {
            timestamp,
            requester_id,
            address,
            kind: AccessKind::Write,
            tag: 0,
        }
    }

    pub fn with_tag(mut self, tag: u64) -> Self {
        self.tag = tag;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerMark {
    pub position: usize,
    pub layer_id: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccessSequence {
    pub accesses: Vec<MemoryAccess>,
    /// Free-form provenance: generator parameters or the source path.
    pub meta: String,
    pub layer_marks: Vec<LayerMark>,
}

impl AccessSequence {
    pub fn new(accesses: Vec<MemoryAccess>, meta: impl Into<String>) -> Self {
        Self {
            accesses,
            meta: meta.into(),
            layer_marks: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }

    /// Checks per-requester timestamp monotonicity and layer-mark ordering.
    pub fn validate(&self) -> Result<()> {
        let mut last = [None::<u64>; 256];
        for (i, a) in self.accesses.iter().enumerate() {
            let slot = &mut last[a.requester_id as usize];
            if let Some(prev) = *slot {
                if a.timestamp < prev {
                    return Err(Error::Validation(format!(
                        "timestamp decreases for requester {} at record {} ({} < {})",
                        a.requester_id,
                        i + 1,
                        a.timestamp,
                        prev
                    )));
                }
            }
            *slot = Some(a.timestamp);
        }
        for (i, w) in self.layer_marks.windows(2).enumerate() {
            if w[1].position <= w[0].position || w[1].layer_id <= w[0].layer_id {
                return Err(Error::Validation(format!(
                    "layer marks not strictly increasing at entry {}",
                    i + 1
                )));
            }
        }
        if let Some(first) = self.layer_marks.first() {
            if first.layer_id != 0 {
                return Err(Error::Validation("layer ids must start at 0".into()));
            }
        }
        if let Some(last) = self.layer_marks.last() {
            if last.position > self.accesses.len() {
                return Err(Error::Validation(format!(
                    "layer mark position {} beyond sequence length {}",
                    last.position,
                    self.accesses.len()
                )));
            }
        }
        Ok(())
    }

    /// Half-open range of positions covered by `layer_id`.
    pub fn layer_range(&self, layer_id: u32) -> Option<std::ops::Range<usize>> {
        let idx = self
            .layer_marks
            .iter()
            .position(|m| m.layer_id == layer_id)?;
        let start = self.layer_marks[idx].position;
        let end = self
            .layer_marks
            .get(idx + 1)
            .map_or(self.accesses.len(), |m| m.position);
        Some(start..end)
    }

    pub fn layer_slice(&self, layer_id: u32) -> Option<&[MemoryAccess]> {
        self.layer_range(layer_id).map(|r| &self.accesses[r])
    }

    /// Layer id in effect at `position`; zero when the sequence has no marks.
    pub fn layer_at(&self, position: usize) -> u32 {
        match self
            .layer_marks
            .partition_point(|m| m.position <= position)
        {
            0 => 0,
            n => self.layer_marks[n - 1].layer_id,
        }
    }

    pub fn layer_ids(&self) -> Vec<u32> {
        if self.layer_marks.is_empty() {
            vec![0]
        } else {
            self.layer_marks.iter().map(|m| m.layer_id).collect()
        }
    }

    /// Stable 64-bit FNV-1a fingerprint over the records and layer marks.
    pub fn fingerprint(&self) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        for a in &self.accesses {
            eat(a.timestamp);
            eat(a.requester_id as u64);
            eat(a.address);
            eat(matches!(a.kind, AccessKind::Write) as u64);
            eat(a.tag);
        }
        for m in &self.layer_marks {
            eat(m.position as u64);
            eat(m.layer_id as u64);
        }
        h
    }
}

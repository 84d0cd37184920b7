use std::collections::HashMap;

use crate::trace::MemoryAccess;

/// Occurrences of one cache line and the reuse intervals between them.
///
/// `occurrences` are 1-based access numbers; `intervals[j]` is the distance to
/// the next occurrence, and the last interval is always `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReuseVector {
    pub occurrences: Vec<u64>,
    pub intervals: Vec<i64>,
}

impl ReuseVector {
    /// Reuse count T_i: how many times the line occurs.
    pub fn count(&self) -> usize {
        self.occurrences.len()
    }

    /// All intervals except the terminal `-1`.
    pub fn reuse_intervals(&self) -> &[i64] {
        &self.intervals[..self.intervals.len().saturating_sub(1)]
    }

    fn push(&mut self, position: u64) {
        if let Some(&last) = self.occurrences.last() {
            *self.intervals.last_mut().unwrap() = (position - last) as i64;
        }
        self.occurrences.push(position);
        self.intervals.push(-1);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineReuse {
    pub line: u64,
    pub rv: ReuseVector,
}

/// Per-line reuse vectors of one access sequence, in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureTrace {
    pub block_bits: u32,
    pub lines: Vec<LineReuse>,
    pub m_total: u64,
    index: HashMap<u64, usize>,
}

impl SignatureTrace {
    pub fn n_unique(&self) -> usize {
        self.lines.len()
    }

    pub fn get(&self, line: u64) -> Option<&ReuseVector> {
        self.index.get(&line).map(|&i| &self.lines[i].rv)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LineReuse> {
        self.lines.iter()
    }
}

/// Builds the reuse signature keyed by `address >> block_bits`.
pub fn build_reuse_signature(accesses: &[MemoryAccess], block_bits: u32) -> SignatureTrace {
    build_reuse_signature_keyed(accesses, block_bits, |line| line)
}

/// Like [`build_reuse_signature`] but lines are re-keyed by `key(line)`, so
/// colliding lines merge into one reuse stream.
pub fn build_reuse_signature_keyed(
    accesses: &[MemoryAccess],
    block_bits: u32,
    key: impl Fn(u64) -> u64,
) -> SignatureTrace {
    let mut lines: Vec<LineReuse> = Vec::new();
    let mut index: HashMap<u64, usize> = HashMap::new();
    for (m, a) in accesses.iter().enumerate() {
        let line = key(a.address >> block_bits);
        let slot = *index.entry(line).or_insert_with(|| {
            lines.push(LineReuse {
                line,
                rv: ReuseVector::default(),
            });
            lines.len() - 1
        });
        lines[slot].rv.push(m as u64 + 1);
    }
    SignatureTrace {
        block_bits,
        lines,
        m_total: accesses.len() as u64,
        index,
    }
}

/// Per-access view: for access m, the interval to the next access of the
/// same line (or -1) and the cumulative reuse count of that line so far.
pub fn per_access_reuse(accesses: &[MemoryAccess], block_bits: u32) -> Vec<(i64, u64)> {
    let tr = build_reuse_signature(accesses, block_bits);
    let mut rows = vec![(0i64, 0u64); accesses.len()];
    for lr in tr.iter() {
        for (j, (&pos, &ri)) in lr.rv.occurrences.iter().zip(&lr.rv.intervals).enumerate() {
            rows[pos as usize - 1] = (ri, j as u64 + 1);
        }
    }
    rows
}

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AccessKind, AccessSequence, MemoryAccess};
use crate::error::{Error, Result};

/// Base of the address window used by generated core traces. The harness
/// relocates each core into its own window.
pub const CORE_BASE: u64 = 0x1_0000_0000;

const BLOCK: u64 = 64;

/// Standalone reuse class of a synthetic core workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoreProfile {
    /// Compute-intensive: sparse accesses over a footprint that fits the
    /// private cache.
    CI,
    /// LLC-intensive: dense random reuse over a footprint between private
    /// and LLC capacity, with a thin streaming component.
    LI,
    /// Memory-intensive: dense streaming over a footprint far beyond the LLC.
    MI,
}

impl CoreProfile {
    /// Mean number of instructions between two memory accesses.
    pub fn mean_gap(self) -> u64 {
        match self {
            CoreProfile::CI => 64,
            CoreProfile::LI | CoreProfile::MI => 4,
        }
    }
}

impl FromStr for CoreProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CI" => Ok(CoreProfile::CI),
            "LI" => Ok(CoreProfile::LI),
            "MI" => Ok(CoreProfile::MI),
            other => Err(Error::Config(format!("unknown core profile '{other}'"))),
        }
    }
}

// PC surrogates: reuse-heavy code and streaming code use disjoint sets so a
// signature predictor can tell them apart.
const REUSE_PCS: [u64; 4] = [0x40_1000, 0x40_1040, 0x40_1080, 0x40_10c0];
const STREAM_PCS: [u64; 2] = [0x40_2000, 0x40_2040];

pub fn generate_core_trace(
    profile: CoreProfile,
    length: usize,
    footprint: u64,
    seed: u64,
) -> Result<AccessSequence> {
    if length == 0 {
        return Err(Error::Generation("core trace length must be > 0".into()));
    }
    if footprint == 0 {
        return Err(Error::Generation("core footprint must be > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lines = footprint.div_ceil(BLOCK).max(1);
    let mean_gap = profile.mean_gap();
    // streaming region sits right above the reuse footprint
    let stream_base = CORE_BASE + lines * BLOCK;
    let stream_lines = lines.saturating_mul(8).max(1);

    let mut ts = 0u64;
    let mut stream_cursor = 0u64;
    let mut accesses = Vec::with_capacity(length);
    for i in 0..length {
        ts += rng.gen_range(1..=2 * mean_gap - 1);
        let kind = if rng.gen_bool(0.25) {
            AccessKind::Write
        } else {
            AccessKind::Read
        };
        let word = rng.gen_range(0..BLOCK / 8) * 8;
        let (address, tag) = match profile {
            CoreProfile::CI => {
                let line = rng.gen_range(0..lines);
                (CORE_BASE + line * BLOCK + word, REUSE_PCS[i % REUSE_PCS.len()])
            }
            CoreProfile::LI => {
                if rng.gen_bool(0.05) {
                    let line = stream_cursor % stream_lines;
                    stream_cursor += 1;
                    (stream_base + line * BLOCK, STREAM_PCS[i % STREAM_PCS.len()])
                } else {
                    let line = rng.gen_range(0..lines);
                    (CORE_BASE + line * BLOCK + word, REUSE_PCS[i % REUSE_PCS.len()])
                }
            }
            CoreProfile::MI => {
                if rng.gen_bool(0.8) {
                    // 16-byte stride: four touches per block
                    let off = (stream_cursor * 16) % (lines * BLOCK);
                    stream_cursor += 1;
                    (CORE_BASE + off, STREAM_PCS[i % STREAM_PCS.len()])
                } else {
                    let line = rng.gen_range(0..lines);
                    (CORE_BASE + line * BLOCK + word, REUSE_PCS[i % REUSE_PCS.len()])
                }
            }
        };
        accesses.push(MemoryAccess {
            timestamp: ts,
            requester_id: 0,
            address,
            kind,
            tag,
        });
    }
    Ok(AccessSequence::new(
        accesses,
        format!("core profile={profile:?} length={length} footprint={footprint} seed={seed}"),
    ))
}

/// Moves a generated core trace to requester `id` and shifts its addresses
/// by `offset` so several cores never share data.
pub fn assign_requester(seq: &mut AccessSequence, id: u8, offset: u64) {
    for a in &mut seq.accesses {
        a.requester_id = id;
        a.address = a.address.wrapping_add(offset);
    }
}

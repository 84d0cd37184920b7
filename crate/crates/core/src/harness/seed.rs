//! Every random stream in an experiment is derived from the root seed:
//! `split(root, stream, index)` runs SplitMix64 over the root mixed with a
//! per-stream constant, then over the index.

/// Independent random streams of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    CoreTrace = 1,
    AccelTrace = 2,
    Lern = 3,
    Policy = 4,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn split(root: u64, stream: Stream, index: u64) -> u64 {
    let s = splitmix64(root ^ (stream as u64).wrapping_mul(0xa076_1d64_78bd_642f));
    splitmix64(s ^ index)
}

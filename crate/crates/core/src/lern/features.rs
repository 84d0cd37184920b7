use serde::{Deserialize, Serialize};

use super::signature::SignatureTrace;

/// Upper bounds (inclusive) of the first three reuse-interval bins; the
/// fourth bin is everything above the last bound.
pub const RI_BIN_BOUNDS: [i64; 3] = [10, 100, 500];

/// Histogram of one line's reuse intervals over the bins
/// `[1,10]`, `(10,100]`, `(100,500]`, `(500,inf)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RIFeature(pub [u32; 4]);

impl RIFeature {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn as_f64(&self) -> [f64; 4] {
        self.0.map(f64::from)
    }
}

pub fn ri_bin(interval: i64) -> usize {
    debug_assert!(interval >= 1, "bins only cover positive intervals");
    RI_BIN_BOUNDS
        .iter()
        .position(|&b| interval <= b)
        .unwrap_or(3)
}

pub fn ri_feature(intervals: &[i64]) -> RIFeature {
    let mut f = [0u32; 4];
    for &ri in intervals.iter().filter(|&&ri| ri >= 1) {
        f[ri_bin(ri)] += 1;
    }
    RIFeature(f)
}

/// Returns `(F_RI, F_RC)` in the trace's line order. Single-occurrence lines
/// yield an all-zero feature and `T_i = 1`.
pub fn extract_features(tr: &SignatureTrace) -> (Vec<RIFeature>, Vec<u64>) {
    tr.iter()
        .map(|lr| (ri_feature(lr.rv.reuse_intervals()), lr.rv.count() as u64))
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_from_worked_vector() {
        assert_eq!(ri_feature(&[5, 20, 9, 6, -1]), RIFeature([3, 1, 0, 0]));
    }

    #[test]
    fn boundaries() {
        assert_eq!(ri_feature(&[500, 501, -1]), RIFeature([0, 0, 1, 1]));
        assert_eq!(ri_feature(&[10, 11, 100, 101]), RIFeature([1, 2, 1, 0]));
        assert_eq!(ri_bin(1), 0);
    }
}

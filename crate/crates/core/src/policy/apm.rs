//! Accelerator progress monitor arithmetic: margin estimation, bypass
//! threshold update (Algorithm 1), and the reuse-threshold ladder.

use serde::{Deserialize, Serialize};

use crate::lern::RcLabel;
use crate::memsys::Decision;
use crate::predictors::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydraParams {
    pub margin_high: f64,
    pub margin_low: f64,
    pub mr_th: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    /// Apply Algorithm 1 to last epoch's thresholds instead of the base ones.
    pub compound: bool,
    /// Cold clusters with a center below this are bypassed at the Cold rung.
    pub cold_center_max: f64,
}

impl Default for HydraParams {
    fn default() -> Self {
        Self {
            margin_high: 0.05,
            margin_low: 0.01,
            mr_th: 0.30,
            alpha: 0.10,
            beta: 0.05,
            delta_a: 0.20,
            delta_b: 0.10,
            compound: false,
            cold_center_max: 2.5,
        }
    }
}

/// `t_a[0..4]` are T_A1..T_A4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BypassThresholds {
    pub t_a: [f64; 4],
    pub t_b: f64,
}

impl Default for BypassThresholds {
    fn default() -> Self {
        Self {
            t_a: [1.0, 1.2, 1.5, 2.0],
            t_b: 0.9,
        }
    }
}

impl BypassThresholds {
    pub fn validate_base(&self) -> bool {
        self.t_b < self.t_a[0]
            && self.t_a.windows(2).all(|w| w[0] < w[1])
            && self.t_b > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadlineSpec {
    /// Accesses per input set.
    pub m: u64,
    pub d_cycles: u64,
    pub et: u64,
}

impl DeadlineSpec {
    pub fn ma_global(&self) -> f64 {
        self.m as f64 * self.et as f64 / self.d_cycles as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochCounters {
    pub ra: u64,
    pub rt: i64,
    pub mr: f64,
    pub ma_past: Option<f64>,
    pub amal: Option<f64>,
}

impl EpochCounters {
    /// MA_past from the accesses done and cycles spent so far in the set;
    /// `None` before any time has elapsed.
    pub fn ma_past_from(d: &DeadlineSpec, ra: u64, rt: i64) -> Option<f64> {
        let elapsed = d.d_cycles as i64 - rt;
        (elapsed > 0).then(|| (d.m - ra) as f64 * d.et as f64 / elapsed as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Requirement {
    Accesses { ma_i: f64, margin: f64 },
    /// The deadline has passed with work left.
    DeadlineMissed,
}

/// Margin from the two pressure conditions: none, one, or both true.
pub fn margin(c: &EpochCounters, d: &DeadlineSpec, p: &HydraParams) -> f64 {
    let cond_mem = c.mr > p.mr_th;
    let cond_prog = c
        .ma_past
        .is_some_and(|past| past < (1.0 + p.alpha) * d.ma_global());
    match (cond_mem, cond_prog) {
        (true, true) => p.margin_high,
        (false, false) => 0.0,
        _ => p.margin_low,
    }
}

pub fn estimate_progress_requirement(
    c: &EpochCounters,
    d: &DeadlineSpec,
    p: &HydraParams,
) -> Requirement {
    if c.rt <= 0 {
        return Requirement::DeadlineMissed;
    }
    let m = margin(c, d, p);
    let horizon = (c.rt as f64 - m * d.d_cycles as f64).max(d.et as f64);
    Requirement::Accesses {
        ma_i: c.ra as f64 * d.et as f64 / horizon,
        margin: m,
    }
}

/// Which Algorithm 1 branch fired: `Lower(k)` subtracts k steps, `Keep`
/// leaves the base values, `Raise` adds one step to the T_A values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alg1Branch {
    Lower(u8),
    Keep,
    Raise,
}

pub fn alg1_branch(ma_i: f64, ma_global: f64, beta: f64) -> Alg1Branch {
    let band = |k: f64| (1.0 - k * beta) * ma_global;
    if ma_i <= band(6.0) {
        return Alg1Branch::Lower(6);
    }
    for k in (1..=5u8).rev() {
        if ma_i > band(k as f64 + 1.0) && ma_i <= band(k as f64) {
            return Alg1Branch::Lower(k);
        }
    }
    if ma_i <= (1.0 + beta) * ma_global {
        Alg1Branch::Keep
    } else {
        Alg1Branch::Raise
    }
}

pub fn update_bypass_thresholds(
    ma_i: f64,
    ma_global: f64,
    base: &BypassThresholds,
    p: &HydraParams,
) -> BypassThresholds {
    match alg1_branch(ma_i, ma_global, p.beta) {
        Alg1Branch::Lower(k) => {
            let k = k as f64;
            BypassThresholds {
                t_a: base.t_a.map(|t| (t - k * p.delta_a).max(1.0)),
                t_b: base.t_b - k * p.delta_b,
            }
        }
        Alg1Branch::Keep => *base,
        Alg1Branch::Raise => BypassThresholds {
            t_a: base.t_a.map(|t| t + p.delta_a),
            t_b: base.t_b,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseThresholds {
    pub ri_th: i8,
    pub rc_th: i8,
    pub cold_special: bool,
}

/// Ladder rungs from least to most bypass. Rung 0 bypasses only No-Reuse;
/// rung 5 bypasses everything.
pub const RUNGS: [ReuseThresholds; 6] = [
    ReuseThresholds { ri_th: 4, rc_th: -1, cold_special: false },
    ReuseThresholds { ri_th: 3, rc_th: 0, cold_special: true },
    ReuseThresholds { ri_th: 2, rc_th: 1, cold_special: false },
    ReuseThresholds { ri_th: 1, rc_th: 2, cold_special: false },
    ReuseThresholds { ri_th: 0, rc_th: 3, cold_special: false },
    ReuseThresholds { ri_th: -1, rc_th: 4, cold_special: false },
];

/// Rung for progress ratio `r` = MA_hat / MA_i. Bands are lower-inclusive.
pub fn select_rung(r: f64, t: &BypassThresholds) -> u8 {
    let [a1, a2, a3, a4] = t.t_a;
    if r >= a4 {
        5
    } else if r >= a3 {
        4
    } else if r >= a2 {
        3
    } else if r >= a1 {
        2
    } else if r >= t.t_b {
        1
    } else {
        0
    }
}

pub fn select_reuse_thresholds(ma_hat: Option<f64>, ma_i: f64, t: &BypassThresholds) -> ReuseThresholds {
    RUNGS[select_rung(progress_ratio(ma_hat, ma_i), t) as usize]
}

/// MA_hat / MA_i, or 1.0 when there is no latency data yet.
pub fn progress_ratio(ma_hat: Option<f64>, ma_i: f64) -> f64 {
    match ma_hat {
        Some(h) if ma_i > 0.0 => h / ma_i,
        Some(_) => f64::INFINITY,
        None => 1.0,
    }
}

pub fn accel_bypass_decide(
    pred: Prediction,
    th: &ReuseThresholds,
    cold_center: Option<f64>,
    cold_center_max: f64,
) -> Decision {
    let Prediction::Reuse { rc, ri } = pred else {
        return Decision::Bypass;
    };
    if ri as i8 > th.ri_th || (rc as i8) < th.rc_th {
        return Decision::Bypass;
    }
    if th.cold_special && rc == RcLabel::Cold && cold_center.is_some_and(|c| c < cold_center_max) {
        return Decision::Bypass;
    }
    Decision::Cache
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lern::RiLabel;

    fn d() -> DeadlineSpec {
        DeadlineSpec {
            m: 1_000_000,
            d_cycles: 100_000_000,
            et: 200_000,
        }
    }

    #[test]
    fn start_of_set_identity() {
        let d = d();
        let g = d.ma_global();
        let c = EpochCounters {
            ra: 1_000_000,
            rt: d.d_cycles as i64,
            mr: 0.1,
            ma_past: Some(1.2 * g),
            amal: None,
        };
        match estimate_progress_requirement(&c, &d, &HydraParams::default()) {
            Requirement::Accesses { ma_i, margin } => {
                assert_eq!(margin, 0.0);
                assert!((ma_i - g).abs() < 1e-9);
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn both_conditions_high_margin() {
        let d = d();
        let c = EpochCounters {
            ra: 10,
            rt: 1000,
            mr: 0.5,
            ma_past: Some(0.9 * d.ma_global()),
            amal: None,
        };
        assert_eq!(margin(&c, &d, &HydraParams::default()), 0.05);
        let one = EpochCounters { mr: 0.1, ..c };
        assert_eq!(margin(&one, &d, &HydraParams::default()), 0.01);
    }

    #[test]
    fn horizon_clamps_to_epoch() {
        let d = d();
        let c = EpochCounters {
            ra: 777,
            rt: (0.04 * d.d_cycles as f64) as i64,
            mr: 0.5,
            ma_past: Some(0.0),
            amal: None,
        };
        assert_eq!(
            estimate_progress_requirement(&c, &d, &HydraParams::default()),
            Requirement::Accesses {
                ma_i: 777.0,
                margin: 0.05
            }
        );
        let late = EpochCounters { rt: 0, ..c };
        assert_eq!(
            estimate_progress_requirement(&late, &d, &HydraParams::default()),
            Requirement::DeadlineMissed
        );
    }

    #[test]
    fn alg1_examples() {
        let p = HydraParams::default();
        let base = BypassThresholds::default();
        assert_eq!(update_bypass_thresholds(100.0, 100.0, &base, &p), base);

        let b = BypassThresholds {
            t_a: [1.1, 1.2, 1.5, 2.0],
            t_b: 0.9,
        };
        let up = update_bypass_thresholds(120.0, 100.0, &b, &p);
        assert!((up.t_a[0] - 1.3).abs() < 1e-12);
        assert_eq!(up.t_b, 0.9);

        let down = update_bypass_thresholds(50.0, 100.0, &base, &p);
        assert!((down.t_a[3] - 1.0).abs() < 1e-12);
        assert!((down.t_b - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ladder() {
        let t = BypassThresholds::default();
        assert_eq!(select_rung(10.0, &t), 5);
        assert_eq!(select_rung(1.2, &t), 3);
        assert_eq!(RUNGS[3], ReuseThresholds { ri_th: 1, rc_th: 2, cold_special: false });
        assert_eq!(select_reuse_thresholds(Some(50.0), 100.0, &t), RUNGS[0]);
        assert_eq!(select_reuse_thresholds(None, 100.0, &t), RUNGS[2]);
    }

    #[test]
    fn decisions() {
        let p = HydraParams::default().cold_center_max;
        assert_eq!(accel_bypass_decide(Prediction::NoReuse, &RUNGS[0], None, p), Decision::Bypass);
        let hot_imm = Prediction::Reuse {
            rc: RcLabel::Hot,
            ri: RiLabel::Immediate,
        };
        assert_eq!(accel_bypass_decide(hot_imm, &RUNGS[5], None, p), Decision::Bypass);
        assert_eq!(accel_bypass_decide(hot_imm, &RUNGS[4], None, p), Decision::Cache);
        let cold_near = Prediction::Reuse {
            rc: RcLabel::Cold,
            ri: RiLabel::Near,
        };
        assert_eq!(accel_bypass_decide(cold_near, &RUNGS[1], Some(1.8), p), Decision::Bypass);
        assert_eq!(accel_bypass_decide(cold_near, &RUNGS[1], Some(4.0), p), Decision::Cache);
    }
}

//! Bypass and arbitration policies, including the deadline-aware HyDRA
//! engine and the baselines it is compared against.

mod apm;
mod engine;
mod names;

pub use apm::{
    accel_bypass_decide, alg1_branch, estimate_progress_requirement, margin, progress_ratio,
    select_reuse_thresholds, select_rung, update_bypass_thresholds, Alg1Branch,
    BypassThresholds, DeadlineSpec, EpochCounters, HydraParams, Requirement, ReuseThresholds,
    RUNGS,
};
pub use engine::{LayerModels, PolicyContext, PolicyEngine, SHIP_SAMPLE_PERIOD};
pub use names::{AccelBypass, PolicyName, PolicySpec, ARP_AL_RUNG};

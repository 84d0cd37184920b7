//! Experiment orchestration: config files, end-to-end runs, sweeps,
//! policy comparisons and the report files they write.

mod config;
mod models;
mod report;
mod run;
pub mod seed;
mod sweep;

pub use config::{
    AccelSource, CoreSpec, DeadlineConfig, ExperimentConfig, LernConfig, RunConfig, CORE_WINDOW,
    MAX_CORES,
};
pub use models::{layer_model_path, load_dir, train_all, ModelCache, ModelKey};
pub use report::{CoreMetrics, MetricsReport};
pub use run::{
    build_accel_trace, build_core_traces, build_workload, run_experiment, run_experiment_with,
    run_workload,
};
pub use sweep::{
    compare_policies, sweep, with_field, write_sweep_csv, Comparison, ComparisonRow, BASELINE,
};

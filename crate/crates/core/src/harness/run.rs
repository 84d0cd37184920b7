use std::time::Instant;

use log::info;

use super::config::{ExperimentConfig, CORE_WINDOW};
use super::models::{load_dir, ModelCache};
use super::report::MetricsReport;
use super::seed::{split, Stream};
use crate::error::Result;
use crate::memsys::{Simulator, Workload};
use crate::policy::{DeadlineSpec, PolicyContext, PolicyEngine};
use crate::predictors::LrptConfig;
use crate::trace::{
    assign_requester, generate_core_trace, generate_systolic_trace, parse_trace, AccessSequence,
    TraceFormat,
};

fn load_trace(path: &std::path::Path, format: Option<TraceFormat>) -> Result<AccessSequence> {
    parse_trace(path, format.unwrap_or_else(|| TraceFormat::from_path(path)))
}

/// Core traces in requester order. Generated cores are moved into disjoint
/// address windows; recorded ones keep their addresses.
pub fn build_core_traces(cfg: &ExperimentConfig) -> Result<Vec<AccessSequence>> {
    let mut out = Vec::new();
    for spec in &cfg.cores {
        for _ in 0..spec.count {
            let id = out.len() as u8;
            let seq = match (spec.profile, &spec.trace) {
                (Some(p), _) => {
                    let fp = spec
                        .footprint
                        .unwrap_or_else(|| super::CoreSpec::default_footprint(p, &cfg.system));
                    let seed = split(cfg.seed, Stream::CoreTrace, id as u64);
                    let mut s = generate_core_trace(p, spec.length, fp, seed)?;
                    assign_requester(&mut s, id, id as u64 * CORE_WINDOW);
                    s
                }
                (None, Some(path)) => {
                    let mut s = load_trace(path, spec.format)?;
                    assign_requester(&mut s, id, 0);
                    s
                }
                (None, None) => unreachable!("validated"),
            };
            out.push(seq);
        }
    }
    Ok(out)
}

pub fn build_accel_trace(cfg: &ExperimentConfig) -> Result<Option<AccessSequence>> {
    let Some(a) = &cfg.accel else {
        return Ok(None);
    };
    let seq = match (&a.spec, &a.trace) {
        (Some(spec), _) => generate_systolic_trace(spec, split(cfg.seed, Stream::AccelTrace, 0))?,
        (None, Some(path)) => load_trace(path, a.format)?,
        (None, None) => unreachable!("validated"),
    };
    Ok(Some(seq))
}

pub fn build_workload(cfg: &ExperimentConfig) -> Result<Workload> {
    Ok(Workload {
        cores: build_core_traces(cfg)?,
        accel: build_accel_trace(cfg)?,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    run_experiment_with(cfg, &ModelCache::new())
}

/// Runs one configured experiment, training LERN models through `cache`
/// when the policy needs them.
pub fn run_experiment_with(cfg: &ExperimentConfig, cache: &ModelCache) -> Result<MetricsReport> {
    let started = Instant::now();
    cfg.validate()?;
    let workload = build_workload(cfg)?;
    let mut r = run_workload(cfg, workload, cache)?;
    r.wall_clock = started.elapsed();
    info!(
        "{}: throughput {:.4}, DMR {:.3} over {} sets, {:.2?}",
        r.policy, r.throughput, r.dmr, r.input_sets, r.wall_clock
    );
    Ok(r)
}

/// Like [`run_experiment_with`] on an already built workload, so callers
/// running many policies can build traces once.
pub fn run_workload(
    cfg: &ExperimentConfig,
    workload: Workload,
    cache: &ModelCache,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let name = cfg.policy_name()?;
    let limits = cfg.sim_limits()?;
    let m = workload.accel.as_ref().map_or(0, |a| a.len() as u64);

    let models = match (&workload.accel, name.uses_lern()) {
        (Some(accel), true) => Some(match &cfg.lern.models {
            Some(dir) => load_dir(accel, dir)?,
            None => cache.get_or_train(
                accel,
                cfg.lern.block_bits,
                cfg.seed,
                cfg.lern.training_hash()?,
                &cfg.lern.params,
            )?,
        }),
        (None, true) => Some(Default::default()),
        _ => None,
    };
    let ctx = PolicyContext {
        deadline: DeadlineSpec {
            m,
            d_cycles: limits.d_cycles,
            et: cfg.system.epoch_cycles,
        },
        params: cfg.hydra,
        base: cfg.thresholds,
        lrpt: if name.uses_lern() {
            LrptConfig {
                hash: cfg.lern.table_hash()?,
            }
        } else {
            LrptConfig::default()
        },
        models,
        seed: split(cfg.seed, Stream::Policy, 0),
    };
    let policy = PolicyEngine::new(name, ctx)?;
    let sim = Simulator::new(cfg.system, workload, Box::new(policy), limits)?;
    let result = sim.run()?;
    Ok(MetricsReport::from_sim(
        name.to_string(),
        cfg.seed,
        limits.d_cycles,
        cfg.system.epoch_cycles,
        result,
    ))
}

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::models::ModelCache;
use super::report::{write_lines, MetricsReport};
use super::run::{build_workload, run_workload};
use crate::error::{Error, Result};
use crate::policy::PolicyName;

/// Returns `template` with the dotted field `axis` (e.g. `deadline.ips`,
/// `system.epoch_cycles`) set to `value`.
pub fn with_field(
    template: &ExperimentConfig,
    axis: &str,
    value: &toml::Value,
) -> Result<ExperimentConfig> {
    let invalid = |why: &str| Error::Config(format!("invalid sweep axis '{axis}': {why}"));
    let mut root = toml::Value::try_from(template).map_err(|e| invalid(&e.to_string()))?;
    let parts: Vec<&str> = axis.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid("empty path segment"));
    }
    let (last, parents) = parts.split_last().unwrap();
    let mut node = &mut root;
    for p in parents {
        node = node
            .get_mut(*p)
            .filter(|n| n.is_table())
            .ok_or_else(|| invalid(&format!("no table '{p}'")))?;
    }
    node.as_table_mut()
        .unwrap()
        .insert((*last).to_string(), value.clone());
    // unknown fields are rejected while deserializing
    let mut cfg: ExperimentConfig = root.try_into().map_err(|e: toml::de::Error| {
        invalid(e.message())
    })?;
    if axis.starts_with("deadline.") {
        // a sweep over one deadline form replaces the other
        match *last {
            "ips" => cfg.deadline.d_cycles = None,
            "d_cycles" => cfg.deadline.ips = None,
            _ => {}
        }
    }
    Ok(cfg)
}

/// One run per value, in value order. LERN models are trained once and
/// shared through `cache`.
pub fn sweep(
    template: &ExperimentConfig,
    axis: &str,
    values: &[toml::Value],
    cache: &ModelCache,
) -> Result<Vec<MetricsReport>> {
    let cfgs = values
        .iter()
        .map(|v| with_field(template, axis, v))
        .collect::<Result<Vec<_>>>()?;
    for c in &cfgs {
        c.validate()?;
    }
    cfgs.par_iter()
        .map(|c| super::run::run_experiment_with(c, cache))
        .collect()
}

pub fn write_sweep_csv(
    path: &Path,
    axis: &str,
    values: &[toml::Value],
    reports: &[MetricsReport],
) -> Result<()> {
    write_lines(
        path,
        &format!("{axis},policy,d_cycles,throughput,dmr,input_sets,deadline_misses,core_br,accel_br,llc_hit_core,llc_hit_accel"),
        values.iter().zip(reports).map(|(v, r)| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                v,
                r.policy,
                r.d_cycles,
                r.throughput,
                r.dmr,
                r.input_sets,
                r.deadline_misses,
                r.core_bypass_rate,
                r.accel_bypass_rate,
                r.llc_hit_rate_core,
                r.llc_hit_rate_accel
            )
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub throughput: f64,
    /// Throughput over FIFO-NB's on the same traces.
    pub normalized_throughput: f64,
    pub dmr: f64,
    pub input_sets: u64,
    pub deadline_misses: u64,
    pub core_br: f64,
    pub accel_br: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline_throughput: f64,
    pub rows: Vec<ComparisonRow>,
    #[serde(skip)]
    pub reports: Vec<MetricsReport>,
}

pub const BASELINE: PolicyName = PolicyName::FifoNb;

/// Runs every policy on the same traces and seeds. FIFO-NB is also run as
/// the normalization baseline when it is not in the list.
pub fn compare_policies(
    cfg: &ExperimentConfig,
    policies: &[PolicyName],
    cache: &ModelCache,
) -> Result<Comparison> {
    if policies.len() < 2 {
        return Err(Error::Config("compare needs at least two policies".into()));
    }
    cfg.validate()?;
    let workload = build_workload(cfg)?;
    let mut all: Vec<PolicyName> = policies.to_vec();
    let base_at = match all.iter().position(|&p| p == BASELINE) {
        Some(i) => i,
        None => {
            all.push(BASELINE);
            all.len() - 1
        }
    };
    let reports = all
        .par_iter()
        .map(|p| {
            let mut c = cfg.clone();
            c.policy = p.to_string();
            run_workload(&c, workload.clone(), cache)
        })
        .collect::<Result<Vec<_>>>()?;
    let base = reports[base_at].throughput;
    let rows = reports[..policies.len()]
        .iter()
        .map(|r| ComparisonRow {
            policy: r.policy.clone(),
            throughput: r.throughput,
            normalized_throughput: if base > 0.0 { r.throughput / base } else { 0.0 },
            dmr: r.dmr,
            input_sets: r.input_sets,
            deadline_misses: r.deadline_misses,
            core_br: r.core_bypass_rate,
            accel_br: r.accel_bypass_rate,
        })
        .collect();
    Ok(Comparison {
        baseline_throughput: base,
        rows,
        reports: reports.into_iter().take(policies.len()).collect(),
    })
}

impl Comparison {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_lines(
            path,
            "policy,throughput,normalized_throughput,dmr,input_sets,deadline_misses,core_br,accel_br",
            self.rows.iter().map(|r| {
                format!(
                    "{},{},{:.6},{},{},{},{},{}",
                    r.policy,
                    r.throughput,
                    r.normalized_throughput,
                    r.dmr,
                    r.input_sets,
                    r.deadline_misses,
                    r.core_br,
                    r.accel_br
                )
            }),
        )
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lern::LernParams;
use crate::memsys::{SimLimits, SystemConfig};
use crate::policy::{BypassThresholds, HydraParams, PolicyName};
use crate::predictors::{HashScheme, LrptConfig};
use crate::trace::{AcceleratorSpec, CoreProfile, TraceFormat};

/// Most cores a config may declare; each generated core gets its own
/// address window below the accelerator regions.
pub const MAX_CORES: usize = 32;

/// Address distance between the windows of two generated cores.
pub const CORE_WINDOW: u64 = 0x4_0000_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub policy: String,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub run: RunConfig,
    pub deadline: DeadlineConfig,
    pub cores: Vec<CoreSpec>,
    /// Left out, the accelerator issues nothing and DMR is reported as
    /// having no input sets.
    #[serde(default)]
    pub accel: Option<AccelSource>,
    #[serde(default)]
    pub lern: LernConfig,
    #[serde(default)]
    pub hydra: HydraParams,
    #[serde(default)]
    pub thresholds: BypassThresholds,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub max_input_sets: Option<u64>,
    pub core_instr_budget: Option<u64>,
    pub warmup_accesses: u64,
    pub max_cycles: Option<u64>,
    pub event_log: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = SimLimits::default();
        Self {
            max_input_sets: d.max_input_sets,
            core_instr_budget: d.core_instr_budget,
            warmup_accesses: d.warmup_accesses,
            max_cycles: None,
            event_log: false,
        }
    }
}

/// Either a frame rate converted through the clock, or a cycle count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeadlineConfig {
    #[serde(default)]
    pub ips: Option<f64>,
    #[serde(default = "default_clock")]
    pub clock_hz: f64,
    #[serde(default)]
    pub d_cycles: Option<u64>,
}

fn default_clock() -> f64 {
    2e9
}

impl DeadlineConfig {
    pub fn from_ips(ips: f64) -> Self {
        Self {
            ips: Some(ips),
            clock_hz: default_clock(),
            d_cycles: None,
        }
    }

    pub fn d_cycles(&self) -> Result<u64> {
        match (self.ips, self.d_cycles) {
            (Some(_), Some(_)) => Err(Error::Config(
                "deadline: give either ips or d_cycles, not both".into(),
            )),
            (None, None) => Err(Error::Config("deadline: ips or d_cycles required".into())),
            (None, Some(0)) => Err(Error::Config("deadline.d_cycles must be positive".into())),
            (None, Some(d)) => Ok(d),
            (Some(ips), None) => {
                if !ips.is_finite() || ips <= 0.0 || self.clock_hz.is_nan() || self.clock_hz <= 0.0 {
                    return Err(Error::Config(
                        "deadline.ips and clock_hz must be positive".into(),
                    ));
                }
                Ok(((self.clock_hz / ips).round() as u64).max(1))
            }
        }
    }
}

/// A generated core (`profile`) or a recorded one (`trace`), repeated
/// `count` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreSpec {
    #[serde(default)]
    pub profile: Option<CoreProfile>,
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<TraceFormat>,
    /// Accesses per generated trace (the trace loops).
    #[serde(default = "default_core_length")]
    pub length: usize,
    /// Bytes; defaults depend on the profile and the cache sizes.
    #[serde(default)]
    pub footprint: Option<u64>,
    #[serde(default = "one")]
    pub count: usize,
}

fn default_core_length() -> usize {
    200_000
}

fn one() -> usize {
    1
}

impl CoreSpec {
    pub fn generated(profile: CoreProfile) -> Self {
        Self {
            profile: Some(profile),
            trace: None,
            format: None,
            length: default_core_length(),
            footprint: None,
            count: 1,
        }
    }

    pub fn default_footprint(profile: CoreProfile, sys: &SystemConfig) -> u64 {
        match profile {
            CoreProfile::CI => sys.private.size_bytes / 2,
            CoreProfile::LI => sys.llc.size_bytes / 2,
            CoreProfile::MI => sys.llc.size_bytes * 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelSource {
    #[serde(default)]
    pub spec: Option<AcceleratorSpec>,
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<TraceFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LernConfig {
    /// L-RPT indexing, e.g. `bitmask19` or `splitmix32:17`.
    pub table: String,
    /// Train on table indices instead of full block addresses.
    pub hashed_training: bool,
    /// Directory of exported `layerN.csv` models to use instead of training.
    pub models: Option<PathBuf>,
    pub block_bits: u32,
    pub params: LernParams,
}

impl Default for LernConfig {
    fn default() -> Self {
        Self {
            table: LrptConfig::default().hash.to_string(),
            hashed_training: false,
            models: None,
            block_bits: 6,
            params: LernParams::default(),
        }
    }
}

impl LernConfig {
    pub fn table_hash(&self) -> Result<HashScheme> {
        let h: HashScheme = self.table.parse()?;
        h.validate()?;
        Ok(h)
    }

    pub fn training_hash(&self) -> Result<Option<HashScheme>> {
        self.hashed_training.then(|| self.table_hash()).transpose()
    }
}

fn check_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} '{}' does not exist",
            path.display()
        )))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config: {e}")))
    }

    /// Makes relative trace and model paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for c in &mut self.cores {
            if let Some(t) = c.trace.as_mut() {
                fix(t);
            }
        }
        if let Some(t) = self.accel.as_mut().and_then(|a| a.trace.as_mut()) {
            fix(t);
        }
        if let Some(m) = self.lern.models.as_mut() {
            fix(m);
        }
    }

    pub fn policy_name(&self) -> Result<PolicyName> {
        self.policy.parse()
    }

    pub fn core_count(&self) -> usize {
        self.cores.iter().map(|c| c.count).sum()
    }

    pub fn sim_limits(&self) -> Result<SimLimits> {
        let d = SimLimits::default();
        Ok(SimLimits {
            max_input_sets: self.run.max_input_sets,
            core_instr_budget: self.run.core_instr_budget,
            warmup_accesses: self.run.warmup_accesses,
            d_cycles: self.deadline.d_cycles()?,
            max_cycles: self.run.max_cycles.unwrap_or(d.max_cycles),
            event_log: self.run.event_log,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let policy = self.policy_name()?;
        self.system.validate()?;
        self.deadline.d_cycles()?;
        let n = self.core_count();
        if n == 0 {
            return Err(Error::Config("at least one core is required".into()));
        }
        if n > MAX_CORES {
            return Err(Error::Config(format!("at most {MAX_CORES} cores")));
        }
        for (i, c) in self.cores.iter().enumerate() {
            match (&c.profile, &c.trace) {
                (Some(_), None) => {
                    if c.length == 0 {
                        return Err(Error::Config(format!("cores[{i}].length must be > 0")));
                    }
                    if c.footprint == Some(0) {
                        return Err(Error::Config(format!("cores[{i}].footprint must be > 0")));
                    }
                }
                (None, Some(t)) => check_file(t, "core trace")?,
                _ => {
                    return Err(Error::Config(format!(
                        "cores[{i}] needs exactly one of profile or trace"
                    )))
                }
            }
        }
        if let Some(a) = &self.accel {
            match (&a.spec, &a.trace) {
                (Some(s), None) => s.validate()?,
                (None, Some(t)) => check_file(t, "accelerator trace")?,
                _ => {
                    return Err(Error::Config(
                        "accel needs exactly one of spec or trace".into(),
                    ))
                }
            }
        }
        if self.run.core_instr_budget.is_none()
            && self.run.max_input_sets.is_none()
            && self.run.max_cycles.is_none()
        {
            return Err(Error::Config(
                "run needs a stop condition: core_instr_budget, max_input_sets or max_cycles"
                    .into(),
            ));
        }
        if !self.thresholds.validate_base() {
            return Err(Error::Config(
                "thresholds must satisfy 0 < t_b < t_a[0] < .. < t_a[3]".into(),
            ));
        }
        if policy.uses_lern() {
            self.lern.table_hash()?;
            if self.lern.block_bits != 6 {
                return Err(Error::Config("lern.block_bits must be 6".into()));
            }
            if self.lern.params.k == 0 {
                return Err(Error::Config("lern.params.k must be positive".into()));
            }
            if let Some(dir) = &self.lern.models {
                if !dir.is_dir() {
                    return Err(Error::Config(format!(
                        "model directory '{}' does not exist",
                        dir.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
policy = "FIFO-NB"
[deadline]
ips = 10
[[cores]]
profile = "CI"
"#;

    #[test]
    fn minimal_config_defaults() {
        let c = ExperimentConfig::from_toml(MIN).unwrap();
        c.validate().unwrap();
        assert_eq!(c.deadline.d_cycles().unwrap(), 200_000_000);
        assert_eq!(c.run.warmup_accesses, 100_000);
        assert_eq!(c.run.core_instr_budget, Some(4_000_000));
        assert_eq!(c.cores[0].length, 200_000);
        assert!(c.accel.is_none());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::from_toml(MIN).unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn rejects_bad_configs() {
        let unknown = format!("{MIN}\nbogus = 1\n");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());

        let mut c = ExperimentConfig::from_toml(MIN).unwrap();
        c.cores.clear();
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::from_toml(MIN).unwrap();
        c.policy = "LRU".into();
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::from_toml(MIN).unwrap();
        c.deadline.d_cycles = Some(5);
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::from_toml(MIN).unwrap();
        c.cores[0].trace = Some("/nonexistent/trace.csv".into());
        c.cores[0].profile = None;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}

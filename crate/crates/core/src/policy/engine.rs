use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::apm::{
    accel_bypass_decide, estimate_progress_requirement, progress_ratio, select_rung,
    update_bypass_thresholds, BypassThresholds, DeadlineSpec, EpochCounters, HydraParams,
    Requirement, ReuseThresholds, RUNGS,
};
use super::names::{AccelBypass, PolicyName, PolicySpec};
use crate::error::{Error, Result};
use crate::lern::ClusterModel;
use crate::memsys::{
    AccelReq, ApmSnapshot, Arbitration, Decision, EpochTelemetry, LlcPolicy, OwnerClass,
};
use crate::predictors::{Lrpt, LrptConfig, ShipEvent, ShipPrediction, ShipTable};

/// One in this many SHiP "no reuse" predictions is cached anyway, so a
/// signature that went to zero can still learn it is reused.
pub const SHIP_SAMPLE_PERIOD: u32 = 32;

/// Per-layer models for the L-RPT, shared between runs.
pub type LayerModels = Arc<BTreeMap<u32, ClusterModel>>;

#[derive(Debug, Clone)]
pub struct PolicyContext {
    pub deadline: DeadlineSpec,
    pub params: HydraParams,
    pub base: BypassThresholds,
    pub lrpt: LrptConfig,
    pub models: Option<LayerModels>,
    pub seed: u64,
}

struct Ship {
    table: ShipTable,
    sampled: u32,
}

impl Ship {
    fn new() -> Self {
        Self {
            table: ShipTable::default(),
            sampled: 0,
        }
    }

    fn decide(&mut self, signature: u64) -> Decision {
        match self.table.predict(signature) {
            ShipPrediction::Reuse => Decision::Cache,
            ShipPrediction::NoReuse => {
                self.sampled += 1;
                if self.sampled.is_multiple_of(SHIP_SAMPLE_PERIOD) {
                    Decision::Cache
                } else {
                    Decision::Bypass
                }
            }
        }
    }
}

/// A configured policy bundle: arbitration, core bypass, accelerator bypass
/// and, for the deadline-aware LERN variants, the progress monitor.
pub struct PolicyEngine {
    name: PolicyName,
    spec: PolicySpec,
    ctx: PolicyContext,
    core_ship: Ship,
    accel_ship: Option<Ship>,
    lrpt: Option<Lrpt>,
    thresholds: BypassThresholds,
    rung: u8,
    rng: ChaCha8Rng,
}

impl PolicyEngine {
    pub fn new(name: PolicyName, ctx: PolicyContext) -> Result<Self> {
        let spec = name.spec();
        if !ctx.base.validate_base() {
            return Err(Error::Config(
                "base thresholds must satisfy 0 < T_B < T_A1 < T_A2 < T_A3 < T_A4".into(),
            ));
        }
        let lern = matches!(
            spec.accel,
            AccelBypass::LernFixed { .. } | AccelBypass::LernDeadline
        );
        let lrpt = if lern {
            if ctx.models.is_none() {
                return Err(Error::Config(format!("{name} needs LERN models")));
            }
            Some(Lrpt::new(ctx.lrpt)?)
        } else {
            None
        };
        let accel_ship = match spec.accel {
            AccelBypass::Ship { .. } if !spec.shared_ship => Some(Ship::new()),
            _ => None,
        };
        let rung = match spec.accel {
            AccelBypass::LernFixed { rung } => rung,
            _ => select_rung(1.0, &ctx.base),
        };
        Ok(Self {
            name,
            spec,
            core_ship: Ship::new(),
            accel_ship,
            lrpt,
            thresholds: ctx.base,
            rung,
            rng: ChaCha8Rng::seed_from_u64(ctx.seed),
            ctx,
        })
    }

    pub fn name(&self) -> PolicyName {
        self.name
    }

    pub fn rung(&self) -> u8 {
        self.rung
    }

    pub fn reuse_thresholds(&self) -> ReuseThresholds {
        RUNGS[self.rung as usize]
    }

    /// Identities of the SHiP tables used for core and accelerator
    /// requests; equal only for the shared-predictor variant.
    pub fn ship_table_ids(&self) -> (u64, Option<u64>) {
        let core = self.core_ship.table.id();
        let accel = match self.spec.accel {
            AccelBypass::Ship { .. } if self.spec.shared_ship => Some(core),
            _ => self.accel_ship.as_ref().map(|s| s.table.id()),
        };
        (core, accel)
    }

    pub fn lrpt(&self) -> Option<&Lrpt> {
        self.lrpt.as_ref()
    }

    fn accel_ship(&mut self) -> &mut Ship {
        match self.accel_ship.as_mut() {
            Some(s) => s,
            None => &mut self.core_ship,
        }
    }
}

impl LlcPolicy for PolicyEngine {
    fn arbitration(&self) -> Arbitration {
        self.spec.arbitration
    }

    fn on_layer(&mut self, layer: u32) -> Result<()> {
        let Some(lrpt) = self.lrpt.as_mut() else {
            return Ok(());
        };
        let models = self.ctx.models.as_ref().expect("checked in new");
        let model = models
            .get(&layer)
            .ok_or_else(|| Error::Config(format!("no LERN model for layer {layer}")))?;
        lrpt.load(model)
    }

    fn accel_decide(&mut self, req: &AccelReq) -> Decision {
        match self.spec.accel {
            AccelBypass::None => Decision::Cache,
            AccelBypass::Ship { gate } => {
                if let Some(t) = gate {
                    let need = t * self.ctx.deadline.ma_global();
                    if req.epoch_completions as f64 <= need {
                        return Decision::Cache;
                    }
                }
                let sig = self.accel_ship().table.accel_signature(req.address);
                self.accel_ship().decide(sig)
            }
            AccelBypass::LernFixed { .. } | AccelBypass::LernDeadline => {
                let lrpt = self.lrpt.as_ref().expect("LERN policies own a table");
                accel_bypass_decide(
                    lrpt.lookup(req.address),
                    &RUNGS[self.rung as usize],
                    lrpt.cold_center(),
                    self.ctx.params.cold_center_max,
                )
            }
            AccelBypass::Random { p } => {
                if self.rng.gen_bool(p) {
                    Decision::Bypass
                } else {
                    Decision::Cache
                }
            }
        }
    }

    fn core_decide(&mut self, _core: u8, tag: u64, _address: u64) -> Decision {
        if !self.spec.core_bypass {
            return Decision::Cache;
        }
        let sig = self.core_ship.table.core_signature(tag);
        self.core_ship.decide(sig)
    }

    fn signature(&self, class: OwnerClass, tag: u64, address: u64) -> u64 {
        match class {
            OwnerClass::Core => self.core_ship.table.core_signature(tag),
            OwnerClass::Accel => self.core_ship.table.accel_signature(address),
        }
    }

    fn observe(&mut self, class: OwnerClass, signature: u64, event: ShipEvent) {
        match class {
            OwnerClass::Core => self.core_ship.table.observe(signature, event),
            OwnerClass::Accel => {
                if matches!(self.spec.accel, AccelBypass::Ship { .. }) {
                    self.accel_ship().table.observe(signature, event)
                }
            }
        }
    }

    fn epoch_begin(&mut self, snap: &ApmSnapshot) -> Option<EpochTelemetry> {
        if self.spec.accel != AccelBypass::LernDeadline {
            return None;
        }
        let rung_row = |s: &Self, ma_i: f64, ma_hat: f64, margin: f64| {
            let th = RUNGS[s.rung as usize];
            EpochTelemetry {
                epoch: snap.epoch,
                ma_i,
                ma_hat,
                rung: s.rung,
                ri_th: th.ri_th,
                rc_th: th.rc_th,
                margin,
            }
        };
        if !snap.set_active {
            return Some(rung_row(self, 0.0, 0.0, 0.0));
        }
        let d = DeadlineSpec {
            m: snap.m,
            d_cycles: snap.d_cycles,
            et: snap.epoch_cycles,
        };
        let amal = (snap.last_completions > 0)
            .then(|| snap.last_active_cycles as f64 / snap.last_completions as f64);
        let ma_hat = amal.map(|a| snap.epoch_cycles as f64 / a);
        let counters = EpochCounters {
            ra: snap.ra,
            rt: snap.rt,
            mr: snap.mr,
            ma_past: EpochCounters::ma_past_from(&d, snap.ra, snap.rt),
            amal,
        };
        match estimate_progress_requirement(&counters, &d, &self.ctx.params) {
            Requirement::DeadlineMissed => {
                // late already: stop cluster-based bypass until the set ends
                self.rung = 0;
                Some(rung_row(self, f64::NAN, ma_hat.unwrap_or(f64::NAN), f64::NAN))
            }
            Requirement::Accesses { ma_i, margin } => {
                let from = if self.ctx.params.compound {
                    self.thresholds
                } else {
                    self.ctx.base
                };
                self.thresholds =
                    update_bypass_thresholds(ma_i, d.ma_global(), &from, &self.ctx.params);
                self.rung = select_rung(progress_ratio(ma_hat, ma_i), &self.thresholds);
                Some(rung_row(self, ma_i, ma_hat.unwrap_or(f64::NAN), margin))
            }
        }
    }

    fn on_set_end(&mut self) {
        if self.spec.accel == AccelBypass::LernDeadline {
            self.thresholds = self.ctx.base;
            self.rung = select_rung(1.0, &self.ctx.base);
        }
    }
}

//! Timed memory system: private caches per core, one shared LLC with a
//! single request port, FIFO DRAM, and the event loop that drives them.

mod cache;
mod dram;
mod replay;
mod sim;

pub use cache::{Cache, CacheGeometry, CacheLine, Evicted, OwnerClass};
pub use dram::{Dram, DramConfig};
pub use replay::{replay_standalone, ReplayStats};
pub use sim::{
    arbitrate, AccelStats, CoreStats, OccupancySample, QueuedReq, SimLimits, SimResult,
    Simulator, Workload,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictors::ShipEvent;
use crate::trace::AccessKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arbitration {
    Fifo,
    Arp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Cache,
    Bypass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub private: CacheGeometry,
    pub llc: CacheGeometry,
    #[serde(default)]
    pub dram: DramConfig,
    /// Cycles between two LLC request services; defaults to the tag latency.
    #[serde(default)]
    pub llc_port_gap: Option<u64>,
    #[serde(default = "default_window")]
    pub accel_window: usize,
    #[serde(default = "default_epoch")]
    pub epoch_cycles: u64,
}

fn default_window() -> usize {
    16
}

fn default_epoch() -> u64 {
    200_000
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            private: CacheGeometry {
                size_bytes: 256 << 10,
                block_bytes: 64,
                ways: 8,
                tag_latency: 2,
                data_latency: 2,
            },
            llc: CacheGeometry {
                size_bytes: 8 << 20,
                block_bytes: 64,
                ways: 16,
                tag_latency: 4,
                data_latency: 8,
            },
            dram: DramConfig::default(),
            llc_port_gap: None,
            accel_window: default_window(),
            epoch_cycles: default_epoch(),
        }
    }
}

impl SystemConfig {
    pub fn port_gap(&self) -> u64 {
        self.llc_port_gap.unwrap_or(self.llc.tag_latency).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.private.validate()?;
        self.llc.validate()?;
        if self.accel_window == 0 {
            return Err(Error::Config("accel_window must be positive".into()));
        }
        if self.epoch_cycles == 0 {
            return Err(Error::Config("epoch_cycles must be positive".into()));
        }
        if self.dram.min_gap == 0 {
            return Err(Error::Config("dram.min_gap must be positive".into()));
        }
        Ok(())
    }
}

/// An accelerator request as seen by the bypass policy at service time.
#[derive(Debug, Clone, Copy)]
pub struct AccelReq {
    pub address: u64,
    pub kind: AccessKind,
    /// Position within the input set.
    pub position: usize,
    pub layer: u32,
    /// Accesses completed so far in the current epoch.
    pub epoch_completions: u64,
}

/// Progress-monitor view handed to the policy at every epoch boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApmSnapshot {
    pub cycle: u64,
    pub epoch: u64,
    pub epoch_cycles: u64,
    /// An input set is in progress.
    pub set_active: bool,
    /// Accesses per input set (M).
    pub m: u64,
    pub d_cycles: u64,
    /// Remaining accesses in the current set.
    pub ra: u64,
    /// Cycles left to the deadline; negative once it has passed.
    pub rt: i64,
    /// Core LLC read miss rate over the last epoch.
    pub mr: f64,
    /// Accesses completed in the last epoch and the cycles the accelerator
    /// spent on an input set during it.
    pub last_completions: u64,
    pub last_active_cycles: u64,
}

/// One row of per-epoch policy telemetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochTelemetry {
    pub epoch: u64,
    pub ma_i: f64,
    pub ma_hat: f64,
    pub rung: u8,
    pub ri_th: i8,
    pub rc_th: i8,
    pub margin: f64,
}

/// Everything the event loop asks of a bypass/arbitration policy.
pub trait LlcPolicy: Send {
    fn arbitration(&self) -> Arbitration;

    /// Accelerator moved on to `layer` (reload per-layer state here).
    fn on_layer(&mut self, _layer: u32) -> Result<()> {
        Ok(())
    }

    /// Decision for an accelerator request that missed (reads) or for any
    /// accelerator write.
    fn accel_decide(&mut self, req: &AccelReq) -> Decision;

    /// Decision for the LLC fill of a core read miss. Writebacks never ask.
    fn core_decide(&mut self, core: u8, tag: u64, address: u64) -> Decision;

    /// Predictor signature stored with a line when it is inserted.
    fn signature(&self, _class: OwnerClass, _tag: u64, _address: u64) -> u64 {
        0
    }

    /// Re-reference and dead-eviction feedback for lines of `class`.
    fn observe(&mut self, _class: OwnerClass, _signature: u64, _event: ShipEvent) {}

    fn epoch_begin(&mut self, snap: &ApmSnapshot) -> Option<EpochTelemetry>;

    /// The current input set finished (or the accelerator went idle).
    fn on_set_end(&mut self) {}
}

/// Never bypasses; arbitration as given.
#[derive(Debug, Clone, Copy)]
pub struct NoBypass(pub Arbitration);

impl LlcPolicy for NoBypass {
    fn arbitration(&self) -> Arbitration {
        self.0
    }

    fn accel_decide(&mut self, _req: &AccelReq) -> Decision {
        Decision::Cache
    }

    fn core_decide(&mut self, _core: u8, _tag: u64, _address: u64) -> Decision {
        Decision::Cache
    }

    fn epoch_begin(&mut self, _snap: &ApmSnapshot) -> Option<EpochTelemetry> {
        None
    }
}

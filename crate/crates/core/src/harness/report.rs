use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memsys::{EpochTelemetry, OccupancySample, SimResult};

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreMetrics {
    pub core: usize,
    pub retired: u64,
    pub cycles: u64,
    /// Retired proxy instructions per cycle of the measured window.
    pub ipc: f64,
    pub accesses: u64,
    pub private_hits: u64,
    pub llc_reads: u64,
    pub llc_read_hits: u64,
    pub llc_bypassed: u64,
    pub llc_writebacks: u64,
    pub llc_wait_cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: String,
    pub seed: u64,
    pub d_cycles: u64,
    pub epoch_cycles: u64,
    pub window_start: u64,
    pub window_cycles: u64,
    pub truncated: bool,
    pub cores: Vec<CoreMetrics>,
    /// Sum of per-core IPC.
    pub throughput: f64,
    /// Accesses per input set.
    pub accel_m: u64,
    pub input_sets: u64,
    pub deadline_misses: u64,
    pub dmr: f64,
    /// No accelerator input set finished or was cut off, so `dmr` is 0 by
    /// convention rather than measured.
    pub no_input_sets: bool,
    pub accel_llc_requests: u64,
    pub accel_bypassed: u64,
    pub accel_cached: u64,
    pub accel_bypass_rate: f64,
    pub core_bypass_rate: f64,
    pub llc_hit_rate_core: f64,
    pub llc_hit_rate_accel: f64,
    pub frame_times: Vec<u64>,
    pub dram_reads: u64,
    pub dram_writes: u64,
    pub occupancy: Vec<OccupancySample>,
    pub telemetry: Vec<EpochTelemetry>,
    /// Kept out of report.json so identical runs give identical files.
    #[serde(skip)]
    pub wall_clock: Duration,
    #[serde(skip)]
    pub event_log: Vec<String>,
}

impl MetricsReport {
    pub fn from_sim(policy: String, seed: u64, d_cycles: u64, epoch_cycles: u64, r: SimResult) -> Self {
        let cycles = r.elapsed();
        let cores: Vec<CoreMetrics> = r
            .cores
            .iter()
            .enumerate()
            .map(|(i, c)| CoreMetrics {
                core: i,
                retired: c.retired,
                cycles,
                ipc: ratio(c.retired, cycles),
                accesses: c.accesses,
                private_hits: c.private_hits,
                llc_reads: c.llc_reads,
                llc_read_hits: c.llc_read_hits,
                llc_bypassed: c.llc_bypassed,
                llc_writebacks: c.llc_writebacks,
                llc_wait_cycles: c.llc_wait_cycles,
            })
            .collect();
        let throughput = cores.iter().map(|c| c.ipc).sum();
        let core_reads: u64 = cores.iter().map(|c| c.llc_reads).sum();
        let core_hits: u64 = cores.iter().map(|c| c.llc_read_hits).sum();
        let core_bypassed: u64 = cores.iter().map(|c| c.llc_bypassed).sum();
        let a = r.accel.unwrap_or_default();
        Self {
            policy,
            seed,
            d_cycles,
            epoch_cycles,
            window_start: r.window_start,
            window_cycles: cycles,
            truncated: r.truncated,
            cores,
            throughput,
            accel_m: a.m,
            input_sets: a.input_sets,
            deadline_misses: a.deadline_misses,
            dmr: ratio(a.deadline_misses, a.input_sets),
            no_input_sets: a.input_sets == 0,
            accel_llc_requests: a.llc_requests,
            accel_bypassed: a.bypassed,
            accel_cached: a.cached,
            accel_bypass_rate: ratio(a.bypassed, a.llc_requests),
            core_bypass_rate: ratio(core_bypassed, core_reads),
            llc_hit_rate_core: ratio(core_hits, core_reads),
            llc_hit_rate_accel: ratio(a.read_hits, a.read_hits + a.read_misses),
            frame_times: a.frame_times,
            dram_reads: r.dram_reads,
            dram_writes: r.dram_writes,
            occupancy: r.occupancy,
            telemetry: r.telemetry,
            wall_clock: Duration::ZERO,
            event_log: r.event_log,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json`, `epochs.csv`, `occupancy.csv` and, when the
    /// event log was on, `events.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("report.json");
        std::fs::write(&path, self.to_json() + "\n").map_err(|e| Error::io(&path, e))?;
        self.write_epochs(&dir.join("epochs.csv"))?;
        self.write_occupancy(&dir.join("occupancy.csv"))?;
        if !self.event_log.is_empty() {
            write_lines(
                &dir.join("events.csv"),
                "cycle,event,req,addr,detail",
                self.event_log.iter().cloned(),
            )?;
        }
        Ok(())
    }

    pub fn write_epochs(&self, path: &Path) -> Result<()> {
        write_lines(
            path,
            "epoch,ma_i,ma_hat,rung,ri_th,rc_th,margin",
            self.telemetry.iter().map(|t| {
                format!(
                    "{},{},{},{},{},{},{}",
                    t.epoch, t.ma_i, t.ma_hat, t.rung, t.ri_th, t.rc_th, t.margin
                )
            }),
        )
    }

    pub fn write_occupancy(&self, path: &Path) -> Result<()> {
        write_lines(
            path,
            "cycle,core_lines,accel_lines",
            self.occupancy
                .iter()
                .map(|o| format!("{},{},{}", o.cycle, o.core_lines, o.accel_lines)),
        )
    }
}

pub(crate) fn write_lines(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "{header}").map_err(io)?;
    for r in rows {
        writeln!(w, "{r}").map_err(io)?;
    }
    w.flush().map_err(io)
}

use std::process::Command;

use hydra_core::harness::{
    compare_policies, run_experiment, sweep, with_field, ExperimentConfig, ModelCache,
};
use hydra_core::policy::PolicyName;

const SMALL: &str = r#"
seed = 3
policy = "HyDRA"

[system]
epoch_cycles = 10000
llc_port_gap = 1
[system.private]
size_bytes = 8192
ways = 8
tag_latency = 2
data_latency = 2
[system.llc]
size_bytes = 65536
ways = 16
tag_latency = 4
data_latency = 8

[run]
core_instr_budget = 400000
warmup_accesses = 4000
max_input_sets = 3

[deadline]
d_cycles = 60000

[[cores]]
profile = "LI"
count = 3
length = 20000
footprint = 24576

[accel.spec]
pe_rows = 8
pe_cols = 8
sram_ifmap_kb = 16
sram_filter_kb = 16
sram_ofmap_kb = 16
word_bytes = 64

[[accel.spec.layers]]
ifmap_h = 8
ifmap_w = 8
filt_h = 3
filt_w = 3
channels = 8
num_filters = 8
stride = 1
dataflow = "OS"

[[accel.spec.layers]]
ifmap_h = 8
ifmap_w = 8
filt_h = 3
filt_w = 3
channels = 8
num_filters = 8
stride = 1
dataflow = "WS"
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml(SMALL).unwrap()
}

#[test]
fn compute_bound_core_alone() {
    let cfg = ExperimentConfig::from_toml(
        r#"
policy = "FIFO-NB"
[run]
core_instr_budget = 1000000
warmup_accesses = 20000
[deadline]
d_cycles = 100000
[[cores]]
profile = "CI"
length = 20000
"#,
    )
    .unwrap();
    let r = run_experiment(&cfg).unwrap();
    assert!(r.no_input_sets);
    assert_eq!(r.dmr, 0.0);
    assert_eq!(r.input_sets, 0);
    // one instruction per cycle apart from rare private misses
    assert!(r.throughput > 0.9 && r.throughput <= 1.0, "{}", r.throughput);
}

#[test]
fn reports_are_reproducible() {
    let cfg = small();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let dir = tempfile::tempdir().unwrap();
    a.write(&dir.path().join("a")).unwrap();
    b.write(&dir.path().join("b")).unwrap();
    for f in ["report.json", "epochs.csv", "occupancy.csv"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let c = run_experiment(&ExperimentConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn hydra_reports_telemetry_and_conserves_requests() {
    let r = run_experiment(&small()).unwrap();
    assert_eq!(r.input_sets, 3);
    assert!(!r.telemetry.is_empty());
    assert_eq!(r.accel_bypassed + r.accel_cached, r.accel_llc_requests);
    assert!(r.telemetry.iter().all(|t| t.rung <= 5));
}

#[test]
fn epoch_sweep_gives_one_report_per_value() {
    let vals: Vec<toml::Value> = [5000, 10000, 20000].map(toml::Value::Integer).to_vec();
    let cache = ModelCache::new();
    let rs = sweep(&small(), "system.epoch_cycles", &vals, &cache).unwrap();
    assert_eq!(rs.len(), 3);
    for (r, v) in rs.iter().zip([5000, 10000, 20000]) {
        assert_eq!(r.epoch_cycles, v);
    }
    // one trained model set shared by all three runs
    assert_eq!(cache.len(), 1);
}

#[test]
fn longer_deadlines_never_miss_more() {
    let vals: Vec<toml::Value> = [30_000, 45_000, 60_000, 90_000, 200_000]
        .map(toml::Value::Integer)
        .to_vec();
    for p in ["FIFO-NB", "ARP-NB", "HyDRA"] {
        let cfg = with_field(&small(), "policy", &toml::Value::String(p.into())).unwrap();
        let rs = sweep(&cfg, "deadline.d_cycles", &vals, &ModelCache::new()).unwrap();
        let dmr: Vec<f64> = rs.iter().map(|r| r.dmr).collect();
        assert!(dmr.windows(2).all(|w| w[1] <= w[0]), "{p}: {dmr:?}");
    }
}

#[test]
fn comparison_normalizes_to_fifo_nb() {
    let cmp = compare_policies(
        &small(),
        &[PolicyName::ArpNb, PolicyName::Hydra],
        &ModelCache::new(),
    )
    .unwrap();
    assert_eq!(cmp.rows.len(), 2);
    assert_eq!(cmp.reports.len(), 2);
    for row in &cmp.rows {
        let want = row.throughput / cmp.baseline_throughput;
        assert!((row.normalized_throughput - want).abs() < 1e-12);
    }
}

#[test]
fn cli_run_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.toml");
    std::fs::write(&cfg_path, SMALL).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_hydra"))
        .args(["--log", "warn", "run", "-c"])
        .arg(&cfg_path)
        .args(["--policy", "ARP-NB", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["policy"], "ARP-NB");

    std::fs::write(&cfg_path, "policy = \"nope\"\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_hydra"))
        .args(["--log", "off", "run", "-c"])
        .arg(&cfg_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn cli_generates_and_trains() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("accel.toml");
    let start = SMALL.find("[accel.spec]").unwrap();
    let body = SMALL[start..]
        .replace("[accel.spec]\n", "")
        .replace("[[accel.spec.layers]]", "[[layers]]");
    std::fs::write(&spec, body).unwrap();
    let trace = dir.path().join("accel.bin");
    let ok = Command::new(env!("CARGO_BIN_EXE_hydra"))
        .args(["--log", "warn", "gen-trace", "accel", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&trace)
        .status()
        .unwrap();
    assert!(ok.success());
    assert!(dir.path().join("accel.layers.csv").exists());
    let models = dir.path().join("models");
    let out = Command::new(env!("CARGO_BIN_EXE_hydra"))
        .args(["--log", "warn", "train", "--trace"])
        .arg(&trace)
        .arg("--out-dir")
        .arg(&models)
        .args(["--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(models.join("layer0.csv").exists() && models.join("layer1.csv").exists());

    // the exported models drive a run in place of training
    let mut cfg = small();
    cfg.lern.models = Some(models.clone());
    let from_files = run_experiment(&cfg).unwrap();
    let trained = run_experiment(&small()).unwrap();
    assert_eq!(from_files.accel_bypassed, trained.accel_bypassed);
}

use std::ffi::{CStr, CString};
use std::ptr;

use hydra_ffi::*;

const SPEC: &str = r#"
pe_rows = 8
pe_cols = 8
sram_ifmap_kb = 16
sram_filter_kb = 16
sram_ofmap_kb = 16
word_bytes = 64

[[layers]]
ifmap_h = 8
ifmap_w = 8
filt_h = 3
filt_w = 3
channels = 8
num_filters = 8
stride = 1
dataflow = "OS"

[[layers]]
ifmap_h = 8
ifmap_w = 8
filt_h = 3
filt_w = 3
channels = 8
num_filters = 8
stride = 1
dataflow = "WS"
"#;

fn last_error() -> String {
    let p = hydra_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn trace() -> *mut HydraTrace {
    let spec = CString::new(SPEC).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { hydra_trace_generate_systolic(spec.as_ptr(), 1, &mut t) }, HydraStatus::Ok);
    t
}

#[test]
fn trace_model_lrpt_round_trip() {
    unsafe {
        let t = trace();
        let (mut len, mut layers) = (0u64, 0u32);
        assert_eq!(hydra_trace_len(t, &mut len), HydraStatus::Ok);
        assert_eq!(hydra_trace_layer_count(t, &mut layers), HydraStatus::Ok);
        assert!(len > 0);
        assert_eq!(layers, 2);

        let mut m = ptr::null_mut();
        assert_eq!(hydra_model_train(t, 1, 6, 5, 0, false, &mut m), HydraStatus::Ok);
        let mut acc = -1.0;
        assert_eq!(hydra_model_accuracy(m, t, &mut acc), HydraStatus::Ok);
        assert!((0.0..=1.0).contains(&acc));

        let mut l = ptr::null_mut();
        assert_eq!(hydra_lrpt_new(17, false, &mut l), HydraStatus::Ok);
        let mut bytes = 0;
        assert_eq!(hydra_lrpt_footprint(l, &mut bytes), HydraStatus::Ok);
        assert_eq!(bytes, 80 * 1024);
        let mut p = HydraPrediction { valid: 9, rc: 9, ri: 9 };
        assert_eq!(hydra_lrpt_lookup(l, 0x1234_5640, &mut p), HydraStatus::Ok);
        assert_eq!(p.valid, 0);
        assert_eq!(hydra_lrpt_load(l, m), HydraStatus::Ok);

        // some line of the trained layer now has a reuse entry
        let seq = hydra_core::trace::generate_systolic_trace(&toml::from_str(SPEC).unwrap(), 1).unwrap();
        let hits = seq
            .layer_slice(1)
            .unwrap()
            .iter()
            .filter(|a| {
                let mut p = HydraPrediction::default();
                hydra_lrpt_lookup(l, a.address, &mut p);
                p.valid == 1 && p.rc < 4 && p.ri < 4
            })
            .count();
        assert!(hits > 0);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("l1.csv").to_str().unwrap()).unwrap();
        assert_eq!(hydra_model_export(m, path.as_ptr()), HydraStatus::Ok);
        assert!(dir.path().join("l1.csv").exists());

        hydra_lrpt_free(l);
        hydra_model_free(m);
        hydra_trace_free(t);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(hydra_trace_load(ptr::null(), &mut t), HydraStatus::NullArgument);
        assert!(last_error().contains("path"));

        let missing = CString::new("/nonexistent/trace.csv").unwrap();
        assert_eq!(hydra_trace_load(missing.as_ptr(), &mut t), HydraStatus::Io);
        assert!(t.is_null());

        let bad = CString::new("pe_rows = \"x\"").unwrap();
        assert_eq!(hydra_trace_generate_systolic(bad.as_ptr(), 0, &mut t), HydraStatus::Config);

        let good = trace();
        let mut m = ptr::null_mut();
        assert_eq!(hydra_model_train(good, 7, 6, 0, 0, false, &mut m), HydraStatus::Validation);
        assert!(last_error().contains("layer 7"));
        let mut l = ptr::null_mut();
        assert_eq!(hydra_lrpt_new(0, false, &mut l), HydraStatus::Config);
        assert_eq!(hydra_trace_len(good, ptr::null_mut()), HydraStatus::NullArgument);

        let mut json = ptr::null_mut();
        let cfg = CString::new("policy = \"nope\"").unwrap();
        assert_ne!(hydra_run_experiment(cfg.as_ptr(), &mut json), HydraStatus::Ok);
        assert!(json.is_null());

        let bytes = [0xffu8, 0];
        assert_eq!(
            hydra_trace_load(bytes.as_ptr().cast(), &mut t),
            HydraStatus::InvalidUtf8
        );
        hydra_trace_free(good);
        hydra_trace_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        let mut t = ptr::null_mut();
        hydra_trace_load(ptr::null(), &mut t);
    }
    let other = std::thread::spawn(|| hydra_last_error_message().is_null()).join().unwrap();
    assert!(other);
    assert!(!hydra_last_error_message().is_null());
}

#[test]
fn run_experiment_returns_json() {
    let cfg = format!(
        "seed = 2\npolicy = \"HyDRA\"\n[run]\ncore_instr_budget = 100000\nwarmup_accesses = 1000\nmax_input_sets = 2\n[deadline]\nd_cycles = 60000\n[[cores]]\nprofile = \"LI\"\ncount = 2\nlength = 5000\n{}",
        SPEC.replace("pe_rows", "[accel.spec]\npe_rows").replace("[[layers]]", "[[accel.spec.layers]]")
    );
    let cfg = CString::new(cfg).unwrap();
    let mut json = ptr::null_mut();
    let st = unsafe { hydra_run_experiment(cfg.as_ptr(), &mut json) };
    assert_eq!(st, HydraStatus::Ok, "{}", if st == HydraStatus::Ok { String::new() } else { last_error() });
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { hydra_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["policy"], "HyDRA");
    assert_eq!(v["input_sets"], 2);
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(hydra_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

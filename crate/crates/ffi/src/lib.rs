//! C ABI over hydra-core.
//!
//! Every entry point returns a [`HydraStatus`]. On failure the message is kept
//! per thread and can be read with [`hydra_last_error_message`] until the next
//! failing call on the same thread. Objects are opaque handles owned by the
//! caller and released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use hydra_core::harness::{run_experiment, ExperimentConfig};
use hydra_core::lern::{build_reuse_signature_keyed, export_model, prediction_accuracy, train_layer_with, ClusterModel, LernParams};
use hydra_core::predictors::{HashScheme, Lrpt, LrptConfig, Prediction};
use hydra_core::trace::{generate_systolic_trace, parse_trace, AccessSequence, AcceleratorSpec, TraceFormat};
use hydra_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HydraStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Config = 6,
    Training = 7,
    Simulation = 8,
    Panic = 9,
}

impl From<&Error> for HydraStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => HydraStatus::Io,
            Error::Parse { .. } => HydraStatus::Parse,
            Error::Validation(_) | Error::Generation(_) => HydraStatus::Validation,
            Error::Config(_) => HydraStatus::Config,
            Error::Clustering(_) | Error::Annotation(_) => HydraStatus::Training,
            Error::Invariant(_) | Error::Contract(_) => HydraStatus::Simulation,
        }
    }
}

/// A parsed or generated access trace.
pub struct HydraTrace(AccessSequence);

/// One trained per-layer reuse model.
pub struct HydraModel(ClusterModel);

/// A reuse prediction table.
pub struct HydraLrpt(Lrpt);

/// Result of an LRPT lookup. `valid` is 0 for No-Reuse, in which case `rc`
/// and `ri` are meaningless. Otherwise `rc` is 0..3 for Cold..Hot and `ri`
/// 0..3 for Immediate..Remote.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HydraPrediction {
    pub valid: u8,
    pub rc: u8,
    pub ri: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(HydraStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail((&e).into(), e.to_string())
    }
}

type FfiResult<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> HydraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HydraStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HydraStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(HydraStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(HydraStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn scheme(bits: u32, splitmix: bool) -> HashScheme {
    if splitmix {
        HashScheme::SplitMix32(bits)
    } else {
        HashScheme::Bitmask(bits)
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hydra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn hydra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reads a trace file. Files ending in `.bin` use the binary format, anything
/// else CSV. A `<stem>.layers.csv` sidecar is picked up if present.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_trace_load(path: *const c_char, out: *mut *mut HydraTrace) -> HydraStatus {
    guard(|| {
        let p = Path::new(str_arg(path, "path")?);
        let seq = parse_trace(p, TraceFormat::from_path(p))?;
        put(out, Box::into_raw(Box::new(HydraTrace(seq))), "out")
    })
}

/// Generates a systolic-array trace from an accelerator spec in TOML.
///
/// # Safety
/// `spec_toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_trace_generate_systolic(
    spec_toml: *const c_char,
    seed: u64,
    out: *mut *mut HydraTrace,
) -> HydraStatus {
    guard(|| {
        let text = str_arg(spec_toml, "spec_toml")?;
        let spec: AcceleratorSpec =
            toml::from_str(text).map_err(|e| Fail(HydraStatus::Config, e.to_string()))?;
        let seq = generate_systolic_trace(&spec, seed)?;
        put(out, Box::into_raw(Box::new(HydraTrace(seq))), "out")
    })
}

/// # Safety
/// `trace` must come from this library and `len` be writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_trace_len(trace: *const HydraTrace, len: *mut u64) -> HydraStatus {
    guard(|| put(len, obj(trace, "trace")?.0.len() as u64, "len"))
}

/// Number of layers; a trace without layer marks counts as one layer.
///
/// # Safety
/// `trace` must come from this library and `count` be writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_trace_layer_count(trace: *const HydraTrace, count: *mut u32) -> HydraStatus {
    guard(|| {
        let t = &obj(trace, "trace")?.0;
        put(count, t.layer_ids().len().max(1) as u32, "count")
    })
}

/// # Safety
/// `trace` must come from this library or be null; it must not be used again.
#[no_mangle]
pub unsafe extern "C" fn hydra_trace_free(trace: *mut HydraTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Trains the reuse model of one layer. `hash_bits` of 0 trains on full line
/// addresses; otherwise lines are first folded with the given table hash.
///
/// # Safety
/// `trace` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_model_train(
    trace: *const HydraTrace,
    layer: u32,
    block_bits: u32,
    seed: u64,
    hash_bits: u32,
    hash_splitmix: bool,
    out: *mut *mut HydraModel,
) -> HydraStatus {
    guard(|| {
        let t = &obj(trace, "trace")?.0;
        let hash = (hash_bits != 0).then(|| scheme(hash_bits, hash_splitmix));
        let m = train_layer_with(t, layer, block_bits, seed, hash, &LernParams::default())?;
        put(out, Box::into_raw(Box::new(HydraModel(m))), "out")
    })
}

/// Fraction of reuse intervals the model's RI labels cover on its own layer.
///
/// # Safety
/// `model` and `trace` must come from this library and `accuracy` be writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_model_accuracy(
    model: *const HydraModel,
    trace: *const HydraTrace,
    accuracy: *mut f64,
) -> HydraStatus {
    guard(|| {
        let m = &obj(model, "model")?.0;
        let t = &obj(trace, "trace")?.0;
        let slice = if t.layer_marks.is_empty() {
            &t.accesses[..]
        } else {
            t.layer_slice(m.layer_id).ok_or_else(|| {
                Fail(HydraStatus::Validation, format!("layer {} not in trace", m.layer_id))
            })?
        };
        let tr = match m.hash {
            Some(h) => build_reuse_signature_keyed(slice, m.block_bits, |b| h.index(b)),
            None => build_reuse_signature_keyed(slice, m.block_bits, |b| b),
        };
        put(accuracy, prediction_accuracy(&tr, m), "accuracy")
    })
}

/// Writes the model as CSV plus its JSON sidecar.
///
/// # Safety
/// `model` must come from this library and `path` be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hydra_model_export(model: *const HydraModel, path: *const c_char) -> HydraStatus {
    guard(|| {
        let m = &obj(model, "model")?.0;
        export_model(m, Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library or be null; it must not be used again.
#[no_mangle]
pub unsafe extern "C" fn hydra_model_free(model: *mut HydraModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Creates an empty table with `2^hash_bits` entries.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_lrpt_new(hash_bits: u32, hash_splitmix: bool, out: *mut *mut HydraLrpt) -> HydraStatus {
    guard(|| {
        let l = Lrpt::new(LrptConfig { hash: scheme(hash_bits, hash_splitmix) })?;
        put(out, Box::into_raw(Box::new(HydraLrpt(l))), "out")
    })
}

/// Replaces the table contents with a model.
///
/// # Safety
/// `lrpt` and `model` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn hydra_lrpt_load(lrpt: *mut HydraLrpt, model: *const HydraModel) -> HydraStatus {
    guard(|| {
        let m = &obj(model, "model")?.0;
        let l = lrpt.as_mut().ok_or_else(|| null("lrpt"))?;
        l.0.load(m)?;
        Ok(())
    })
}

/// # Safety
/// `lrpt` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_lrpt_lookup(lrpt: *const HydraLrpt, address: u64, out: *mut HydraPrediction) -> HydraStatus {
    guard(|| {
        let p = match obj(lrpt, "lrpt")?.0.lookup(address) {
            Prediction::NoReuse => HydraPrediction::default(),
            Prediction::Reuse { rc, ri } => HydraPrediction { valid: 1, rc: rc as u8, ri: ri as u8 },
        };
        put(out, p, "out")
    })
}

/// Storage of the table in bytes at five bits per entry.
///
/// # Safety
/// `lrpt` must come from this library and `bytes` be writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_lrpt_footprint(lrpt: *const HydraLrpt, bytes: *mut u64) -> HydraStatus {
    guard(|| put(bytes, obj(lrpt, "lrpt")?.0.footprint_bytes(), "bytes"))
}

/// # Safety
/// `lrpt` must come from this library or be null; it must not be used again.
#[no_mangle]
pub unsafe extern "C" fn hydra_lrpt_free(lrpt: *mut HydraLrpt) {
    if !lrpt.is_null() {
        drop(Box::from_raw(lrpt));
    }
}

/// Runs one experiment described by a TOML config and returns the report as
/// JSON. Relative paths in the config resolve against the working directory.
/// Free the string with [`hydra_string_free`].
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `report_json` writable.
#[no_mangle]
pub unsafe extern "C" fn hydra_run_experiment(config_toml: *const c_char, report_json: *mut *mut c_char) -> HydraStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_toml(str_arg(config_toml, "config_toml")?)?;
        let json = run_experiment(&cfg)?.to_json();
        let c = CString::new(json).map_err(|e| Fail(HydraStatus::Simulation, e.to_string()))?;
        put(report_json, c.into_raw(), "report_json")
    })
}

/// # Safety
/// `s` must come from this library or be null; it must not be used again.
#[no_mangle]
pub unsafe extern "C" fn hydra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

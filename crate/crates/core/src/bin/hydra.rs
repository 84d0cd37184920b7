use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use hydra_core::harness::{
    compare_policies, layer_model_path, seed, sweep, write_sweep_csv, ExperimentConfig,
    ModelCache,
};
use hydra_core::lern::{
    build_reuse_signature_keyed, export_model, import_model, prediction_accuracy,
    train_layer_with, LernParams,
};
use hydra_core::policy::PolicyName;
use hydra_core::predictors::{HashScheme, Lrpt, LrptConfig};
use hydra_core::trace::{
    generate_core_trace, generate_systolic_trace, parse_trace, write_layer_marks, write_trace,
    layers_sidecar_path, AcceleratorSpec, CoreProfile, TraceFormat,
};
use hydra_core::{Error, Result};

#[derive(Parser)]
#[command(name = "hydra", version, about = "Shared-LLC simulator with learnt accelerator bypass")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic core or accelerator trace.
    GenTrace {
        #[command(subcommand)]
        what: GenWhat,
    },
    /// Train per-layer LERN models on an accelerator trace.
    Train {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        format: Option<TraceFormat>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Train on table indices of this scheme, e.g. splitmix32:17.
        #[arg(long)]
        hash: Option<HashScheme>,
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Run one experiment.
    Run {
        #[command(flatten)]
        common: Common,
        /// Override the configured policy.
        #[arg(long)]
        policy: Option<PolicyName>,
    },
    /// Run one experiment per value of a config field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted config field, e.g. deadline.ips or system.epoch_cycles.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Run several policies on identical traces.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<PolicyName>,
    },
    /// Load a model into an L-RPT and print its entries as CSV.
    DumpLrpt {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "bitmask19")]
        table: HashScheme,
        /// Print invalid entries too.
        #[arg(long)]
        all: bool,
    },
}

#[derive(clap::Args)]
struct Common {
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum GenWhat {
    Core {
        #[arg(long)]
        profile: CoreProfile,
        #[arg(long, default_value_t = 200_000)]
        length: usize,
        /// Bytes.
        #[arg(long)]
        footprint: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<TraceFormat>,
    },
    /// Systolic-array trace from a TOML accelerator description.
    Accel {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<TraceFormat>,
    },
}

fn fmt_of(path: &Path, f: Option<TraceFormat>) -> TraceFormat {
    f.unwrap_or_else(|| TraceFormat::from_path(path))
}

fn gen_trace(what: GenWhat) -> Result<()> {
    match what {
        GenWhat::Core {
            profile,
            length,
            footprint,
            seed,
            out,
            format,
        } => {
            let seq = generate_core_trace(profile, length, footprint, seed)?;
            write_trace(&seq, &out, fmt_of(&out, format))?;
            info!("wrote {} accesses to {}", seq.len(), out.display());
        }
        GenWhat::Accel {
            spec,
            seed,
            out,
            format,
        } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::io(&spec, e))?;
            let spec: AcceleratorSpec = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", spec.display())))?;
            let seq = generate_systolic_trace(&spec, seed)?;
            write_trace(&seq, &out, fmt_of(&out, format))?;
            write_layer_marks(&seq.layer_marks, &layers_sidecar_path(&out))?;
            info!(
                "wrote {} accesses in {} layers to {}",
                seq.len(),
                seq.layer_marks.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn train(
    trace: &Path,
    format: Option<TraceFormat>,
    out_dir: &Path,
    root: u64,
    hash: Option<HashScheme>,
    k: usize,
) -> Result<()> {
    let seq = parse_trace(trace, fmt_of(trace, format))?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let params = LernParams {
        k,
        ..LernParams::default()
    };
    println!("layer,lines,no_reuse,accuracy,silhouette_rc,silhouette_ri");
    for layer in seq.layer_ids() {
        let s = seed::split(root, seed::Stream::Lern, layer as u64);
        let model = train_layer_with(&seq, layer, 6, s, hash, &params)?;
        let slice = seq.layer_slice(layer).unwrap_or(&seq.accesses);
        let tr = match hash {
            Some(h) => build_reuse_signature_keyed(slice, 6, |b| h.index(b)),
            None => build_reuse_signature_keyed(slice, 6, |b| b),
        };
        let acc = prediction_accuracy(&tr, &model);
        export_model(&model, &layer_model_path(out_dir, layer))?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        println!(
            "{layer},{},{},{acc:.4},{},{}",
            model.assignments.len(),
            model.no_reuse_lines(),
            opt(model.silhouette_rc),
            opt(model.silhouette_ri)
        );
    }
    Ok(())
}

fn parse_value(s: &str) -> toml::Value {
    let s = s.trim();
    toml::from_str::<toml::Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.to_string()))
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::GenTrace { what } => gen_trace(what),
        Cmd::Train {
            trace,
            format,
            out_dir,
            seed,
            hash,
            k,
        } => train(&trace, format, &out_dir, seed, hash, k),
        Cmd::Run { common, policy } => {
            let mut cfg = common.load()?;
            if let Some(p) = policy {
                cfg.policy = p.to_string();
            }
            let r = hydra_core::harness::run_experiment(&cfg)?;
            r.write(&cfg.out_dir)?;
            println!(
                "{}: throughput {:.4}  DMR {:.4} ({}/{})  accel BR {:.4}  core BR {:.4}  [{:.2?}]",
                r.policy,
                r.throughput,
                r.dmr,
                r.deadline_misses,
                r.input_sets,
                r.accel_bypass_rate,
                r.core_bypass_rate,
                r.wall_clock
            );
            Ok(())
        }
        Cmd::Sweep {
            common,
            axis,
            values,
        } => {
            let cfg = common.load()?;
            let values: Vec<toml::Value> = values.iter().map(|v| parse_value(v)).collect();
            let reports = sweep(&cfg, &axis, &values, &ModelCache::new())?;
            for (i, r) in reports.iter().enumerate() {
                r.write(&cfg.out_dir.join(format!("run{i}")))?;
            }
            let path = cfg.out_dir.join("sweep.csv");
            write_sweep_csv(&path, &axis, &values, &reports)?;
            print!("{}", std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?);
            Ok(())
        }
        Cmd::Compare { common, policies } => {
            let cfg = common.load()?;
            let cmp = compare_policies(&cfg, &policies, &ModelCache::new())?;
            for r in &cmp.reports {
                r.write(&cfg.out_dir.join(&r.policy))?;
            }
            std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
            let path = cfg.out_dir.join("comparison.csv");
            cmp.write_csv(&path)?;
            print!("{}", std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?);
            Ok(())
        }
        Cmd::DumpLrpt { model, table, all } => {
            let m = import_model(&model)?;
            let mut t = Lrpt::new(LrptConfig { hash: table })?;
            t.load(&m)?;
            eprintln!(
                "{} entries, {} bytes, {} valid",
                t.config().entries(),
                t.footprint_bytes(),
                t.valid_entries()
            );
            let stdout = std::io::stdout();
            t.dump(&mut stdout.lock(), !all)
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Validation(_) => 2,
        Error::Invariant(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use phn_turbo::parallel::Execution;
use phn_turbo::phn::PhnParams;
use phn_turbo::sim::{
    cpe_report, emit_plot_data, gradcheck_suite, oracle_comparison, run_sweep, write_csv, SimConfig,
    DEFAULT_BER_FLOOR, SCHEMA_VERSION,
};
use phn_turbo::vi::{Detector, DetectorConfig, SymbolInstance};
use phn_turbo::Error;

/// Phase-noise OFDM detector and turbo receiver simulator.
#[derive(Parser)]
#[command(name = "phn-turbo", version, about)]
struct Cli {
    /// Log level filter, e.g. `info` or `phn_turbo=debug`.
    #[arg(long, global = true, default_value = "warn", env = "PHNTURBO_LOG")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo SNR sweep from a config file and write CSV.
    Simulate(SimulateArgs),
    /// Run the detector on one instance (loaded from JSON or generated).
    Detect(DetectArgs),
    /// Check analytic free-energy gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Compare the detector with the exact enumeration posterior.
    Oracle(OracleArgs),
    /// Common-phase-error statistics and rotation-only symbol errors.
    CpeAnalyze(CpeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config, or JSON with a `.json` extension.
    #[arg(long)]
    config: PathBuf,
    /// Run exactly this many frames per point (overrides the stop rule).
    #[arg(long)]
    frames: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination (default: config `output`, else `$PHNTURBO_OUT_DIR/<config stem>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `<csv stem>_series.csv` and `<csv stem>.svg`.
    #[arg(long)]
    plot: bool,
    /// Run frames on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct PhnArgs {
    /// RMS phase noise in degrees.
    #[arg(long, default_value_t = 3.0)]
    sigma_deg: f64,
    /// One-sided 3-dB oscillator bandwidth in Hz.
    #[arg(long, default_value_t = 100e3)]
    omega: f64,
    /// Sample interval in seconds.
    #[arg(long, default_value_t = 50e-9)]
    ts: f64,
}

impl PhnArgs {
    fn params(&self) -> phn_turbo::Result<PhnParams> {
        PhnParams::from_degrees(self.sigma_deg, self.omega, self.ts)
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Instance JSON; when absent one is generated from the options below.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    qam: usize,
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    #[command(flatten)]
    phn: PhnArgs,
    /// Write the (generated or loaded) instance here.
    #[arg(long)]
    save: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Include the per-step free-energy trace.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    qam: usize,
    #[arg(long, default_value_t = 15.0)]
    snr_db: f64,
    /// Number of seeded instances.
    #[arg(long, default_value_t = 1)]
    instances: usize,
    /// Maximum relative error per gradient block.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    qam: usize,
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    phn: PhnArgs,
    /// Required fraction of bits where detector and bitwise MAP agree.
    #[arg(long, default_value_t = 0.99)]
    min_agreement: f64,
    /// Required correlation between detector and exact bit means.
    #[arg(long, default_value_t = 0.95)]
    min_correlation: f64,
}

#[derive(Args)]
struct CpeArgs {
    #[arg(long, default_value_t = 9.0)]
    angle_deg: f64,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    qam: usize,
    #[command(flatten)]
    phn: PhnArgs,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// A check that ran but did not pass: exit code 1.
#[derive(Debug)]
struct CheckFailed;

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("check failed")
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Detect(a) => detect(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Oracle(a) => oracle(a),
        Command::CpeAnalyze(a) => cpe_analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<Error>(),
                    Some(Error::Config(_) | Error::InvalidParameter(_) | Error::UnsupportedConstellation(_))
                )
            });
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON serializes"));
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = SimConfig::from_path(&a.config)?;
    if let Some(frames) = a.frames {
        cfg.stop.max_frames = frames;
        cfg.stop.min_frame_errors = frames;
    }
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    if a.out.is_some() {
        cfg.output = a.out.clone();
    }
    cfg.validate()?;
    let stem = a.config.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let out = cfg.output_path(stem);
    let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };
    let records = run_sweep(&cfg, exec)?;
    let generated = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let comments = vec![
        format!("generated_unix = {generated}"),
        format!(
            "schema_version = {SCHEMA_VERSION}; config_hash = {}; interleaver_seed = {}; code = {}",
            cfg.config_hash(),
            cfg.code.interleaver_seed,
            cfg.code.alist.as_deref().map_or("bundled".to_string(), |p| p.display().to_string())
        ),
    ];
    write_csv(&out, &records, &comments)?;
    let mut plots = Vec::new();
    if a.plot {
        let stem = out.with_extension("");
        let (_, paths) = emit_plot_data(&records, DEFAULT_BER_FLOOR, &stem)?;
        plots.extend(paths.iter().map(|p| p.display().to_string()));
    }
    print_json(&json!({
        "output": out.display().to_string(),
        "plots": plots,
        "config_hash": cfg.config_hash(),
        "records": records,
    }));
    Ok(())
}

fn load_instance(path: &Path) -> anyhow::Result<SymbolInstance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        .map_err(Into::into)
}

fn detect(a: DetectArgs) -> anyhow::Result<()> {
    let inst = match &a.instance {
        Some(path) => load_instance(path)?,
        None => SymbolInstance::generate(a.seed, a.n, a.qam, a.snr_db, a.phn.params()?, false)?,
    };
    if let Some(path) = &a.save {
        let text = serde_json::to_string_pretty(&inst)?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let prepared = inst.prepare()?;
    let config = DetectorConfig {
        num_iter: a.iters,
        trace: a.trace,
        ..DetectorConfig::default()
    };
    let detector = Detector::new(prepared.constellation, prepared.prior.clone(), config)?;
    let out = detector.detect(&inst.r, &inst.channel.h, inst.noise_var, &inst.prior_llrs()?)?;
    let bit_errors = inst.bits()?.map(|bits| {
        let prior = inst.prior_llrs().expect("checked above");
        bits.as_slice()
            .iter()
            .zip(out.extrinsic.as_slice().iter().zip(prior.as_slice()))
            .filter(|(b, (e, p))| (*e + *p >= 0.0) != (**b > 0.0))
            .count()
    });
    print_json(&json!({
        "n": inst.n(),
        "order": inst.order,
        "fell_back": out.fell_back,
        "f2": out.f2,
        "f2_threshold": detector.threshold(),
        "clamp_events": out.clamp_events,
        "bit_errors": bit_errors,
        "phase_mean": out.phn.mean.as_slice(),
        "extrinsic": out.extrinsic.as_slice(),
        "trace": out.trace,
    }));
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> anyhow::Result<()> {
    let runs = gradcheck_suite(a.seed, a.n, a.qam, a.snr_db, a.instances)?;
    let passed = runs.iter().all(|r| r.passes(a.tol));
    let rows: Vec<_> = runs
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "seed": r.seed,
                "worst_relative_error": r.correct.worst(),
                "negative_control_error": r.swapped.worst(),
                "pass": r.passes(a.tol),
                "report": r.correct,
            })
        })
        .collect();
    print_json(&json!({
        "result": if passed { "PASS" } else { "FAIL" },
        "tolerance": a.tol,
        "instances": rows,
    }));
    if passed {
        Ok(())
    } else {
        Err(CheckFailed.into())
    }
}

fn oracle(a: OracleArgs) -> anyhow::Result<()> {
    let summary = oracle_comparison(a.seed, a.n, a.qam, a.snr_db, a.phn.params()?, a.trials, Execution::Parallel)?;
    let passed = summary.agreement >= a.min_agreement && summary.correlation >= a.min_correlation;
    print_json(&json!({
        "result": if passed { "PASS" } else { "FAIL" },
        "min_agreement": a.min_agreement,
        "min_correlation": a.min_correlation,
        "summary": summary,
    }));
    if passed {
        Ok(())
    } else {
        Err(CheckFailed.into())
    }
}

fn cpe_analyze(a: CpeArgs) -> anyhow::Result<()> {
    let report = cpe_report(&a.phn.params()?, a.n, a.qam, a.angle_deg.to_radians())?;
    if a.json {
        print_json(&serde_json::to_value(&report)?);
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

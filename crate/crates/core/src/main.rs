//! Command-line front end: sweep / pdf / acf experiments, scheme
//! calibration, and the validation battery.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fadekey::config::{self, FullConfig};
use fadekey::experiment::{
    calibrate_scheme, run_acf_experiment, run_pdf_experiment, run_sweep,
};
use fadekey::output::{sig6, write_acf_csv, write_pdf_csv, write_sweep_csv};
use fadekey::validate::run_validation;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable overriding the default worker count.
const WORKERS_ENV: &str = "FADEKEY_WORKERS";

#[derive(Parser)]
#[command(
    name = "fadekey",
    version,
    about = "Monte Carlo key-rate experiments for fading-generated secret keys under a directional-antenna eavesdropper"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CfgArgs {
    /// Config file (flat `key = value` lines); defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set trials=1000 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Override the seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count (default: `workers` key, then $FADEKEY_WORKERS,
    /// then the hardware parallelism)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: CfgArgs,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Seed for the validation draws
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker thread count
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep Eve's aperture diameter and estimate the key-rate bound per point
    Sweep(RunArgs),
    /// Empirical amplitude pdfs for low path counts, with KL readouts
    Pdf(RunArgs),
    /// Envelope autocorrelation experiment against the closed forms
    Acf(RunArgs),
    /// Calibrate the threshold scheme for a configuration and print it
    Calibrate(CfgArgs),
    /// Run the statistical self-validation battery
    Validate(ValidateArgs),
}

fn load_config(args: &CfgArgs) -> anyhow::Result<FullConfig> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => String::new(),
    };
    let mut overrides = args.set.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed = {seed}"));
    }
    Ok(config::parse_with_overrides(&text, &overrides)?)
}

fn resolve_workers(flag: Option<usize>, cfg: Option<usize>) -> usize {
    flag.or(cfg)
        .or_else(|| {
            std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1)
}

fn write_file(path: &PathBuf, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    file.write_all(&buf)?;
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.cfg)?;
    let workers = resolve_workers(args.cfg.workers, cfg.workers);
    let result = run_sweep(&cfg.experiment, workers)?;
    write_file(&args.out, |w| write_sweep_csv(w, &cfg, &result))?;
    let s = result.scheme;
    println!(
        "scheme: m = {} T = {} s = {}  ({} trials/point, {} workers)",
        sig6(s.median_m),
        sig6(s.threshold_t),
        sig6(s.entropy_s),
        cfg.experiment.trials,
        workers
    );
    println!("diameter_m  cmi_bits        mi_bits         bound    kept   cmi/mi");
    for r in &result.rows {
        let comb = (r.cmi_stderr.powi(2) + r.mi_stderr.powi(2)).sqrt();
        let note = if r.cmi_bits > r.mi_bits + 3.0 * comb {
            "  [note: cmi above mi beyond noise]"
        } else {
            ""
        };
        println!(
            "{:>10}  {:>7}±{:<6} {:>7}±{:<6} {:>8} {:>6} {:>7}{}",
            sig6(r.diameter_m),
            sig6(r.cmi_bits),
            sig6(r.cmi_stderr),
            sig6(r.mi_bits),
            sig6(r.mi_stderr),
            sig6(r.key_rate_bound_bits),
            sig6(r.kept_fraction),
            sig6(r.cmi_bits / r.mi_bits),
            note
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_pdf(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.cfg)?;
    let workers = resolve_workers(args.cfg.workers, cfg.workers);
    let result = run_pdf_experiment(&cfg.pdf, cfg.experiment.model, cfg.experiment.seed, workers)?;
    write_file(&args.out, |w| write_pdf_csv(w, &cfg, &result))?;
    for c in &result.curves {
        println!(
            "KL( {} || rayleigh ) = {} bits",
            c.label,
            sig6(c.kl_vs_rayleigh_bits)
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_acf(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.cfg)?;
    let workers = resolve_workers(args.cfg.workers, cfg.workers);
    let result = run_acf_experiment(&cfg.experiment, &cfg.acf, workers)?;
    write_file(&args.out, |w| write_acf_csv(w, &cfg, &result))?;
    println!("rmse_first_order = {}", sig6(result.rmse_first_order));
    println!(
        "rmse_squared_envelope = {}",
        sig6(result.rmse_squared_envelope)
    );
    println!(
        "rmse_squared_envelope_vs_infinite = {}",
        sig6(result.rmse_squared_envelope_vs_infinite)
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_calibrate(args: &CfgArgs) -> anyhow::Result<()> {
    let cfg = load_config(args)?;
    let workers = resolve_workers(args.workers, cfg.workers);
    let scheme = calibrate_scheme(&cfg.experiment, workers)?;
    println!(
        "median_m = {}\nthreshold_t = {}\nentropy_s = {}",
        scheme.median_m, scheme.threshold_t, scheme.entropy_s
    );
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<ExitCode> {
    let workers = resolve_workers(args.workers, None);
    let checks = run_validation(args.seed, workers);
    let mut failures = 0;
    for c in &checks {
        println!(
            "{} {:<42} value = {:<12} threshold = {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            sig6(c.value),
            sig6(c.threshold)
        );
        if !c.pass {
            failures += 1;
        }
    }
    println!("{} of {} checks passed", checks.len() - failures, checks.len());
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match &cli.cmd {
        Cmd::Sweep(args) => cmd_sweep(args).map(|()| ExitCode::SUCCESS),
        Cmd::Pdf(args) => cmd_pdf(args).map(|()| ExitCode::SUCCESS),
        Cmd::Acf(args) => cmd_acf(args).map(|()| ExitCode::SUCCESS),
        Cmd::Calibrate(args) => cmd_calibrate(args).map(|()| ExitCode::SUCCESS),
        Cmd::Validate(args) => cmd_validate(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

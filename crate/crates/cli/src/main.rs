//! `smed`: Monte Carlo sweeps, analytic error rates and frame emulation for
//! energy-detection spatial modulation, driven by an experiment file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
//! non-convergence.

mod commands;
mod config;
mod output;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use log::info;

use output::{sha256_hex, write_manifest, RunInfo};

#[derive(Parser)]
#[command(name = "smed", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo error rates for every detector and SNR point.
    Sweep(RunArgs),
    /// Series evaluation of the energy detector's error rates, with optional
    /// truncation and slope reports.
    Analytic(RunArgs),
    /// Whole frames through pulse shaping, sync, estimation and detection.
    Frame(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (`key = value` under `[section]` headers).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "smed-out")]
    out: PathBuf,
    /// Master seed, overriding `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks automatically. Results never depend on it.
    #[arg(long, env = "SMED_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Log progress to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 3,
            Self::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Io(m) => write!(f, "I/O error: {m}"),
            Self::Numeric(m) => write!(f, "numerical error: {m}"),
        }
    }
}

fn run(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = config::parse(&text).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}: {d}", args.config.display())).collect();
        CliError::Config(format!("\n{}", lines.join("\n")))
    })?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    fs::create_dir_all(&args.out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out.display())))?;
    info!("{name}: {} SNR points, seed {}", cfg.run.snr_db.len(), cfg.run.seed);
    let written = match name {
        "sweep" => commands::sweep(&cfg, args.workers, &args.out)?,
        "analytic" => commands::analytic(&cfg, args.workers, &args.out)?,
        _ => commands::frame(&cfg, args.workers, &args.out)?,
    };
    let info = RunInfo {
        command: name,
        config_path: &args.config,
        config_sha256: sha256_hex(text.as_bytes()),
        seed_overridden: args.seed.is_some(),
        workers: args.workers,
        started,
    };
    let manifest = write_manifest(&args.out, &info, &cfg, &written)?;
    info!("wrote {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Sweep(a) => ("sweep", a),
        Command::Analytic(a) => ("analytic", a),
        Command::Frame(a) => ("frame", a),
    };
    let level = if args.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("smed {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

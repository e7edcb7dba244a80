//! `simulate` — config-driven experiment driver.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure.

use adq_cli::config::{ExperimentKind, ExperimentSpec};
use adq_cli::experiments;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "simulate",
    version,
    about = "Adaptive differential CSI feedback experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for sweep cells (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(clap::Args)]
struct SpecArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Override the spec's seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state quantization error variance across vehicle speeds.
    ErrorVsSpeed(SpecArgs),
    /// Per-iteration convergence of the error variance.
    Transient(SpecArgs),
    /// QPSK bit error rate across speeds, schemes and SNR.
    BerSweep(SpecArgs),
    /// k-means codebooks of normalized singular-vector components.
    CodebookTable(SpecArgs),
    /// Monte Carlo second moments of singular-matrix entries.
    HaarMoments(SpecArgs),
    /// Feedback bit rates per scheme.
    OverheadTable(SpecArgs),
    /// Dump a raw channel trajectory as CSV (debugging aid).
    DumpTrajectory {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        tx: usize,
        #[arg(long, default_value_t = 2)]
        rx: usize,
        #[arg(long, default_value_t = 30.0)]
        speed: f64,
        #[arg(long, default_value_t = 2.5e9)]
        carrier: f64,
        #[arg(long, default_value_t = 200.0)]
        rate: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // a pool may already exist when tests drive main repeatedly
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}

enum CliError {
    Config(String),
    Numeric(String),
}

impl From<adq_core::Error> for CliError {
    fn from(e: adq_core::Error) -> Self {
        match experiments::exit_code_for(&e) {
            2 => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::ErrorVsSpeed(a) => run_spec(ExperimentKind::ErrorVsSpeed, a),
        Command::Transient(a) => run_spec(ExperimentKind::Transient, a),
        Command::BerSweep(a) => run_spec(ExperimentKind::BerSweep, a),
        Command::CodebookTable(a) => run_spec(ExperimentKind::CodebookTable, a),
        Command::HaarMoments(a) => run_spec(ExperimentKind::HaarMoments, a),
        Command::OverheadTable(a) => run_spec(ExperimentKind::OverheadTable, a),
        Command::DumpTrajectory {
            seed,
            tx,
            rx,
            speed,
            carrier,
            rate,
            samples,
            out,
        } => {
            let csv = experiments::dump_trajectory(seed, (tx, rx), speed, carrier, rate, samples)?;
            write_artifact(&out, "trajectory.csv", &csv)?;
            Ok(())
        }
    }
}

fn run_spec(kind: ExperimentKind, args: SpecArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut spec = ExperimentSpec::from_json(&text)?;
    if spec.experiment != kind {
        return Err(CliError::Config(format!(
            "config declares experiment '{}' but the '{}' subcommand was invoked",
            spec.experiment.label(),
            kind.label()
        )));
    }
    if let Some(seed) = args.seed {
        spec.seeds = vec![seed];
    }
    let artifacts = experiments::run(&spec)?;
    for a in &artifacts {
        write_artifact(&args.out, &a.filename, &a.content)?;
        println!("{}", args.out.join(&a.filename).display());
    }
    Ok(())
}

fn write_artifact(dir: &Path, filename: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(filename);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

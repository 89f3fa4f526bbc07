use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use demon_sweep::{run, Mode, RunConfig, SolverKind, SweepError};

#[derive(Parser)]
#[command(name = "demon", version, about = "Sweeps for a feedback-controlled quantum dot")]
struct Cli {
    #[command(subcommand)]
    mode: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dot occupation against time without feedback
    Trace(Args),
    /// Stationary quantities over log-spaced periods
    TauScan(Args),
    /// Full report on a (V, tau) grid with matrix and contour files
    Grid(Args),
    /// Short-time expansion against the full pipeline
    ZenoCheck(Args),
    /// Exact discretized-lead feedback dynamics against the master equation
    Benchmark(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Restrict to one or more solvers
    #[arg(long, value_enum)]
    solver: Vec<SolverKind>,
}

fn execute(cli: Cli) -> Result<(), SweepError> {
    let (mode, args) = match cli.mode {
        Command::Trace(a) => (Mode::Trace, a),
        Command::TauScan(a) => (Mode::TauScan, a),
        Command::Grid(a) => (Mode::Grid, a),
        Command::ZenoCheck(a) => (Mode::ZenoCheck, a),
        Command::Benchmark(a) => (Mode::Benchmark, a),
    };
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if !args.solver.is_empty() {
        cfg.solvers = args.solver;
    }
    let summary = run(mode, &cfg, &args.out)?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    if summary.failed > 0 {
        eprintln!("{} of {} points failed", summary.failed, summary.points);
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

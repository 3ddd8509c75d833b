mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{FourierArgs, FpArgs, Global, SgArgs, SweepArgs, TradeoffArgs, VerifyArgs};
use crate::config::{require, require_positive, ConfigFile};
use crate::error::{CliError, CliResult};
use crate::output::Format;

/// Measurement back-action lab: weak values, actions, meters and trade-offs.
#[derive(Debug, Parser)]
#[command(name = "backaction-lab", version)]
struct Cli {
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_name = "F")]
    hbar: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the oracle suites and emit a JSON report.
    Verify(VerifyArgs),
    /// Tabulate action, probability and weak value along a back-action grid.
    SweepWeakvalue(SweepArgs),
    /// Sweep the back-action spread and compare readout fluctuations with their bounds.
    Tradeoff(TradeoffArgs),
    /// Pointer peaks and projector emergence for increasingly wide meters.
    FourierLimit(FourierArgs),
    /// Closed-form spin-1/2 deflection, checked against the generic engine.
    Sterngerlach(SgArgs),
    /// Closed-form free particle kicked halfway through its flight.
    Freeparticle(FpArgs),
}

fn global(cli: &Cli) -> CliResult<Global> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let seed = file.resolve("seed", cli.seed, 0)?;
    let hbar = file.resolve("hbar", cli.hbar, 1.0)?;
    require_positive("hbar", hbar)?;
    let jobs = file.resolve("jobs", cli.jobs, 0)?;
    require(jobs <= 1024, || format!("`jobs` must be at most 1024, got {jobs}"))?;
    let out = file.resolve_opt("out", cli.out.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(Global {
        file,
        format: cli.format,
        out,
        seed,
        hbar,
        pool,
    })
}

fn run(cli: &Cli) -> CliResult<bool> {
    let g = global(cli)?;
    let outcome = match &cli.command {
        Command::Verify(a) => commands::verify(&g, a)?,
        Command::SweepWeakvalue(a) => commands::sweep_weakvalue(&g, a)?,
        Command::Tradeoff(a) => commands::tradeoff(&g, a)?,
        Command::FourierLimit(a) => commands::fourier_limit(&g, a)?,
        Command::Sterngerlach(a) => commands::sterngerlach(&g, a)?,
        Command::Freeparticle(a) => commands::freeparticle(&g, a)?,
    };
    output::emit(g.out.as_deref(), &outcome.contents)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BACKACTION_LAB_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

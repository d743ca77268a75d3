use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

mod commands;
mod config;

use config::ConfigFile;

/// Persistence analytics for game-achievement unlock data.
#[derive(Debug, Parser)]
#[command(name = "gritstat", version, about)]
struct Cli {
    /// Flat key = value file with option defaults. Command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a raw JSONL or CSV file and write the curated dataset.
    Ingest(IngestArgs),
    /// Summarize class counts and totals of a dataset.
    Stats(InputArgs),
    /// Fit a distribution to per-game achievement or player totals.
    FitDist(FitDistArgs),
    /// Fit exponential decays to every game and rank them by R².
    FitDecay(FitDecayArgs),
    /// Cohort aggregation: alpha against F and alpha U against G.
    Cohort(CohortArgs),
    /// Generate a synthetic dataset with ground truth.
    Simulate(SimulateArgs),
    /// Write every figure table and a manifest.
    Report(CohortArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// jsonl or csv; inferred from the file extension when omitted.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Debug, Args)]
struct FitDistArgs {
    #[command(flatten)]
    io: InputArgs,
    /// achievements or players.
    #[arg(long)]
    variable: Option<String>,
    /// lognormal, weibull, gamma, burr or auto (smallest KS distance).
    #[arg(long)]
    family: Option<String>,
    /// Log-spaced histogram bins.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Debug, Args)]
struct FitDecayArgs {
    #[command(flatten)]
    io: InputArgs,
    /// Leave games with negative R² out of the rankings.
    #[arg(long)]
    drop_negative_r2: bool,
}

#[derive(Debug, Args)]
struct CohortArgs {
    #[command(flatten)]
    io: InputArgs,
    /// Completist window width, between 0.05 and 0.25.
    #[arg(long)]
    window: Option<f64>,
    /// Player window width for alpha U.
    #[arg(long)]
    player_window: Option<u64>,
    /// Largest player total in the alpha U windows.
    #[arg(long)]
    max_players: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    games: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Small-audience regime in which nobody is expected to finish.
    #[arg(long)]
    uncompleted: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    Usage(String),
    /// Unreadable or unusable data (exit 1).
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
}

fn init_threads() {
    let Ok(raw) = std::env::var("GRITSTAT_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring GRITSTAT_THREADS={raw:?}: expected a positive integer"),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest(&file, a.io),
        Command::Stats(a) => commands::stats(&file, a),
        Command::FitDist(a) => commands::fit_dist(&file, a),
        Command::FitDecay(a) => commands::fit_decay(&file, a),
        Command::Cohort(a) => commands::cohort(&file, a),
        Command::Simulate(a) => commands::simulate(&file, a),
        Command::Report(a) => commands::report(&file, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // help and version exit 0, usage errors exit 2
        Err(e) => e.exit(),
    };
    init_logging(cli.verbose);
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

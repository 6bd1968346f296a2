//! Command-line front end: simulate draws from a biased urn, fit category
//! weights by ABC rejection, calibrate tolerances, run simulation-study
//! grids, and summarise posterior samples.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use wallenius::abc::AbcError;
use wallenius::bench::BenchError;
use wallenius::ingest::IngestError;
use wallenius::urn::UrnError;

/// Environment variable supplying the default worker-thread cap.
pub const THREADS_ENV: &str = "WALLENIUS_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Ingest(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Ingest(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<UrnError> for CliError {
    fn from(e: UrnError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AbcError> for CliError {
    fn from(e: AbcError) -> Self {
        match e {
            AbcError::AttemptsExhausted { .. } => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Ingest(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Abc(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wallenius",
    version,
    about = "Biased-urn preference modelling with ABC rejection inference",
    args_override_self = true
)]
struct Cli {
    /// Plain key=value file supplying defaults for any flag of the chosen
    /// subcommand (a previous run's manifest.txt works as-is).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker thread cap (default: WALLENIUS_THREADS, else all cores).
    /// Never affects results, only wall-clock time.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic dataset from a fully specified urn.
    Simulate(SimulateArgs),
    /// Fit category weights to a dataset by ABC rejection.
    Fit(FitArgs),
    /// Run the pilot tolerance calibration and report the quantile.
    Calibrate(CalibrateArgs),
    /// Run a simulation-study grid and report RMSE and acceptance rates.
    Bench(BenchArgs),
    /// Summarise an existing posterior CSV.
    Summarize(SummarizeArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Balls per category, comma separated (e.g. 2,2).
    #[arg(long)]
    m: String,
    /// Priority weights per category, comma separated (e.g. 2,1).
    #[arg(long)]
    omega: String,
    /// Number of respondents (used with --n).
    #[arg(long)]
    k: Option<usize>,
    /// Draw size shared by every respondent (used with --k).
    #[arg(long)]
    n: Option<u64>,
    /// Explicit per-respondent draw sizes, comma separated; overrides --k/--n.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Frequency CSV produced by `simulate` or a previous ingestion.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Ratings CSV (user,item,rating,timestamp); needs --map and --threshold.
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// Preference-list CSV (respondent,item); needs --map.
    #[arg(long)]
    prefs: Option<PathBuf>,
    /// Category map CSV (item,category); `builtin:journals` for the bundled
    /// journal map.
    #[arg(long)]
    map: Option<String>,
    /// Priority order for multi-category items, one category per line;
    /// `builtin:genres` for the bundled genre order.
    #[arg(long)]
    priority: Option<String>,
    /// Good-item rating threshold (ratings protocol).
    #[arg(long)]
    threshold: Option<f64>,
    /// Lower bound of the rating scale.
    #[arg(long, default_value_t = 0.5)]
    scale_min: f64,
    /// Upper bound of the rating scale.
    #[arg(long, default_value_t = 5.0)]
    scale_max: f64,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Tolerance(s), comma separated; repeat fits share one proposal stream.
    #[arg(long)]
    epsilon: Option<String>,
    /// Calibrate the tolerance as this pilot-distance quantile instead of
    /// passing --epsilon.
    #[arg(long)]
    calibrate_quantile: Option<f64>,
    /// Pilot simulations for calibration.
    #[arg(long, default_value_t = 100_000)]
    pilot_size: usize,
    /// Accepted draws per tolerance.
    #[arg(long, default_value_t = 1000)]
    accept: usize,
    /// Proposal budget (default: 1000 * accept).
    #[arg(long)]
    max_attempts: Option<u64>,
    /// Symmetric Dirichlet hyperparameter.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.05)]
    quantile: f64,
    #[arg(long, default_value_t = 100_000)]
    pilot_size: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Category counts, comma separated.
    #[arg(long, default_value = "2,3,4,5,6,7,8,9,10,15,20")]
    c: String,
    /// Sample sizes, comma separated.
    #[arg(long, default_value = "5,50,1000")]
    k: String,
    /// Urn configurations, comma separated.
    #[arg(
        long,
        default_value = "uniform,increasing-increasing,increasing-decreasing"
    )]
    configs: String,
    /// Replications per cell.
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Accepted draws per fit.
    #[arg(long, default_value_t = 1000)]
    accept: usize,
    #[arg(long, default_value_t = 10_000)]
    pilot_size: usize,
    #[arg(long, default_value_t = 0.05)]
    quantile: f64,
    /// Balls per colour in the uniform configuration.
    #[arg(long, default_value_t = 5)]
    uniform_m: u64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Attempt budget per fit as a multiple of --accept.
    #[arg(long, default_value_t = 1000)]
    max_attempts_factor: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SummarizeArgs {
    /// Posterior CSV (omega_1..omega_c header, one draw per row).
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Splices `--config FILE` contents in as flags right after the subcommand,
/// so explicit flags override the file (later occurrences win).
fn splice_config_args(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut config_path: Option<String> = None;
    let mut rest: Vec<String> = Vec::new();
    let mut iter = argv.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            config_path = Some(
                iter.next()
                    .ok_or_else(|| CliError::Usage("--config requires a file path".into()))?,
            );
        } else if let Some(path) = arg.strip_prefix("--config=") {
            config_path = Some(path.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config_path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read config {path}: {e}")))?;
    let config_args = manifest::config_to_args(&text).map_err(CliError::Usage)?;
    // argv layout: program, subcommand, <config args>, <explicit args>
    if rest.len() < 2 {
        return Err(CliError::Usage(
            "--config needs a subcommand to apply its keys to".into(),
        ));
    }
    let mut spliced = Vec::with_capacity(rest.len() + config_args.len());
    spliced.extend(rest.iter().take(2).cloned());
    spliced.extend(config_args);
    spliced.extend(rest.into_iter().skip(2));
    Ok(spliced)
}

fn init_thread_pool(threads: Option<usize>) {
    let from_env = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok());
    if let Some(n) = threads.or(from_env) {
        // ignore failure: the global pool may already exist under test
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn run() -> Result<(), CliError> {
    let argv: Vec<String> = std::env::args().collect();
    let argv = splice_config_args(argv)?;
    let cli = Cli::parse_from(argv);
    init_thread_pool(cli.threads);
    match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Fit(args) => commands::fit(args),
        Command::Calibrate(args) => commands::calibrate(args),
        Command::Bench(args) => commands::bench(args),
        Command::Summarize(args) => commands::summarize(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

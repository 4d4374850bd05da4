//! `intorder`: tests for integer versus fractional integration of curve-valued
//! time series. Reports go to stdout as JSON, a readable summary to stderr.

mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use intorder_core::vtests::{DEFAULT_ALPHA, DEFAULT_REPS, DEFAULT_SEED, DEFAULT_STEPS};

#[derive(Parser)]
#[command(
    name = "intorder",
    version,
    about = "Variance-ratio tests for the integration order of functional time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where critical values come from.
#[derive(Args, Clone)]
pub struct LimitArgs {
    /// Directory holding critical-value caches [default: $INTORDER_CACHE_DIR or the user cache dir]
    #[arg(long = "critval-cache", value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Replications used to simulate a limit distribution
    #[arg(long, default_value_t = DEFAULT_REPS)]
    limit_reps: usize,
    /// Grid steps per simulated Brownian path
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    limit_steps: usize,
    /// Seed for the limit simulation
    #[arg(long, visible_alias = "seed", default_value_t = DEFAULT_SEED)]
    limit_seed: u64,
}

/// How to read a CSV panel (rows = time, columns = grid points).
#[derive(Args, Clone)]
pub struct InputArgs {
    /// CSV file
    file: PathBuf,
    /// Elementwise transform: identity, logit, log, probit
    #[arg(long, default_value = "identity")]
    transform: String,
    /// Subtract the first row from every row
    #[arg(long)]
    initialize: bool,
    /// The first line is a header
    #[arg(long)]
    header: bool,
    /// Field delimiter (one byte; `tab` for a tab)
    #[arg(long, default_value = ",")]
    delimiter: String,
}

/// Options shared by `test` and `classify`.
#[derive(Args, Clone)]
pub struct StatArgs {
    /// Significance level per tail
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Bandwidth: `auto`, a rule name (t-pow-0.2, t-pow-0.25, log-0.4) or an integer
    #[arg(long, default_value = "auto")]
    q: String,
    /// Use the demeaned statistics (unknown intercept)
    #[arg(long)]
    demeaned: bool,
    /// Take the direction from the differenced panel instead of the levels
    #[arg(long)]
    per_order_direction: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one variance-ratio test
    Test {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        stat: StatArgs,
        #[command(flatten)]
        limits: LimitArgs,
        /// Integration order under the null: 0, 1 or 2
        #[arg(long, default_value_t = 0)]
        order: usize,
    },
    /// Run the sequential procedure and report the implied interval for d
    Classify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        stat: StatArgs,
        #[command(flatten)]
        limits: LimitArgs,
        /// Start from the highest order and work down
        #[arg(long)]
        reversed: bool,
        /// Highest order tested, 1 or 2
        #[arg(long, default_value_t = 1)]
        max_order: usize,
    },
    /// Generate a simulated panel as CSV plus a JSON sidecar
    Simulate(commands::SimulateArgs),
    /// Build or inspect a critical-value cache
    Critval(commands::CritvalArgs),
    /// Run a named Monte Carlo experiment and write its tables
    Experiment(commands::ExperimentArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::Test { input, stat, limits, order } => commands::test(&limits, &input, &stat, order),
        Command::Classify { input, stat, limits, reversed, max_order } => {
            commands::classify(&limits, &input, &stat, reversed, max_order)
        }
        Command::Simulate(args) => commands::simulate(&args),
        Command::Critval(args) => commands::critval(&args),
        Command::Experiment(args) => commands::experiment(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

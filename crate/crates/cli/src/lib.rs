//! `cvlab` command-line front end.
//!
//! Every subcommand is a thin wrapper over `cvlab_core`: numbers written to
//! disk are exactly the values the library returns.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod decompose;
pub mod manifest;
pub mod presets;
mod rates;
mod run;

pub use decompose::decompose_row;

#[derive(Debug, Parser)]
#[command(name = "cvlab", version, about = "Cross-validation laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo experiment and write its table and reports.
    Run(RunArgs),
    /// Decompose the K-fold CV estimate of one learner on one dataset.
    Decompose(DecomposeArgs),
    /// Estimate a learner's excess-risk exponent.
    Rates(RatesArgs),
    /// Print a built-in preset config.
    Preset {
        /// Preset name; omit to list presets.
        name: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in preset instead of a config file.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Override the replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Override the sample-size grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Dataset CSV with header `x1,...,xp,y`.
    #[arg(long)]
    pub data: PathBuf,
    /// Learner config file (TOML table with `kind` and hyperparameters).
    #[arg(long)]
    pub learner: PathBuf,
    /// Number of folds.
    #[arg(long = "k", short = 'k')]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// True mean: rt, zero or linear.
    #[arg(long, default_value = "rt")]
    pub mu: String,
    /// Also write the row to this CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// Learner config file (TOML).
    #[arg(long)]
    pub learner: PathBuf,
    /// Mean preset of the standard-normal design: rt, zero or linear.
    #[arg(long, default_value = "rt")]
    pub dgp: String,
    /// Feature dimension.
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Sample-size grid (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fresh draws per excess-risk estimate.
    #[arg(long, default_value_t = 100_000)]
    pub mc_draws: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory for `rates.csv` and `rates.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its process exit code: 2 for bad input, 1 for runtime errors.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<cvlab_core::Error> for CliError {
    fn from(e: cvlab_core::Error) -> Self {
        let message = match &e {
            cvlab_core::Error::LogDomain(_) => format!("{e} (zero excess risk cannot be fit on a log scale)"),
            _ => e.to_string(),
        };
        CliError {
            code: if e.is_usage() { 2 } else { 1 },
            message,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::usage("--workers must be >= 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path, what: &str) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {what} {}: {e}", path.display())))
}

pub(crate) fn read_learner(path: &std::path::Path) -> CliResult<cvlab_core::LearnerSpec> {
    let text = read_to_string(path, "learner config")?;
    toml::from_str(&text).map_err(|e| {
        let at = cvlab_core::config::error_line(&text, &e)
            .map(|l| format!(":{l}"))
            .unwrap_or_default();
        CliError::usage(format!("{}{at}: {}", path.display(), e.message()))
    })
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => run::run(&args).map(|_| ()),
        Command::Decompose(args) => decompose::decompose(&args),
        Command::Rates(args) => rates::rates(&args),
        Command::Preset { name: None } => {
            for (name, _) in presets::PRESETS {
                println!("{name}");
            }
            Ok(())
        }
        Command::Preset { name: Some(name) } => {
            print!("{}", presets::get(&name)?);
            Ok(())
        }
    }
}

//! Command-line front end behind the `sip` binary.
//!
//! Exit codes: 0 success, 2 malformed input or invalid flags, 3 fit failure.
//! `SIP_THREADS` sets the worker count for replication and candidate fan-out.

pub mod artifact;
mod commands;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use artifact::FitArtifact;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FIT: i32 = 3;

pub const THREADS_ENV: &str = "SIP_THREADS";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn fit(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FIT,
            message: message.into(),
        }
    }

    pub(crate) fn io(e: csv::Error) -> Self {
        Self::input(format!("write failed: {e}"))
    }

    /// Input problems detected during fitting map to code 2, the rest to 3.
    pub fn from_fit_error(e: Error) -> Self {
        match e.root() {
            Error::ConstantColumn(_) | Error::DimensionMismatch { .. } => Self::input(e.to_string()),
            _ => Self::fit(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sip", version, about = "Spline single-index prediction models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a CSV file and write a JSON artifact.
    Fit(FitArgs),
    /// Predict rows of a CSV file with a fitted artifact.
    Predict(PredictArgs),
    /// Run a seeded Monte Carlo experiment and write its summary table.
    Simulate(SimulateArgs),
    /// Select lagged predictors by BIC.
    Select(SelectArgs),
    /// Rolling one-step-ahead forecast over a holdout period.
    Forecast(ForecastArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long, default_value_t = 1)]
    pub c1: usize,
    #[arg(long, default_value_t = 5)]
    pub c2: usize,
    #[arg(long = "cap-c", default_value_t = 0.995)]
    pub cap_c: f64,
    #[arg(long = "radius-q", default_value_t = 0.95)]
    pub radius_q: f64,
    /// Also compute sandwich standard errors.
    #[arg(long)]
    pub se: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub example: u8,
    #[arg(long)]
    pub n: usize,
    /// Defaults to 2 for example 1; required for example 2.
    #[arg(long)]
    pub d: Option<usize>,
    /// Misspecification term of example 1.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Defaults to 0.3 for example 1 and 0.2 for example 2.
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long = "max-lag")]
    pub max_lag: usize,
    /// Exogenous columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub exogenous: Vec<String>,
    /// Remove a quadratic spline trend from the response first.
    #[arg(long)]
    pub detrend: bool,
    /// Search all subsets (at most 12 candidates).
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    /// First forecast row: a 0-based data row index, or a value of the
    /// `date`/`time` column.
    #[arg(long)]
    pub split: String,
    /// Lagged predictors such as `flow_lag1,rain_lag0`.
    #[arg(long = "model-cols", value_delimiter = ',', required = true)]
    pub model_cols: Vec<String>,
    /// Use the linear least squares baseline instead of the spline model.
    #[arg(long)]
    pub linear: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses arguments, runs the command, prints diagnostics and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut summary = Vec::new();
    let result = run(&cli, &mut summary);
    let _ = std::io::Write::write_all(&mut std::io::stdout(), &summary);
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Runs a parsed command, writing the human summary to `summary`.
pub fn run(cli: &Cli, summary: &mut (dyn std::io::Write + Send)) -> Result<(), CliError> {
    let pool = thread_pool()?;
    pool.install(|| match &cli.command {
        Command::Fit(a) => commands::fit(a, summary),
        Command::Predict(a) => commands::predict(a, summary),
        Command::Simulate(a) => commands::simulate(a, summary),
        Command::Select(a) => commands::select(a, summary),
        Command::Forecast(a) => commands::forecast(a, summary),
    })
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(CliError::input(format!("{THREADS_ENV} must be positive")));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::fit(format!("cannot start worker threads: {e}")))
}

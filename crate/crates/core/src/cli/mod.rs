//! The `renewal` command-line front end.
//!
//! Every command computes all of its results before anything is written, so
//! a failing run leaves no files behind. Exit status: 0 success,
//! 2 validation, 3 numeric failure, 4 I/O.

mod commands;
mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use commands::{parse_grid, DEFAULT_GRID};
pub use output::{Format, Outcome, TimeUnit};

#[derive(Debug, Parser)]
#[command(name = "renewal", version, about = "Waiting-time analytics for renewal-driven rate series")]
pub struct Cli {
    /// Output format (each command has its own default).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Output file, or directory for commands that write several files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Unit for displayed times; inputs and data files are always seconds.
    #[arg(long = "time-unit", global = true, value_enum, default_value = "s")]
    pub time_unit: TimeUnit,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter a tick CSV into published-rate updates and durations.
    Filter(FilterArgs),
    /// Fit a Weibull law to a durations file.
    Fit(FitArgs),
    /// Waiting-time moments and the Ω(s) curve for a duration law.
    Analyze(AnalyzeArgs),
    /// Monte Carlo waiting times with summary statistics.
    Simulate(SimulateArgs),
    /// Mean duration against mean wait over a Weibull shape grid.
    Paradox(ParadoxArgs),
    /// Ticks to filter to fit to analytic, Monte Carlo and empirical estimates.
    Pipeline(PipelineArgs),
    /// Generate a synthetic random-walk tick CSV.
    SynthTicks(SynthArgs),
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Tick CSV (`timestamp,price`).
    #[arg(long)]
    pub input: PathBuf,
    /// Band half-width in currency units.
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Durations file, one value in seconds per line.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Duration law, e.g. `weibull:m=0.59,a=1`.
    #[arg(long)]
    pub dist: String,
    /// Observation law: `uniform`, `texp:lambda=..`, `window:p=..,T=..`.
    #[arg(long, default_value = "uniform")]
    pub obs: String,
    /// Points in the Ω(s) curve.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Right end of the curve in seconds (default 10 times the mean wait).
    #[arg(long = "s-max")]
    pub s_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value = "uniform")]
    pub obs: String,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// Sampling scheme: `length-biased`, `timeline` or `rejection`
    /// (default: length-biased for uniform observation, rejection otherwise).
    #[arg(long)]
    pub scheme: Option<String>,
}

#[derive(Debug, Args)]
pub struct ParadoxArgs {
    /// Weibull `a`.
    #[arg(long = "a", default_value_t = 1.0)]
    pub a: f64,
    /// Shape grid: `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = DEFAULT_GRID)]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub seed: u64,
    /// Monte Carlo draws on the fitted model.
    #[arg(long, default_value_t = 100_000)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long = "step-std")]
    pub step_std: f64,
    #[arg(long = "tick-interval", default_value_t = 1.0)]
    pub tick_interval: f64,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long = "start-price", default_value_t = 100.0)]
    pub start_price: f64,
}

/// An error with the pipeline stage it came from, if any.
#[derive(Debug)]
pub struct CliError {
    pub stage: Option<&'static str>,
    pub error: Error,
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        Self { stage: None, error }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(stage) => write!(f, "stage \"{stage}\": {}", self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

/// Runs a parsed command without touching the filesystem beyond reading
/// inputs.
pub fn execute(cli: &Cli) -> std::result::Result<Outcome, CliError> {
    match &cli.command {
        Command::Filter(a) => commands::filter(cli, a),
        Command::Fit(a) => commands::fit(cli, a),
        Command::Analyze(a) => commands::analyze(cli, a),
        Command::Simulate(a) => commands::simulate(cli, a),
        Command::Paradox(a) => commands::paradox(cli, a),
        Command::Pipeline(a) => commands::pipeline(cli, a),
        Command::SynthTicks(a) => commands::synth(cli, a),
    }
}

/// Parses `args` (program name first), executes and commits; returns the
/// exit status.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli).and_then(|outcome| outcome.commit().map(|_| outcome).map_err(CliError::from)) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.error.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_with_args(std::env::args_os())
}

//! Command-line pipeline: geometry planning, window-stack extraction,
//! dataset resampling, training, degree reduction, evaluation and reports.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage error.

mod commands;
mod common;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::*;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error:\n  {}", .0.join("\n  "))]
    Usage(Vec<String>),
    #[error(transparent)]
    Domain(#[from] ndpnn_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(e) if e.is_usage() => 2,
            CliError::Domain(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ndpnn",
    version,
    about = "Variable-size image tensorization and polynomial network toolkit"
)]
pub struct Cli {
    /// Flat `key = value` file; flags take precedence over its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Feasible window heights and overlaps for a size range.
    Plan(PlanArgs),
    /// Cut every image into a fixed-size window stack.
    Transform(TransformArgs),
    /// Re-split a manifest so train and test share class and size distributions.
    Resample(ResampleArgs),
    /// Train a polynomial network on window stacks.
    Train(TrainArgs),
    /// Greedy per-layer polynomial degree reduction.
    Reduce(ReduceArgs),
    /// Confusion matrix and timing of a model on one split.
    Eval(EvalArgs),
    /// Plain-text and CSV summary of evaluation artifacts.
    Report(ReportArgs),
    /// Generate a synthetic variable-size image dataset.
    Synth(SynthArgs),
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let file = config::ConfigFile::load(cli.config.as_deref())?;
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(CliError::Usage(vec!["threads: must be positive".into()]));
    }
    let work = move || match cli.command {
        Command::Plan(a) => commands::plan::run(a, file),
        Command::Transform(a) => commands::transform::run(a, file),
        Command::Resample(a) => commands::resample::run(a, file),
        Command::Train(a) => commands::train::run(a, file),
        Command::Reduce(a) => commands::reduce::run(a, file),
        Command::Eval(a) => commands::eval::run(a, file),
        Command::Report(a) => commands::report::run(a, file),
        Command::Synth(a) => commands::synth::run(a, file),
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(vec![format!("threads: {e}")]))?
            .install(work),
        None => work(),
    }
}

mod args;
mod commands;

use std::process::ExitCode;

use adaptagg::model::ModelError;
use adaptagg::pipeline::PipelineError;
use adaptagg_solver::Status;
use clap::Parser;

use args::{Cli, Command};

/// Bad flags, unreadable or invalid config and data files.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Some sweep cells failed; the table was still written.
#[derive(Debug)]
pub struct PartialFailure(pub usize);

impl std::fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} sweep cell(s) failed; see the report", self.0)
    }
}

impl std::error::Error for PartialFailure {}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Infeasible | Status::Unbounded => 3,
        Status::LimitReached => 4,
        Status::Optimal | Status::FeasibleWithinGap => 1,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<PartialFailure>() {
            return 5;
        }
        if let Some(p) = cause.downcast_ref::<PipelineError>() {
            if let Some(s) = p.solver_status() {
                return status_code(s);
            }
            match p {
                PipelineError::Timeseries(_) | PipelineError::Clustering(_) => return 2,
                PipelineError::Model(m) if !matches!(m, ModelError::Solver(_) | ModelError::CostMismatch { .. }) => {
                    return 2
                }
                _ => {}
            }
        }
        if let Some(m) = cause.downcast_ref::<ModelError>() {
            return match m {
                ModelError::NoSolution(s) => status_code(*s),
                ModelError::Solver(_) | ModelError::CostMismatch { .. } => 1,
                _ => 2,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Aggregate(a) => commands::aggregate(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

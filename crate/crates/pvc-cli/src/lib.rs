//! Command-line front end for participant-vocabulary consistency scoring:
//! file formats, run manifests, and the train/baseline/eval/synth commands.

pub mod commands;
pub mod formats;
pub mod manifest;

use std::fmt;

pub use commands::{
    cmd_baseline, cmd_eval, cmd_synth, cmd_train, run, BaselineArgs, BaselineMethod, Cli, Command,
    EvalArgs, SynthArgs, TrainArgs,
};

/// Exit code 2: usage or input error. Exit code 3: runtime or degenerate
/// result.
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// A command failure carrying the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub source: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn usage_error(source: impl Into<anyhow::Error>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        source: source.into(),
    }
}

pub(crate) fn runtime_error(source: impl Into<anyhow::Error>) -> CliError {
    CliError {
        code: EXIT_RUNTIME,
        source: source.into(),
    }
}

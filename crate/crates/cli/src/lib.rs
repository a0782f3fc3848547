//! Experiment runner: builds a problem from a flat configuration, runs the
//! requested scheme over one or more momentum values and writes traces,
//! diagnostics, verdict summaries and plot data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod config;
pub mod experiment;
pub mod svg;

pub use config::{Cli, ExperimentConfig, InitialPoint, ProblemKind, SolverKind, StepChoice};
pub use experiment::{run_cells, run_experiment, CellOutcome, ExperimentOutcome};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] heavyball::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    /// 2 for configuration mistakes and bad inputs, 3 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Core(_) => 2,
            Self::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

//! Problem files, synthetic studies and experiment orchestration for the
//! `robust-alloc` command-line tool.

pub mod experiment;
pub mod generate;
pub mod problem;

use std::io;
use std::path::PathBuf;

use robust_alloc::model::ModelError;
use robust_alloc::regions::RegionError;
use robust_alloc::solvers::SolveError;
use thiserror::Error;

pub use experiment::{run_experiment, run_pareto, run_solver};
pub use generate::generate_lift_study;
pub use problem::{Flags, ProblemFile, RegionSpec, SolverKind, SolverSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 2 for parse and validation errors, 3 for I/O, 4 for solver failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Solve(_) => 4,
            _ => 2,
        }
    }
}

//! Experiment pipelines behind the `domino` binary.

pub mod args;
pub mod commands;
pub mod domains;
pub mod output;

use std::path::PathBuf;

use domino::enumerate::EnumerateError;
use domino::{HeightError, LatticeError, SampleError, ShapeError, TensionError, VarSolveError};
use thiserror::Error;

pub use args::{Cli, Command, Experiment};
pub use commands::{rerun, run, Outcome};
pub use output::Manifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Height(#[from] HeightError),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Tension(#[from] TensionError),
    #[error(transparent)]
    Solve(#[from] VarSolveError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// Process exit status; one per error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Shape(_) | CliError::Lattice(_) => 3,
            CliError::Height(HeightError::NotTileable) | CliError::Sample(SampleError::NotTileable) => 4,
            CliError::Height(_) => 3,
            CliError::Sample(SampleError::EmptyFiber(_)) => 5,
            CliError::Sample(SampleError::BadHeightChange(_)) => 3,
            CliError::Sample(SampleError::Height(HeightError::NotTileable)) => 4,
            CliError::Sample(_) => 1,
            CliError::Enumerate(EnumerateError::TooLarge { .. }) => 6,
            CliError::Enumerate(EnumerateError::Height(HeightError::NotTileable)) => 4,
            CliError::Enumerate(_) => 3,
            CliError::Solve(VarSolveError::BadData(_) | VarSolveError::MeshFailure(_) | VarSolveError::DomainMismatch(_)) => 3,
            CliError::Tension(_) | CliError::Solve(_) => 7,
            CliError::Io { .. } => 8,
        }
    }
}

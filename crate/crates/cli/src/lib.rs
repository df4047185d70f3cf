//! Command implementations behind the `prophet` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use config::{parse_dist_arg, Command, FigureKind, Format, PolicyKind, RunConfig};
pub use output::{Cell, Output};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<prophet_core::Error> for CliError {
    fn from(e: prophet_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

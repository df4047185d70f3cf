use thiserror::Error;

/// Failures surfaced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("root not bracketed: {0}")]
    Bracket(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("policy does not match instance: {0}")]
    ShapeMismatch(String),
}

impl Error {
    /// True for failures caused by bad caller input rather than solver trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::InvalidInput(_) | Error::ShapeMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

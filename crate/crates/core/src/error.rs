//! Error type shared by every stage of the engine.

use thiserror::Error;

/// Errors produced by the estimation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {requested} exceeds the direction-number table (max {max})")]
    UnsupportedDimension { requested: usize, max: usize },

    #[error("coordinate {0} is outside the open unit interval")]
    Domain(f64),

    #[error("correlation matrix is not positive definite (leading minor {minor} fails)")]
    NotPositiveDefinite { minor: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate path: {0}")]
    DegeneratePath(&'static str),

    #[error("{rejected} of {total} paths rejected as degenerate (limit {limit})")]
    ExcessRejections { rejected: u64, total: u64, limit: u64 },
}

impl Error {
    /// True for errors caused by invalid input rather than by the run itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::NotPositiveDefinite { .. } | Error::UnsupportedDimension { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

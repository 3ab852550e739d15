use thiserror::Error;

use crate::linalg::Vector;

/// Errors raised by problem construction, solvers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("operator `{operator}` produced a non-finite value")]
    NonFinite { operator: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("point is outside the domain: {0}")]
    Domain(String),

    #[error("iteration diverged at k = {k}: {reason}")]
    Divergence {
        k: usize,
        reason: String,
        /// Last iterate that was still finite and below the divergence guard.
        last_finite: Box<Vector>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid logistic label {0} (must be -1 or +1)")]
    InvalidLabel(f64),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("observation stream exhausted at step {at_step}")]
    StreamExhausted { at_step: u64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset empty after outlier filtering")]
    EmptyAfterFilter,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("solver did not converge: final gradient norm {grad_norm:.3e}")]
    NonConvergence { grad_norm: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("too few points for fit: need {needed}, have {have}")]
    TooFewPoints { needed: usize, have: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

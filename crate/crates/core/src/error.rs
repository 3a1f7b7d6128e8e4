//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension `{name}`: {reason}")]
    InvalidDimension { name: String, reason: String },

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("key {value} at position {index} outside [0, 1]")]
    KeyOutOfRange { index: usize, value: f64 },

    #[error("value {value} for dimension `{name}` outside [{min}, {max}]")]
    ValueOutOfBounds {
        name: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("individual {member} has no score; evaluate before partitioning")]
    MissingScore { member: usize },

    #[error("length mismatch: {left} vs {right} ({what})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("trial index {got} out of order; expected {expected}")]
    OutOfOrderTrial { expected: usize, got: usize },

    #[error("{what} must not be empty")]
    EmptyInput { what: &'static str },

    #[error("evaluation failed at {context}: {source}")]
    Evaluation {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("training failed at epoch {epoch}: {reason}")]
    Training { epoch: usize, reason: String },

    #[error("objective error: {0}")]
    Objective(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    /// Wraps an error with the evaluation site that produced it.
    pub fn in_context(self, context: impl Into<String>) -> Self {
        Error::Evaluation {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

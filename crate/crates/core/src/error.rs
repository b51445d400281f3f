use thiserror::Error;

/// Errors produced by the gpa-core library.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameter values outside their domain (nonpositive rates, k0 < 1, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The Malthusian-parameter solver could not bracket or converge.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Malformed input data (edge lists, count files).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Structurally valid input that violates a data contract
    /// (empty counts, truncation above the max degree, degree cap exceeded).
    #[error("data error: {0}")]
    Data(String),

    /// Sampler could not start or produced a non-finite state.
    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Shared error type for the whole library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed MDP: non-stochastic transition rows, bad shapes, etc.
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),
    /// Bad configuration value (out-of-range seed, p outside (0,1], ...).
    #[error("config error: {0}")]
    Config(String),
    /// API misuse, e.g. stepping an episode that is already done.
    #[error("usage error: {0}")]
    Usage(String),
    /// Metric preconditions violated (too few points, too few samples).
    #[error("metric error: {0}")]
    Metric(String),
    /// Rank correlation is undefined (zero rank variance).
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    /// A pipeline stage was asked to aggregate incomplete inputs.
    #[error("pipeline error: {0}")]
    Pipeline(String),
    /// Text-format parse failure with location.
    #[error("parse error in {file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

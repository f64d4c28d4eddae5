use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("row {row} is not stochastic (sum = {sum}, min entry = {min})")]
    NotStochastic { row: usize, sum: f64, min: f64 },

    #[error("mean reward {value} at index {index} lies outside [-1, 1]")]
    RewardOutOfRange { index: usize, value: f64 },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("not a probability vector: {0}")]
    NotDistribution(String),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("iteration did not converge after {iterations} steps (last change {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("trial diverged: {0}")]
    Diverged(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("{0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

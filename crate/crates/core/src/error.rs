use thiserror::Error;

/// Errors raised across skeleton construction, projection and fitting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkelError {
    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no training support at query position {0}")]
    NoSupport(String),

    #[error("solver did not converge after {iterations} iterations (residual {gap:.3e})")]
    Convergence { iterations: usize, gap: f64 },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, SkelError>;

impl From<std::io::Error> for SkelError {
    fn from(e: std::io::Error) -> Self {
        SkelError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for SkelError {
    fn from(e: serde_json::Error) -> Self {
        SkelError::Io(e.to_string())
    }
}

impl From<csv::Error> for SkelError {
    fn from(e: csv::Error) -> Self {
        SkelError::Io(e.to_string())
    }
}

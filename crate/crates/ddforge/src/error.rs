use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum DdError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),
    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("curve does not cross threshold {threshold} on the scanned window")]
    NoCrossing { threshold: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

impl From<csv::Error> for DdError {
    fn from(e: csv::Error) -> Self {
        DdError::Io(std::io::Error::other(e))
    }
}

pub type Result<T> = std::result::Result<T, DdError>;

use thiserror::Error;

/// Errors raised by model construction, exact computations and the runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid move: {0}")]
    InvalidMove(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid process specification: {0}")]
    InvalidSpec(String),

    #[error("invalid dual configuration: {0}")]
    InvalidDual(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("measure/duality family mismatch: {0}")]
    InvalidPairing(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the corridor pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("trajectory `{id}`: {message}")]
    InvalidTrajectory { id: String, message: String },

    #[error("airport geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("stationary mean at tau = {tau}: finite difference vanishes")]
    StationaryMean { tau: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        message: message.into(),
    }
}

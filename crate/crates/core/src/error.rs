use thiserror::Error;

/// Failures shared by every layer of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {0}: a mode needs at least two Fock levels")]
    InvalidDimension(usize),

    #[error("operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not normal (max |[f, f†]| = {0:.3e})")]
    NotNormal(f64),

    #[error("gain {0} outside the allowed range")]
    GainOutOfRange(f64),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("grid does not cover the decision regions: {0}")]
    Coverage(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}

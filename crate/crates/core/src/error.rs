use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system spec: {0}")]
    InvalidSpec(String),

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionTooLarge { dim: u128, cap: usize },

    #[error("gate dimension {dim} exceeds dense exponentiation cap {cap}")]
    GateTooLarge { dim: usize, cap: usize },

    #[error("norm drift {drift:e} at step {step} exceeds tolerance; reduce dt")]
    NormDrift { step: usize, drift: f64 },

    #[error("expected {expected} atoms, found {found}")]
    WrongAtomCount { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(err: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

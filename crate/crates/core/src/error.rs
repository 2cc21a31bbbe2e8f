use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "Fock truncation needs more than {cap} levels per mode \
         (tail mass {tail:.3e} at the cap, tolerance {tolerance:.3e})"
    )]
    CutoffInfeasible { cap: usize, tail: f64, tolerance: f64 },

    #[error(
        "tail mass {tail:.3e} beyond level {last_level} exceeds tolerance {tolerance:.3e}; \
         raise the cutoff dimension"
    )]
    TailTooLarge { tail: f64, tolerance: f64, last_level: usize },

    #[error("operator dimension {found} does not match cutoff dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dense two-mode matrix with dim {dim} exceeds the limit of {limit} levels per mode")]
    DenseTooLarge { dim: usize, limit: usize },

    #[error("record has {shots} shots, at least {required} are needed")]
    TooFewShots { shots: usize, required: usize },

    #[error("sample budget of {requested} draws exceeds the guard of {limit}")]
    BudgetExceeded { requested: u64, limit: u64 },

    #[error("record validation failed: {0}")]
    InvalidRecord(String),

    #[error("calibration pixel (0, 0) must have transmittance 1, found {0}")]
    MissingCalibration(f64),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("PGM parse error: {0}")]
    Pgm(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

use std::path::PathBuf;

use crate::priors::denoiser::DenoiserError;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid optical configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid prior chain: {0}")]
    InvalidPrior(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite values produced at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("reconstruction failed at iteration {iteration}: {source}")]
    IterationFailed {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Denoiser(#[from] DenoiserError),

    #[error("field file format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("image error for {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

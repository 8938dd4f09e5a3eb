use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular factor at frequency {index}: |det| = {det:e}")]
    SingularFactor { index: usize, det: f64 },

    #[error("no dominant direction: the edge map has no Hough votes")]
    NoDirection,

    #[error("ADMM diverged at iteration {iteration}: non-finite {what}")]
    Divergence { iteration: usize, what: &'static str },

    #[error("target SNR {target} dB is unreachable: {reason}")]
    UnreachableSnr { target: f64, reason: String },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("manifest: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

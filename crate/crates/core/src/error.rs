use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("code construction failed: {0}")]
    ConstructionFailed(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("model is in {actual} mode, operation requires {expected} mode")]
    WrongMode {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("training aborted at iteration {iteration}: {reason}")]
    TrainingAborted {
        iteration: usize,
        reason: String,
        /// Model state before the offending step, in inference mode.
        last_good: Box<crate::neural::CnnDecoder<f32>>,
    },

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("checkpoint digest mismatch")]
    DigestMismatch,

    #[error("unknown decoder {name:?}; valid names: {valid}")]
    UnknownDecoder { name: String, valid: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

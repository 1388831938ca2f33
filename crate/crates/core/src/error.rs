use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("insufficient classes: need {needed}, have {available}")]
    InsufficientClasses { needed: usize, available: usize },

    #[error("insufficient samples in class {class}: need {needed}, have {available}")]
    InsufficientSamples {
        class: usize,
        needed: usize,
        available: usize,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("not an FFSB file")]
    NotFfsb,

    #[error("size error: expected {expected} bytes, found {found}")]
    Size { expected: u64, found: u64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

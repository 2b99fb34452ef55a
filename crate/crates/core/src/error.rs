use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("token {index} spans {start}..{end} but the mask has only {length} characters")]
    SpanOutOfBounds {
        index: usize,
        start: usize,
        end: usize,
        length: usize,
    },

    #[error("sample `{sample_id}` has a non-finite feature at dimension {dim}")]
    NonFiniteFeature { sample_id: String, dim: usize },

    #[error("labels contain a single class; both members and non-members are required")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no features for layer {0}")]
    MissingLayer(usize),

    #[error("language {language}: need {needed} samples of label {label}, found {found}")]
    InsufficientSamples {
        language: String,
        label: u8,
        needed: usize,
        found: usize,
    },

    #[error("malformed probe bundle: {0}")]
    Bundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by malformed or inconsistent input data rather
    /// than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

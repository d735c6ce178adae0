use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("state error: {0}")]
    State(String),

    #[error("numeric error: non-finite gradient in `{tensor}`")]
    NonFiniteGradient { tensor: String },

    #[error("training diverged at epoch {epoch}, batch {batch} (loss = {loss})")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("format error in {file} row {row}: {message}")]
    Format {
        file: String,
        row: usize,
        message: String,
    },

    #[error("label error: {0}")]
    Label(String),

    #[error("pairing error: {images} image rows but {labels} label rows")]
    Pairing { images: usize, labels: usize },

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("weight blob length error: expected {expected} bytes, found {found}")]
    BlobLength { expected: usize, found: usize },

    #[error("weight blob digest mismatch: manifest says {expected}, blob hashes to {found}")]
    Digest { expected: String, found: String },

    #[error("model consistency error: {0}")]
    Consistency(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("storage error at {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn storage(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Storage {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

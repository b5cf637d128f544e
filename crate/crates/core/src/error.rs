use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("png decode error at byte offset {offset}: {message}")]
    Decode { offset: u64, message: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("png encode error: {0}")]
    Encode(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error("value range error: {0}")]
    Range(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("image too small: {0}")]
    Size(String),

    #[error("non-finite value in {term}")]
    Numerical { term: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("{path}: {message}")]
    Ingestion { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("image id `{0}` is not part of the ground truth")]
    UnknownImage(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("i/o error on {path}: {source}")]
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
}

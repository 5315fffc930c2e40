use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {field}: {message}")]
    Format { field: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("word id {id} out of range for vocabulary of size {size}")]
    Index { id: usize, size: usize },

    #[error("non-finite value passed to {0}")]
    NumericInput(&'static str),

    #[error("non-finite loss encountered: {0}")]
    NumericFailure(String),

    #[error("span error: {0}")]
    Span(String),

    #[error("short-term memory capacity {0} exceeded")]
    Capacity(usize),

    #[error("adjacency policy violation: {0}")]
    Policy(String),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("lookup error: {0}")]
    Lookup(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line tool: 2 usage/config, 3 I/O, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::NumericFailure(_) => 4,
            _ => 2,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("transport error (last status {status:?}): {message}")]
    Transport {
        status: Option<u16>,
        message: String,
    },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite value in `{param}`")]
    Numerical { param: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Transport { .. } => 3,
            Error::Validation(_)
            | Error::Format { .. }
            | Error::Shape(_)
            | Error::Numerical { .. }
            | Error::Json(_) => 4,
            Error::Io { .. } => 4,
        }
    }
}

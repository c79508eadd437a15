use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("kernel error: {0}")]
    Kernel(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("ingestion error at row {row}, column '{column}': {message}")]
    Ingestion {
        row: usize,
        column: String,
        message: String,
    },

    #[error("preprocessing error: {0}")]
    Preprocess(String),

    #[error("non-finite loss {loss} at epoch {epoch}, window {window}")]
    NonFiniteLoss { epoch: usize, window: usize, loss: f64 },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 for usage/input problems, 1 for
    /// failures during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Input(_)
            | Error::Ingestion { .. }
            | Error::Preprocess(_)
            | Error::Incompatible(_)
            | Error::Io { .. }
            | Error::Format { .. } => 2,
            _ => 1,
        }
    }
}

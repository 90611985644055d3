use thiserror::Error;

/// Errors raised by mesh generation, assembly, solves and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("boundary partition error: {0}")]
    Partition(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("numerical failure: {message}")]
    Numeric { message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn numeric(message: impl Into<String>) -> Self {
        Error::Numeric {
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("action index {index} is not in the action table ({len} actions)")]
    UnknownAction { index: usize, len: usize },

    #[error("insufficient replay data: have {have}, need {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Process exit status: 2 for bad configuration or inputs, 3 for
    /// numerical divergence, 4 for file and format failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Shape(_) | Error::UnknownAction { .. } | Error::InsufficientData { .. } => 2,
            Error::Divergence(_) => 3,
            Error::Checkpoint(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 4,
        }
    }
}

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum RiftError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("integration produced a non-finite state at step {step} (t = {time})")]
    Integration { step: usize, time: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RiftError>;

impl RiftError {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        RiftError::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

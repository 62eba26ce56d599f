use rhm_core::RhmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error(transparent)]
    Core(#[from] RhmError),

    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch}, step {step}: loss {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for NnError {
    fn from(e: serde_json::Error) -> Self {
        NnError::Checkpoint(format!("line {}, column {}: {}", e.line(), e.column(), e))
    }
}

impl From<csv::Error> for NnError {
    fn from(e: csv::Error) -> Self {
        NnError::Core(e.into())
    }
}

pub type Result<T> = std::result::Result<T, NnError>;

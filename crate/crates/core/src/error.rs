use thiserror::Error;

use crate::multiindex::MultiIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Time stepping produced non-finite values.
    #[error("integration error at step {step}: {reason}")]
    Integration { step: usize, reason: String },

    /// A small divisor fell below the configured floor.
    #[error("resonance: |1 - exp(i h Omega)| = {divisor:e} for index {witness}")]
    Resonance { witness: MultiIndex, divisor: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

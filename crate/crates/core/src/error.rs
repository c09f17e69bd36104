//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the simulation lab.
#[derive(Debug, Error)]
pub enum LfppError {
    /// An argument or configuration value violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// A derived object could not be constructed (for example a kernel profile that is identically zero).
    #[error("construction error: {0}")]
    Construction(String),
    /// A Gaussian sampler could not produce a valid field.
    #[error("sampler error: {0}")]
    Sampler(String),
    /// A requested computation would exceed the configured resource ceilings.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// A configuration file failed validation; every violated field is listed.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),
    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Serialization failure.
    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for LfppError {
    fn from(e: serde_json::Error) -> Self {
        LfppError::Serde(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, LfppError>;

/// Returns a validation error with the given message.
pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LfppError::Validation(msg.into()))
}

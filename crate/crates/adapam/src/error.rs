//! Crate-wide error type and result alias.

use std::collections::BTreeMap;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration: unknown environment, bad layer sizes,
    /// unregistered loss head, missing artifacts for a method.
    #[error("configuration error: {0}")]
    Config(String),

    /// Dimension or shape mismatch between arrays, parameters, or inputs.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid argument value (empty batch, index out of range, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// Non-finite value where a finite one is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A training stage finished below its quality gate or diverged.
    /// Carries the final metrics so the failure is diagnosable.
    #[error("training failure: {message} (metrics: {metrics:?})")]
    Training {
        message: String,
        metrics: BTreeMap<String, f64>,
    },

    /// A pipeline stage was invoked before its upstream stage completed.
    /// The message names the missing stage.
    #[error("staged-dependency error: missing stage '{0}'")]
    StagedDependency(String),

    /// A recorded artifact hash no longer matches the file on disk.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn training(message: impl Into<String>, metrics: &[(&str, f64)]) -> Self {
        Error::Training {
            message: message.into(),
            metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// Process exit code for the CLI: 2 config, 3 staged dependency,
    /// 4 training failure, 5 integrity.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::StagedDependency(_) => 3,
            Error::Training { .. } => 4,
            Error::Integrity(_) => 5,
            _ => 2,
        }
    }
}

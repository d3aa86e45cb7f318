use std::path::PathBuf;

use thiserror::Error;

/// Which validity check tripped during time integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardKind {
    Trace,
    Hermiticity,
    Positivity,
    NonFinite,
}

impl std::fmt::Display for GuardKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GuardKind::Trace => "trace drift",
            GuardKind::Hermiticity => "hermiticity drift",
            GuardKind::Positivity => "negative eigenvalue",
            GuardKind::NonFinite => "non-finite entry",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("{kind} at t = {time:.6} (step {step}): value {value:.3e} exceeds {limit:.1e}")]
    Guard {
        kind: GuardKind,
        time: f64,
        step: usize,
        value: f64,
        limit: f64,
    },

    #[error("pulse operator is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("generator basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("oracle dimension {dim} exceeds cap {cap}")]
    OracleTooLarge { dim: usize, cap: usize },

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        SimError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

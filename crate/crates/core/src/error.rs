use serde::Serialize;
use thiserror::Error;

use crate::validate::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("evaluation produced a non-finite value at q={q}, theta={theta}")]
    Evaluation { q: f64, theta: f64 },

    #[error("validation failed with {} violation(s)", .0.violation_count)]
    Validation(Box<ValidationReport>),

    #[error("numeric error: {message} (best estimate {estimate})")]
    Numeric { message: String, estimate: f64 },

    #[error("resource cap exceeded: {message} (required {required}, cap {cap})")]
    Resource {
        message: String,
        required: u128,
        cap: u128,
    },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("equilibrium error: {0}")]
    Equilibrium(String),

    #[error("unknown instance name `{0}`")]
    UnknownInstance(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

/// Coarse error classes, used for exit codes and machine-readable output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    Resource,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Resource { .. } => ErrorKind::Resource,
            Error::Internal(_) | Error::Numeric { .. } | Error::Equilibrium(_) => {
                ErrorKind::Internal
            }
            _ => ErrorKind::Validation,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::Evaluation { .. } => "evaluation",
            Error::Validation(_) => "validation",
            Error::Numeric { .. } => "numeric",
            Error::Resource { .. } => "resource",
            Error::Internal(_) => "internal",
            Error::Equilibrium(_) => "equilibrium",
            Error::UnknownInstance(_) => "unknown_instance",
            Error::Parse(_) => "parse",
        }
    }
}

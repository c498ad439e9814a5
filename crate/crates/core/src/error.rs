use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("kernel has no finite limit at +inf: {0}")]
    NoLimit(String),
    #[error("rejection sampler stalled (acceptance probability {0:e})")]
    RejectionStall(f64),
    #[error("shift construction needs a long-tailed catalog marginal, got {0}")]
    UnsupportedMarginal(String),
    #[error("model is not conditionally dependent")]
    NotCd,
    #[error("divergent: {0}")]
    Divergent(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("contraction condition fails: E Y^alpha = {0} >= 1")]
    Contraction(f64),
    #[error("model failed validation: {0}")]
    InvalidModel(String),
    #[error("block {block}: {source}")]
    Block { block: usize, source: Box<Error> },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Non-fatal conditions attached to reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Fewer than 100 hits at a threshold; the interval is unreliable.
    InsufficientHits { x: f64, hits: u64 },
    /// Only the weaker moment condition `E Y^a s(Y) < inf` could be verified.
    CaseIiOnly,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::InsufficientHits { x, hits } => {
                write!(f, "only {hits} hits at x = {x}; interval unreliable")
            }
            Warning::CaseIiOnly => write!(
                f,
                "only E Y^alpha s(Y) < inf holds; the higher-moment condition failed"
            ),
        }
    }
}

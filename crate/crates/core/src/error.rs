use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error bound {error_bound:e})")]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("numerical inconsistency: {0}")]
    Numeric(String),

    #[error("cross-check failed for {quantity}: primary {primary:e} vs check {check:e}")]
    CrossCheck {
        quantity: String,
        primary: f64,
        check: f64,
    },

    #[error("insufficient data: got {got}, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("shape parameter is unidentifiable: all samples are equal")]
    Unidentifiable,

    #[error("root search did not converge within {iterations} iterations (bracket [{lo}, {hi}])")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("sampling aborted: acceptance rate {rate:e} below {threshold:e} in pilot run")]
    SamplingAborted { rate: f64, threshold: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("row {row}: {kind}")]
    Ingest { row: usize, kind: IngestErrorKind },

    #[error("input contains no data")]
    Empty,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// What went wrong with a particular input row.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestErrorKind {
    #[error("malformed row: {0}")]
    Malformed(String),
    #[error("timestamp {current} does not increase past previous {previous}")]
    NonIncreasingTimestamp { previous: f64, current: f64 },
    #[error("non-positive price {0}")]
    NonPositivePrice(f64),
    #[error("non-positive duration {0}")]
    NonPositiveDuration(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 4,
            Error::Quadrature { .. }
            | Error::Overflow(_)
            | Error::Numeric(_)
            | Error::CrossCheck { .. }
            | Error::NoConvergence { .. }
            | Error::SamplingAborted { .. } => 3,
            _ => 2,
        }
    }
}

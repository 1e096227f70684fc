use thiserror::Error;

/// Errors raised by the inference engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An arithmetic operation has no representable result (negative value,
    /// indeterminate form such as `inf - inf`).
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A numerical procedure (quadrature, root finding) did not reach its
    /// requested tolerance.
    #[error("numerical failure in {what}: achieved tolerance {achieved:e}")]
    Numerical { what: &'static str, achieved: f64 },

    #[error("algorithm/prior mismatch: {0}")]
    AlgorithmMismatch(String),

    #[error("time limit exceeded after {elapsed_secs:.1}s")]
    Timeout { elapsed_secs: f64 },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures caused by floating-point limitations rather than
    /// by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical { .. } | Error::Domain { .. } | Error::Timeout { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

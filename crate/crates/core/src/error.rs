use thiserror::Error;

/// Errors raised by the detection library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series too short: n = {n}, need at least {min}")]
    TooShort { n: usize, min: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("invalid signal spec: {0}")]
    InvalidSpec(String),

    #[error("unstable noise model: |a(t)| = {value} at t = {t}")]
    UnstableModel { t: f64, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} outside valid range [{lo}, {hi}]")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("{stage} did not terminate within {cap} iterations")]
    IterationCap { stage: &'static str, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} is outside its domain: {reason}")]
    Domain { what: &'static str, reason: String },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    NonConvergence { estimate: f64, error: f64 },

    #[error("waveform energy {energy} differs from 1 by more than {tolerance:e}")]
    Energy { energy: f64, tolerance: f64 },

    #[error("slope fit refused: {0}")]
    Fit(String),

    #[error("matrix size n = {n} exceeds the cap of {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("waveform parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        what,
        reason: reason.into(),
    }
}

use thiserror::Error;

/// Errors raised by samplers, simulators and exact formulas.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the range an operation accepts.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// An argument lies outside the domain of a function (off-simplex point, absorbed state, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// The request is well formed but not covered by the implemented formulas.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An integral of 1/Z diverged because the path touched zero.
    #[error("divergence: {0}")]
    Divergence(String),
    /// A lookup fell outside the range of a computed table.
    #[error("out of range: {0}")]
    Range(String),
    /// A simulation ran past its safety horizon without the expected event.
    #[error("no exit before time {0}")]
    NoExit(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

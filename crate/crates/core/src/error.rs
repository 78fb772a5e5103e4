use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A mode, bin or element refers to something the grid does not contain.
    #[error("configuration error: {0}")]
    Config(String),
    /// A parameter lies outside its physical range.
    #[error("validation error: {0}")]
    Validation(String),
    /// Arguments are individually valid but inconsistent with each other.
    #[error("domain error: {0}")]
    Domain(String),
    /// The least-squares fit did not produce a usable result.
    #[error("fit error: {message} (best rms residual {best_residual:.3e})")]
    Fit { message: String, best_residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

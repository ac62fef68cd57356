use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter or configuration value is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The integration region has no interior.
    #[error("empty integration region [{lo}, {hi}]")]
    EmptyRegion { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

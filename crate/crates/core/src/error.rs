use thiserror::Error;

/// Errors raised by the sensing toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// Inconsistent or malformed arguments (length mismatch, missing config, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested formula is not defined for these parameters (e.g. M = 1
    /// in an expression that divides by M - 1).
    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    /// A high-SNR closed form was requested outside the regime where it exists.
    #[error("outside asymptotic regime: {0}")]
    Regime(String),

    /// A bracketed root search found no sign change.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Quadrature or iteration failed to reach the requested tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An optimisation constraint cannot be met anywhere in the search domain.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A curve does not carry enough information for the requested estimate.
    #[error("estimation error: {0}")]
    Estimation(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

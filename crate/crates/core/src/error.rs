use thiserror::Error;

/// Errors raised by the numerical routines and the run-config layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Mixing parameters outside `d >= 3`, `a < d/2 - 1`, `b > -1`.
    #[error("invalid mixing parameters: {0}")]
    InvalidParams(String),

    /// An argument outside an operation's domain (e.g. `g < 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: {reason} (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        reason: String,
        estimate: f64,
        error: f64,
    },

    /// The requested integral does not converge.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// The tabulated `1/q*` reached zero, so `k*` is undefined.
    #[error("singular dominator: {0}")]
    Singular(String),

    /// A Blyth prior that is not proper for the chosen sequence kind.
    #[error("improper prior: {0}")]
    ImproperPrior(String),

    /// Bad run configuration (flags, config file, grid spec).
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::Divergent(_)
                | Error::Singular(_)
                | Error::ImproperPrior(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

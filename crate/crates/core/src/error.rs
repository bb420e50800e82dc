use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("block {block} is not explicitly sieved; need sieve limit >= {needed_limit}")]
    BlockOutOfRange { block: i32, needed_limit: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("covariance is not positive semidefinite: |rho| = {rho} > s^2 = {variance} at block {block}")]
    CovarianceNotPsd { block: i32, rho: f64, variance: f64 },

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("unreachable tolerance {requested:e} at this height; best achievable bound {achievable:e}")]
    Tolerance { requested: f64, achievable: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cache format error: {0}")]
    Cache(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the distribution, simulation and verification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("trial {trial}: geometric lifetime {nu} exceeds max_lifetime {max_lifetime}")]
    LifetimeExceeded {
        trial: u64,
        nu: u64,
        max_lifetime: u64,
    },

    #[error(
        "series truncated at {terms} terms has tail bound {tail_bound:e} above requested {requested:e}; increase the truncation index"
    )]
    Truncation {
        terms: u64,
        tail_bound: f64,
        requested: f64,
    },

    #[error("sample contains NaN at position {0}")]
    NaN(usize),

    #[error("need at least {needed} points in the selected tail, got {got}")]
    InsufficientTail { needed: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

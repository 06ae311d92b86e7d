use thiserror::Error;

/// Errors raised across the lab.
#[derive(Debug, Error)]
pub enum Error {
    /// A loss or training configuration is not usable.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric evaluation produced a non-finite value where a finite one was required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The requested computation exceeds a hard resource bound.
    #[error("resource error: {0}")]
    Resource(String),

    /// An operation precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An internal invariant was found broken at runtime.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// Training left the stable regime.
    #[error("training diverged at iteration {iteration}: surrogate risk {risk} exceeds 10x the initial {initial}")]
    Diverged {
        iteration: usize,
        risk: f64,
        initial: f64,
    },

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the coefficient, sieve and summation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments was violated.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported weight {0}: the level-1 cusp space is not one-dimensional")]
    UnsupportedWeight(i64),

    /// Level data inconsistent with a squarefree conductor.
    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("index {n} is outside the coefficient table (bound {bound})")]
    OutOfRange { n: u64, bound: u64 },

    #[error("no prime p <= {bound} with p not dividing the level and a(p) < 0")]
    SearchExhausted { bound: u64 },

    /// A structural invariant failed; `n` names the first offending index when known.
    #[error("invariant violated at n = {n}: {reason}")]
    Invariant { n: u64, reason: String },

    #[error("{path}:{line}: {reason}")]
    Load {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn invariant(n: u64, reason: impl Into<String>) -> Self {
        Error::Invariant {
            n,
            reason: reason.into(),
        }
    }
}

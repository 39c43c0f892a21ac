//! Error type shared across the crate.

use thiserror::Error;

/// Errors surfaced by the library and mapped to CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or configuration parameter violates its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An analytic function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// No in-gap bound state exists for the requested parameters.
    #[error("no bound state: {0}")]
    NoBoundState(String),

    /// A requested time or window lies outside the sampled grid.
    #[error("range error: {0}")]
    Range(String),

    /// The dense eigensolve guard was tripped.
    #[error("dimension {dim} exceeds the dense-solve guard ({limit})")]
    DenseSolveGuard { dim: usize, limit: usize },

    /// The simulation window extends past the recurrence horizon and
    /// strict mode is active.
    #[error("recurrence horizon exceeded: {0}")]
    HorizonExceeded(String),

    /// An internal numerical procedure failed to converge or produced an
    /// inconsistent result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 invalid input, 3 physics guard
    /// tripped under strict mode, 4 internal numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::NoBoundState(_)
            | Error::Range(_)
            | Error::Io(_) => 2,
            Error::HorizonExceeded(_) => 3,
            Error::DenseSolveGuard { .. } | Error::Numerical(_) => 4,
        }
    }
}

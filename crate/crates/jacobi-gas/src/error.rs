//! Error type shared across the crate.

/// Errors produced by toolkit operations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A parameter violated its domain (nonpositive where positive required, etc.).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A configuration's length does not match the parameter set's particle count.
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The equilibrium solver exhausted its iteration budget.
    #[error(
        "equilibrium solver did not converge: residual {residual:.3e} after {iters} iterations \
         (tolerance {tol:.3e})"
    )]
    NotConverged {
        residual: f64,
        iters: usize,
        tol: f64,
    },

    /// The equilibrium solver stalled at a residual floor the grid cannot beat.
    #[error(
        "tolerance {tol:.3e} unreachable on this grid: descent stalled at residual floor \
         {residual:.3e} after {iters} iterations; refine the grid"
    )]
    GridLimited {
        residual: f64,
        iters: usize,
        tol: f64,
    },

    /// Too few usable estimates to perform a statistical fit.
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    /// An operation that needs at least one particle received none.
    #[error("empty configuration")]
    EmptyConfiguration,
}

pub type Result<T> = std::result::Result<T, Error>;

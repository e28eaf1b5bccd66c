use alloc::string::String;

/// Errors raised by the spectral core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only d = 1, 2, 3 are implemented")]
    UnsupportedDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid of {points} points per dimension does not resolve the lattice (need more than {required})")]
    Unresolved { points: usize, required: usize },

    #[error("fields live on different lattices")]
    LatticeMismatch,

    #[error("cutoff {requested} exceeds the carrier lattice cutoff {available}")]
    CutoffExceedsLattice { requested: f64, available: f64 },

    #[error("overflow while evaluating {what} (diagnostic norm {norm:e})")]
    Overflow { what: &'static str, norm: f64 },

    #[error("nonlinear substep did not converge (residual {residual:e} after {iterations} iterations)")]
    NonlinearSolve { residual: f64, iterations: usize },

    #[error("need at least {need} {what}, got {have}")]
    TooFew {
        what: &'static str,
        need: usize,
        have: usize,
    },

    #[error("simulation budget exceeded: {required} steps required, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

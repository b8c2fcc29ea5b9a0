use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by every layer of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input vectors are rank-deficient below tolerance {tol:.3e}")]
    DegenerateSet { tol: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenConvergence,

    #[error("state invariant violated at t={t}: {what} = {value:.3e} (tolerance {tol:.1e})")]
    StateInvariantViolated {
        what: &'static str,
        t: f64,
        value: f64,
        tol: f64,
    },

    #[error("subspace dimension changes inside [{from}, {to}]")]
    DimensionChangeCrossed { from: f64, to: f64 },

    #[error("basis derivative unavailable at t={t}: {reason}")]
    DerivativeUnavailable { t: f64, reason: &'static str },

    #[error("eigencondition violated at t={t}: residual {residual:.3e} exceeds {tol:.1e}")]
    EigenconditionViolated { t: f64, residual: f64, tol: f64 },

    #[error(
        "subspace conditions violated at t={t}: {what} residual {residual:.3e} exceeds {tol:.1e}"
    )]
    ConditionsViolated {
        what: &'static str,
        t: f64,
        residual: f64,
        tol: f64,
    },

    #[error("jump operators have no common dark state at t={t}")]
    EmptyKernel { t: f64 },
}

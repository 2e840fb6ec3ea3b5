use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid Lie algebra definition: {0}")]
    InvalidAlgebra(String),

    #[error("matrix is not a member of group {group}: {reason}")]
    NotInGroup { group: String, reason: String },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("logarithm requested at the cut locus (rotation angle {angle:.9} >= pi - 1e-6); re-seed the caller")]
    CutLocus { angle: f64 },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("ill-conditioned matrix (condition number {condition:.3e} > {limit:.1e})")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("inertia is not ad-invariant (residual {residual:.3e})")]
    NotAdInvariant { residual: f64 },

    #[error("Lagrangian is not hyperregular: top-slot Hessian condition number {condition:.3e}")]
    NotHyperregular { condition: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("path too short for the difference stencil: need at least {needed} points, got {got}")]
    StencilTooShort { needed: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("integration diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("shooting did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}

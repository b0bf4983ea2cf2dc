//! Convex-analysis toolkit: strongly convex quadratic costs with closed-form
//! conjugates, indicator regularizers with projection proxes, support
//! functions, and the Moreau decompositions that connect them.

mod polytope;
mod quadratic;
mod regularizer;

pub use polytope::PolytopeOracle;
pub use quadratic::QuadraticOracle;
pub use regularizer::{
    moreau_check, prox_conjugate, BoxOracle, Regularizer, RegularizerKind, ZeroOracle,
};

use thiserror::Error;

/// Value of an extended-real function: finite, or the `+∞` marker used by
/// indicator conjugates outside their domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Finite(f64),
    Infinite,
}

impl Support {
    pub fn is_finite(self) -> bool {
        matches!(self, Support::Finite(_))
    }

    /// Finite value, or `f64::INFINITY` for the marker.
    pub fn as_f64(self) -> f64 {
        match self {
            Support::Finite(v) => v,
            Support::Infinite => f64::INFINITY,
        }
    }

    pub fn plus(self, other: Support) -> Support {
        match (self, other) {
            (Support::Finite(a), Support::Finite(b)) => Support::Finite(a + b),
            _ => Support::Infinite,
        }
    }
}

impl std::fmt::Display for Support {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Support::Finite(v) => write!(f, "{v}"),
            Support::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("constraint row {row} is numerically zero")]
    ZeroRow { row: usize },
    #[error("box bounds must be finite with lo <= hi componentwise")]
    BadBox,
    #[error("polytope is empty (no feasible point found)")]
    EmptyPolytope,
    #[error("projection did not converge within {iterations} sweeps (last change {change:.3e})")]
    ProjectionDidNotConverge { iterations: usize, change: f64 },
    #[error("support function unsupported for dimension {dim} with {rows} halfspaces")]
    UnsupportedSupportFunction { dim: usize, rows: usize },
    #[error("no independent closed form for the conjugate prox of this oracle")]
    NoDirectConjugateProx,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step size must be positive, got {0}")]
    BadStepSize(f64),
}

//! Distributed dual proximal gradient solvers over undirected graphs.
//!
//! A separable problem `min_x Σ_i f_i(x) + g_i(x)` with strongly convex
//! smooth parts `f_i` and convex regularizers `g_i` is rewritten with one
//! copy `x_i` per node, consensus constraints on the edges of a fixed
//! connected graph, and slacks for the regularizers. The dual of that
//! reformulation separates into per-node blocks, and a proximal gradient on
//! the dual becomes a distributed algorithm: each node performs a local
//! minimization for its primal variable and a local proximal gradient step
//! on its multipliers.
//!
//! The crate provides:
//!
//! - [`graph`]: undirected graphs and connected Erdős–Rényi sampling;
//! - [`oracles`]: quadratic costs with closed-form conjugates, indicator
//!   regularizers with projection proxes, support functions, and Moreau
//!   decompositions;
//! - [`dual`]: the dual-variable layout, the dual objective `Γ = F* + G*`,
//!   the synchronous solver, and its accelerated variant;
//! - [`gossip`]: the event-driven asynchronous simulator where one random
//!   node wakes per iteration and updates only its own block;
//! - [`ucdc`]: a generic uniform block-coordinate proximal gradient solver,
//!   used standalone and as the equivalence oracle for the gossip engine;
//! - [`harness`]: experiment generation, a centralized reference solver,
//!   rate-bound checks, and trace/plot emission.

pub mod dual;
pub mod gossip;
pub mod graph;
pub mod harness;
pub mod instance;
pub mod oracles;
#[doc(hidden)]
pub mod testkit;
pub mod trace;
pub mod ucdc;

pub use dual::{DualState, StepSizes};
pub use graph::Graph;
pub use instance::ProblemInstance;
pub use trace::{Trace, TraceOptions, TraceRecord};

use thiserror::Error;

/// Errors from solver-level operations.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Oracle(#[from] oracles::OracleError),
}

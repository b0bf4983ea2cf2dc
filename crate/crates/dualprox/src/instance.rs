//! A problem instance: the communication graph plus one smooth quadratic
//! cost and one regularizer per node, all sharing a common dimension.

use nalgebra::DVector;

use crate::graph::Graph;
use crate::oracles::{OracleError, QuadraticOracle, Regularizer, RegularizerKind, Support};
use crate::SolverError;

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    graph: Graph,
    dim: usize,
    costs: Vec<QuadraticOracle>,
    regularizers: Vec<RegularizerKind>,
}

impl ProblemInstance {
    pub fn new(
        graph: Graph,
        dim: usize,
        costs: Vec<QuadraticOracle>,
        regularizers: Vec<RegularizerKind>,
    ) -> Result<Self, SolverError> {
        let n = graph.node_count();
        if costs.len() != n || regularizers.len() != n {
            return Err(SolverError::BadParameter(format!(
                "expected {n} cost and regularizer oracles, got {} and {}",
                costs.len(),
                regularizers.len()
            )));
        }
        for (idx, c) in costs.iter().enumerate() {
            if c.dim() != dim {
                return Err(SolverError::BadParameter(format!(
                    "cost oracle {} has dimension {}, expected {dim}",
                    idx + 1,
                    c.dim()
                )));
            }
        }
        for (idx, g) in regularizers.iter().enumerate() {
            if g.dim() != dim {
                return Err(SolverError::BadParameter(format!(
                    "regularizer {} has dimension {}, expected {dim}",
                    idx + 1,
                    g.dim()
                )));
            }
        }
        Ok(Self {
            graph,
            dim,
            costs,
            regularizers,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.node_count()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Smooth cost of node `i` (1-based).
    pub fn cost(&self, i: usize) -> &QuadraticOracle {
        &self.costs[i - 1]
    }

    /// Regularizer of node `i` (1-based).
    pub fn regularizer(&self, i: usize) -> &RegularizerKind {
        &self.regularizers[i - 1]
    }

    /// Strong-convexity moduli σ_i in node order.
    pub fn sigmas(&self) -> Vec<f64> {
        self.costs.iter().map(|c| c.sigma()).collect()
    }

    pub fn sum_inverse_sigma(&self) -> f64 {
        self.costs.iter().map(|c| 1.0 / c.sigma()).sum()
    }

    /// `Σ_i f_i(x)`.
    pub fn primal_smooth_cost(&self, x: &DVector<f64>) -> f64 {
        self.costs.iter().map(|c| c.eval(x)).sum()
    }

    /// `Σ_i f_i(x) + Σ_i g_i(x)`; `+∞` when `x` violates some local set.
    pub fn primal_cost(&self, x: &DVector<f64>) -> Support {
        let mut total = Support::Finite(self.primal_smooth_cost(x));
        for g in &self.regularizers {
            total = total.plus(g.eval(x));
        }
        total
    }

    /// Euclidean projection onto `∩_i X_i` by Dykstra's method over the
    /// per-node indicator projections. Identity when no node carries an
    /// indicator.
    pub fn project_intersection(
        &self,
        v: &DVector<f64>,
        tol: f64,
        cap: usize,
    ) -> Result<DVector<f64>, OracleError> {
        let projectors: Vec<&RegularizerKind> = self
            .regularizers
            .iter()
            .filter(|g| !matches!(g, RegularizerKind::Zero(_)))
            .collect();
        match projectors.len() {
            0 => return Ok(v.clone()),
            1 => return projectors[0].indicator_projection(v).unwrap(),
            _ => {}
        }
        let mut x = v.clone();
        let mut corrections = vec![DVector::zeros(self.dim); projectors.len()];
        let mut change = f64::INFINITY;
        for _ in 0..cap {
            let sweep_start = x.clone();
            for (k, g) in projectors.iter().enumerate() {
                let shifted = &x + &corrections[k];
                let projected = g.indicator_projection(&shifted).unwrap()?;
                corrections[k] = shifted - &projected;
                x = projected;
            }
            change = (&x - sweep_start).norm();
            if change <= tol {
                return Ok(x);
            }
        }
        Err(OracleError::ProjectionDidNotConverge {
            iterations: cap,
            change,
        })
    }

    /// Deterministic text dump of the full instance; identical seeds and
    /// configs yield identical bytes.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        out.push_str("dualprox instance v1\n");
        out.push_str(&format!("n {}\nd {}\n", self.n(), self.dim));
        out.push_str("graph\n");
        out.push_str(&self.graph.to_edge_list());
        out.push_str("end graph\n");
        for i in 1..=self.n() {
            out.push_str(&format!("node {i}\n"));
            let c = self.cost(i);
            match c.diag() {
                Some(diag) => {
                    out.push_str("cost diag");
                    for v in diag.iter() {
                        out.push_str(&format!(" {v}"));
                    }
                    out.push('\n');
                }
                None => {
                    out.push_str("cost dense");
                    for v in c.q_matrix().iter() {
                        out.push_str(&format!(" {v}"));
                    }
                    out.push('\n');
                }
            }
            out.push_str("cost linear");
            for v in c.linear_term().iter() {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
            match self.regularizer(i) {
                RegularizerKind::Zero(_) => out.push_str("reg zero\n"),
                RegularizerKind::Box(b) => {
                    let (lo, hi) = b.bounds();
                    out.push_str("reg box");
                    for v in lo.iter().chain(hi.iter()) {
                        out.push_str(&format!(" {v}"));
                    }
                    out.push('\n');
                }
                RegularizerKind::Polytope(p) => {
                    out.push_str(&format!("reg polytope {}\n", p.rows()));
                    for row in 0..p.rows() {
                        out.push_str("row");
                        for v in p.a_matrix().row(row).iter() {
                            out.push_str(&format!(" {v}"));
                        }
                        out.push_str(&format!(" {}\n", p.b_vector()[row]));
                    }
                }
            }
        }
        out
    }
}

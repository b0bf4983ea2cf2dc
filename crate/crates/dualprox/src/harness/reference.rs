//! Centralized reference solver: minimizes `Σ_i f_i(x)` over `∩_i X_i` by
//! accelerated projected gradient, cross-checked against a refining grid
//! search in low dimension. Every acceptance check is measured against this
//! oracle, never against another distributed run.

use nalgebra::{DMatrix, DVector};

use crate::instance::ProblemInstance;
use crate::oracles::{Regularizer, RegularizerKind};
use crate::testkit;

use super::HarnessError;

const MAX_ITERATIONS: usize = 500_000;
/// A constraint row counts as active when its slack is below this (scaled).
const ACTIVE_SLACK_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ActiveConstraint {
    pub node: usize,
    pub row: usize,
    pub slack: f64,
}

/// Centralized optimum with diagnostics.
#[derive(Debug, Clone)]
pub struct Reference {
    pub x: DVector<f64>,
    pub value: f64,
    /// Polytope rows active at the optimum.
    pub active_constraints: Vec<ActiveConstraint>,
    pub iterations: usize,
}

fn total_gradient(inst: &ProblemInstance, x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(inst.dim());
    for i in 1..=inst.n() {
        g += inst.cost(i).grad(x);
    }
    g
}

fn smooth_curvature_bounds(inst: &ProblemInstance) -> (f64, f64) {
    let d = inst.dim();
    let mut sum_q = DMatrix::zeros(d, d);
    for i in 1..=inst.n() {
        sum_q += inst.cost(i).q_matrix();
    }
    let eigs = sum_q.symmetric_eigen().eigenvalues;
    (2.0 * eigs.min(), 2.0 * eigs.max())
}

/// Solves `min_x Σ_i f_i(x)` over `∩_i X_i` to gradient-mapping norm `tol`.
pub fn centralized_reference(
    inst: &ProblemInstance,
    tol: f64,
) -> Result<Reference, HarnessError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(HarnessError::Config("tolerance must be positive".into()));
    }
    let proj_tol = (tol / 100.0).min(1e-12);
    let project = |v: &DVector<f64>| -> Result<DVector<f64>, HarnessError> {
        inst.project_intersection(v, proj_tol, 200_000)
            .map_err(|e| HarnessError::Reference(format!("projection failed: {e}")))
    };
    let (_, l_max) = smooth_curvature_bounds(inst);
    let step = 1.0 / l_max;

    let mut x = project(&DVector::zeros(inst.dim()))?;
    let mut x_prev = x.clone();
    let mut theta: f64 = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut map_norm = f64::INFINITY;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        let w = &x + beta * (&x - &x_prev);
        let x_next = project(&(&w - step * total_gradient(inst, &w)))?;
        x_prev = x;
        x = x_next;
        theta = theta_next;
        // gradient mapping at the new iterate
        let mapped = project(&(&x - step * total_gradient(inst, &x)))?;
        map_norm = (&x - &mapped).norm() / step;
        if map_norm <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(HarnessError::Reference(format!(
            "projected gradient did not reach tolerance {tol:.1e} in {MAX_ITERATIONS} iterations \
             (gradient mapping {map_norm:.3e})"
        )));
    }
    let value = inst.primal_smooth_cost(&x);

    if inst.dim() <= 2 {
        grid_cross_check(inst, &x, value)?;
    }

    let mut active_constraints = Vec::new();
    for i in 1..=inst.n() {
        if let RegularizerKind::Polytope(p) = inst.regularizer(i) {
            for row in 0..p.rows() {
                let b = p.b_vector()[row];
                let slack = b - p.a_matrix().row(row).transpose().dot(&x);
                if slack.abs() <= ACTIVE_SLACK_TOL * (1.0 + b.abs()) {
                    active_constraints.push(ActiveConstraint {
                        node: i,
                        row,
                        slack,
                    });
                }
            }
        }
    }
    Ok(Reference {
        x,
        value,
        active_constraints,
        iterations,
    })
}

/// Refining grid search over feasible points near the candidate optimum; a
/// strictly better grid point means the solver stopped short.
fn grid_cross_check(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    value: f64,
) -> Result<(), HarnessError> {
    let objective = |p: &DVector<f64>| {
        let feasible = (1..=inst.n()).all(|i| inst.regularizer(i).eval(p).is_finite());
        if feasible {
            inst.primal_smooth_cost(p)
        } else {
            f64::INFINITY
        }
    };
    let half_width = 1.0 + 0.5 * x.norm();
    let lo: Vec<f64> = x.iter().map(|&c| c - half_width).collect();
    let hi: Vec<f64> = x.iter().map(|&c| c + half_width).collect();
    let (_, grid_value) = testkit::grid_minimize(&objective, &lo, &hi, 24, 12);
    let scale = 1.0 + value.abs();
    if grid_value < value - 1e-7 * scale {
        return Err(HarnessError::Reference(format!(
            "grid refinement found a better feasible value ({grid_value} < {value})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::oracles::{PolytopeOracle, QuadraticOracle, RegularizerKind, ZeroOracle};
    use approx::assert_relative_eq;

    #[test]
    fn unconstrained_two_node_reference() {
        let g = Graph::from_edges(2, &[(1, 2)]).unwrap();
        let costs = vec![
            QuadraticOracle::scalar(1.0, 0.0).unwrap(),
            QuadraticOracle::scalar(1.0, -4.0).unwrap(),
        ];
        let regs = vec![
            RegularizerKind::Zero(ZeroOracle::new(1)),
            RegularizerKind::Zero(ZeroOracle::new(1)),
        ];
        let inst = ProblemInstance::new(g, 1, costs, regs).unwrap();
        let reference = centralized_reference(&inst, 1e-10).unwrap();
        assert_relative_eq!(reference.x[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(reference.value, -2.0, epsilon = 1e-9);
        assert!(reference.active_constraints.is_empty());
    }

    #[test]
    fn active_halfspace_reference() {
        // f = x² with x ≥ 1 written as −x ≤ −1: optimum x* = 1, value 1
        let g = Graph::from_edges(2, &[(1, 2)]).unwrap();
        let costs = vec![
            QuadraticOracle::scalar(0.5, 0.0).unwrap(),
            QuadraticOracle::scalar(0.5, 0.0).unwrap(),
        ];
        let constraint =
            PolytopeOracle::halfspace(nalgebra::DVector::from_element(1, -1.0), -1.0).unwrap();
        let regs = vec![
            RegularizerKind::Polytope(constraint),
            RegularizerKind::Zero(ZeroOracle::new(1)),
        ];
        let inst = ProblemInstance::new(g, 1, costs, regs).unwrap();
        let reference = centralized_reference(&inst, 1e-10).unwrap();
        assert_relative_eq!(reference.x[0], 1.0, epsilon = 1e-8);
        assert_relative_eq!(reference.value, 1.0, epsilon = 1e-8);
        assert_eq!(reference.active_constraints.len(), 1);
        assert_eq!(reference.active_constraints[0].node, 1);
    }
}

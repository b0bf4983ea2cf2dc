//! Polytope indicator oracles: Euclidean projection (closed form for one
//! halfspace, Dykstra's alternating projections otherwise) and the support
//! function that serves as the indicator's conjugate.

use nalgebra::{DMatrix, DVector};

use super::{OracleError, Support};

pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
pub const DEFAULT_PROJECTION_CAP: usize = 100_000;
/// Relative tolerance of the ray-parallelism test in the halfspace support
/// function. The conjugate prox lands multipliers exactly on the ray `c·a`
/// up to floating-point error, so this only needs to absorb roundoff.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-9;
/// Absolute floor below which a multiplier counts as the zero multiplier.
/// The Moreau route `v − α·prox(v/α)` leaves roundoff dust of order
/// `ε·‖v‖` in multipliers that should vanish; a purely relative parallel
/// test would report those as outside the conjugate's domain.
pub const SUPPORT_ABS_FLOOR: f64 = 1e-12;

/// The set `X = {x : Ax ≤ b}` used as an indicator regularizer `g = I_X`.
#[derive(Debug, Clone)]
pub struct PolytopeOracle {
    a: DMatrix<f64>,
    b: DVector<f64>,
    row_sq_norms: Vec<f64>,
}

impl PolytopeOracle {
    /// Builds the oracle, rejecting zero rows and empty sets. Nonemptiness is
    /// checked by projecting the origin; a projection that fails to settle
    /// within the sweep cap is reported as an empty set.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, OracleError> {
        if a.nrows() != b.len() {
            return Err(OracleError::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let mut row_sq_norms = Vec::with_capacity(a.nrows());
        for row in 0..a.nrows() {
            let sq = a.row(row).norm_squared();
            if sq < 1e-12 {
                return Err(OracleError::ZeroRow { row });
            }
            row_sq_norms.push(sq);
        }
        let oracle = Self { a, b, row_sq_norms };
        if oracle.a.nrows() > 1 {
            let origin = DVector::zeros(oracle.dim());
            let p = oracle
                .project(&origin)
                .map_err(|_| OracleError::EmptyPolytope)?;
            if !oracle.contains(&p, 1e-8) {
                return Err(OracleError::EmptyPolytope);
            }
        }
        Ok(oracle)
    }

    /// Single halfspace `{x : aᵀx ≤ b}`.
    pub fn halfspace(a: DVector<f64>, b: f64) -> Result<Self, OracleError> {
        Self::new(
            DMatrix::from_rows(&[a.transpose()]),
            DVector::from_element(1, b),
        )
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b_vector(&self) -> &DVector<f64> {
        &self.b
    }

    /// True iff `Ax ≤ b` holds within a per-row tolerance scaled by row size.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (0..self.rows()).all(|i| {
            let slack = self.a.row(i).transpose().dot(x) - self.b[i];
            slack <= tol * (1.0 + self.b[i].abs() + self.row_sq_norms[i].sqrt() * x.norm())
        })
    }

    fn project_halfspace(&self, row: usize, v: &DVector<f64>) -> DVector<f64> {
        let a_row = self.a.row(row).transpose();
        let excess = a_row.dot(v) - self.b[row];
        if excess > 0.0 {
            v - (excess / self.row_sq_norms[row]) * a_row
        } else {
            v.clone()
        }
    }

    /// Euclidean projection onto `X` with default tolerance and sweep cap.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>, OracleError> {
        self.project_with(v, DEFAULT_PROJECTION_TOL, DEFAULT_PROJECTION_CAP)
    }

    /// Euclidean projection onto `X`.
    ///
    /// One halfspace uses the closed form `v − max(0, (aᵀv−b)/‖a‖²)·a`; more
    /// halfspaces run Dykstra's alternating projections until the iterate
    /// changes by at most `tol` over a full sweep.
    pub fn project_with(
        &self,
        v: &DVector<f64>,
        tol: f64,
        cap: usize,
    ) -> Result<DVector<f64>, OracleError> {
        if v.len() != self.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        if self.rows() == 1 {
            return Ok(self.project_halfspace(0, v));
        }
        let m = self.rows();
        let mut x = v.clone();
        let mut corrections = vec![DVector::zeros(self.dim()); m];
        let mut change = f64::INFINITY;
        for _ in 0..cap {
            let sweep_start = x.clone();
            for (row, correction) in corrections.iter_mut().enumerate() {
                let shifted = &x + &*correction;
                let projected = self.project_halfspace(row, &shifted);
                *correction = shifted - &projected;
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

    /// Support function `sup { μᵀx : Ax ≤ b }` with the default parallel-test
    /// tolerance.
    pub fn support(&self, mu: &DVector<f64>) -> Result<Support, OracleError> {
        self.support_with(mu, DEFAULT_SUPPORT_TOL)
    }

    /// Support function `sup { μᵀx : Ax ≤ b }`.
    ///
    /// One halfspace: finite exactly on the ray `μ = c·a`, `c ≥ 0`, where the
    /// value is `c·b`. Several halfspaces are handled for `d ≤ 2` by checking
    /// for an improving recession ray and otherwise maximizing over the
    /// feasible pairwise vertices; higher dimensions are unsupported.
    pub fn support_with(&self, mu: &DVector<f64>, tol: f64) -> Result<Support, OracleError> {
        if mu.len() != self.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.dim(),
                got: mu.len(),
            });
        }
        if self.rows() > 1 && self.dim() > 2 {
            return Err(OracleError::UnsupportedSupportFunction {
                dim: self.dim(),
                rows: self.rows(),
            });
        }
        if mu.norm() == 0.0 {
            return Ok(Support::Finite(0.0));
        }
        if self.rows() == 1 {
            return Ok(self.halfspace_support(0, mu, tol));
        }
        if self.dim() == 1 {
            Ok(self.support_1d(mu, tol))
        } else {
            Ok(self.support_2d(mu, tol))
        }
    }

    fn halfspace_support(&self, row: usize, mu: &DVector<f64>, tol: f64) -> Support {
        let a_row = self.a.row(row).transpose();
        let c = a_row.dot(mu) / self.row_sq_norms[row];
        let residual = (mu - c * &a_row).norm();
        if residual <= tol * mu.norm() + SUPPORT_ABS_FLOOR && c >= -tol {
            Support::Finite(c * self.b[row])
        } else {
            Support::Infinite
        }
    }

    /// True iff `dir` lies in the recession cone `{r : Ar ≤ 0}` up to roundoff.
    fn is_recession_dir(&self, dir: &DVector<f64>) -> bool {
        (0..self.rows()).all(|i| {
            self.a.row(i).transpose().dot(dir) <= 1e-12 * self.row_sq_norms[i].sqrt()
        })
    }

    fn has_improving_ray(&self, mu: &DVector<f64>, tol: f64) -> bool {
        let mut candidates: Vec<DVector<f64>> = vec![mu / mu.norm()];
        if self.dim() == 1 {
            candidates.push(DVector::from_element(1, 1.0));
            candidates.push(DVector::from_element(1, -1.0));
        } else {
            for i in 0..self.rows() {
                let a_row = self.a.row(i).transpose();
                let n = a_row.norm();
                // both 90° rotations of each constraint normal
                let rot = DVector::from_vec(vec![-a_row[1] / n, a_row[0] / n]);
                candidates.push(-&rot);
                candidates.push(rot);
            }
        }
        candidates
            .iter()
            .any(|dir| self.is_recession_dir(dir) && mu.dot(dir) > tol * mu.norm() + SUPPORT_ABS_FLOOR)
    }

    fn support_1d(&self, mu: &DVector<f64>, tol: f64) -> Support {
        if self.has_improving_ray(mu, tol) {
            return Support::Infinite;
        }
        // endpoints of the feasible interval are single-row boundary points
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.rows() {
            let x = DVector::from_element(1, self.b[i] / self.a[(i, 0)]);
            if self.contains(&x, 1e-9) {
                best = best.max(mu.dot(&x));
            }
        }
        if best.is_finite() {
            Support::Finite(best)
        } else {
            self.parallel_row_fallback(mu, tol)
        }
    }

    fn support_2d(&self, mu: &DVector<f64>, tol: f64) -> Support {
        if self.has_improving_ray(mu, tol) {
            return Support::Infinite;
        }
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.rows() {
            for j in (i + 1)..self.rows() {
                let (ai, aj) = (self.a.row(i), self.a.row(j));
                let det = ai[0] * aj[1] - ai[1] * aj[0];
                let scale = self.row_sq_norms[i].sqrt() * self.row_sq_norms[j].sqrt();
                if det.abs() <= 1e-12 * scale {
                    continue;
                }
                let x = DVector::from_vec(vec![
                    (self.b[i] * aj[1] - self.b[j] * ai[1]) / det,
                    (ai[0] * self.b[j] - aj[0] * self.b[i]) / det,
                ]);
                if self.contains(&x, 1e-9) {
                    best = best.max(mu.dot(&x));
                }
            }
        }
        if best.is_finite() {
            Support::Finite(best)
        } else {
            self.parallel_row_fallback(mu, tol)
        }
    }

    /// All rows parallel (a slab): no vertices exist, but with no improving
    /// ray the supremum is the tightest single-halfspace bound.
    fn parallel_row_fallback(&self, mu: &DVector<f64>, tol: f64) -> Support {
        let mut best = Support::Infinite;
        for i in 0..self.rows() {
            if let Support::Finite(v) = self.halfspace_support(i, mu, tol) {
                best = match best {
                    Support::Finite(cur) => Support::Finite(cur.min(v)),
                    Support::Infinite => Support::Finite(v),
                };
            }
        }
        best
    }

    /// `prox_{β·g*}(w)` for a single halfspace (`g*` is the support function
    /// of the ray `{c·a : c ≥ 0}` with slope `b`): `max(0, (aᵀw − βb)/‖a‖²)·a`.
    pub(super) fn direct_conjugate_prox(&self, beta: f64, w: &DVector<f64>) -> Option<DVector<f64>> {
        if self.rows() != 1 {
            return None;
        }
        let a_row = self.a.row(0).transpose();
        let c = ((a_row.dot(w) - beta * self.b[0]) / self.row_sq_norms[0]).max(0.0);
        Some(c * a_row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn halfspace(a: &[f64], b: f64) -> PolytopeOracle {
        PolytopeOracle::halfspace(DVector::from_vec(a.to_vec()), b).unwrap()
    }

    #[test]
    fn interior_point_projects_to_itself() {
        let p = halfspace(&[1.0, 0.0], 5.0);
        let v = DVector::from_vec(vec![1.0, 3.0]);
        assert_eq!(p.project(&v).unwrap(), v);
    }

    #[test]
    fn halfspace_projection_closed_form() {
        let p = halfspace(&[1.0, 0.0], 0.0);
        let v = DVector::from_vec(vec![2.0, 3.0]);
        let proj = p.project(&v).unwrap();
        assert_relative_eq!(proj[0], 0.0);
        assert_relative_eq!(proj[1], 3.0);
    }

    #[test]
    fn rejects_zero_row() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            PolytopeOracle::new(a, b),
            Err(OracleError::ZeroRow { row: 1 })
        ));
    }

    #[test]
    fn detects_empty_intersection() {
        // x ≤ −1 and −x ≤ −1 (i.e. x ≥ 1) cannot both hold
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![-1.0, -1.0]);
        assert!(matches!(
            PolytopeOracle::new(a, b),
            Err(OracleError::EmptyPolytope)
        ));
    }

    #[test]
    fn support_of_zero_is_zero() {
        let p = halfspace(&[1.0, 0.0], 3.0);
        assert_eq!(p.support(&DVector::zeros(2)).unwrap(), Support::Finite(0.0));
    }

    #[test]
    fn halfspace_support_on_and_off_ray() {
        let p = halfspace(&[1.0, 0.0], 3.0);
        // sup 2x₁ subject to x₁ ≤ 3, attained at x₁ = 3
        let on_ray = p.support(&DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert_eq!(on_ray, Support::Finite(6.0));
        // x₂ unbounded in X
        let off_ray = p.support(&DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert_eq!(off_ray, Support::Infinite);
        // negative multiple of a: going along −a is feasible and improving
        let neg = p.support(&DVector::from_vec(vec![-1.0, 0.0])).unwrap();
        assert_eq!(neg, Support::Infinite);
    }

    #[test]
    fn bounded_2d_support_uses_vertices() {
        // unit box as four halfspaces
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        let p = PolytopeOracle::new(a, b).unwrap();
        let s = p.support(&DVector::from_vec(vec![2.0, -3.0])).unwrap();
        // attained at vertex (1, −1)
        assert_eq!(s, Support::Finite(5.0));
    }

    #[test]
    fn unbounded_2d_support_detects_ray() {
        // wedge x₁ ≤ 1, x₂ ≤ 1 is unbounded towards (−1, −1)
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let p = PolytopeOracle::new(a, b).unwrap();
        let down = p.support(&DVector::from_vec(vec![-1.0, -1.0])).unwrap();
        assert_eq!(down, Support::Infinite);
        let corner = p.support(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(corner, Support::Finite(2.0));
    }

    #[test]
    fn slab_support_without_vertices() {
        // 0 ≤ x·a ≤ 2 with a = (1, 1): no pairwise vertices
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
        let b = DVector::from_vec(vec![2.0, 0.0]);
        let p = PolytopeOracle::new(a, b).unwrap();
        let along = p.support(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(along, Support::Finite(2.0));
        let across = p.support(&DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert_eq!(across, Support::Infinite);
    }

    #[test]
    fn support_unsupported_for_high_dim_many_rows() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let p = PolytopeOracle::new(a, b).unwrap();
        assert!(matches!(
            p.support(&DVector::from_vec(vec![1.0, 0.0, 0.0])),
            Err(OracleError::UnsupportedSupportFunction { dim: 3, rows: 2 })
        ));
    }

    #[test]
    fn projection_is_idempotent() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, -0.3, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![0.5, 1.0, 0.8]);
        let p = PolytopeOracle::new(a, b).unwrap();
        let v = DVector::from_vec(vec![4.0, 3.5]);
        let once = p.project(&v).unwrap();
        let twice = p.project(&once).unwrap();
        assert!((once - twice).norm() <= 1e-12);
    }
}

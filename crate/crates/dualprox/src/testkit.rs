//! Brute-force reference oracles for tests: refining grid search, central
//! finite differences, and chi-square statistics.
//!
//! Everything here is deliberately independent of the solver code paths it
//! checks; keep it that way.

use nalgebra::DVector;

/// Minimizes `f` over the box `[lo, hi]` by iteratively refined grid search.
/// `f` may return `f64::INFINITY` to mark infeasible points. Returns the best
/// point and value. Suitable for convex objectives in up to a few dimensions.
pub fn grid_minimize(
    f: &dyn Fn(&DVector<f64>) -> f64,
    lo: &[f64],
    hi: &[f64],
    points_per_dim: usize,
    levels: usize,
) -> (DVector<f64>, f64) {
    assert_eq!(lo.len(), hi.len());
    assert!(points_per_dim >= 4);
    let dim = lo.len();
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    let mut best_x = DVector::zeros(dim);
    let mut best_v = f64::INFINITY;
    for _ in 0..levels {
        let steps: Vec<f64> = (0..dim)
            .map(|k| (hi[k] - lo[k]) / points_per_dim as f64)
            .collect();
        let mut index = vec![0usize; dim];
        let mut level_best_x = best_x.clone();
        let mut level_best_v = f64::INFINITY;
        loop {
            let x = DVector::from_fn(dim, |k, _| lo[k] + steps[k] * index[k] as f64);
            let v = f(&x);
            if v < level_best_v {
                level_best_v = v;
                level_best_x = x;
            }
            // advance the multi-index
            let mut k = 0;
            loop {
                if k == dim {
                    break;
                }
                index[k] += 1;
                if index[k] <= points_per_dim {
                    break;
                }
                index[k] = 0;
                k += 1;
            }
            if k == dim {
                break;
            }
        }
        if level_best_v < best_v {
            best_v = level_best_v;
            best_x = level_best_x;
        }
        // zoom to ±2 cells around the incumbent
        for k in 0..dim {
            let center = best_x[k];
            let half = 2.0 * steps[k];
            lo[k] = center - half;
            hi[k] = center + half;
        }
    }
    (best_x, best_v)
}

/// Maximizes `f` over the box by minimizing its negation. `f` may return
/// `f64::NEG_INFINITY` for infeasible points.
pub fn grid_maximize(
    f: &dyn Fn(&DVector<f64>) -> f64,
    lo: &[f64],
    hi: &[f64],
    points_per_dim: usize,
    levels: usize,
) -> (DVector<f64>, f64) {
    let neg = |x: &DVector<f64>| -f(x);
    let (x, v) = grid_minimize(&neg, lo, hi, points_per_dim, levels);
    (x, -v)
}

/// Central finite-difference gradient with step `rel_step · (1 + ‖y‖)`.
pub fn central_difference_gradient(
    f: &dyn Fn(&DVector<f64>) -> f64,
    y: &DVector<f64>,
    rel_step: f64,
) -> DVector<f64> {
    let h = rel_step * (1.0 + y.norm());
    DVector::from_fn(y.len(), |k, _| {
        let mut up = y.clone();
        up[k] += h;
        let mut down = y.clone();
        down[k] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

/// Pearson chi-square statistic against the uniform distribution over the
/// `counts.len()` cells. Returns `(statistic, degrees_of_freedom)`.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, usize) {
    let cells = counts.len();
    assert!(cells >= 2);
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / cells as f64;
    let stat = counts
        .iter()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum();
    (stat, cells - 1)
}

/// Two-sample chi-square homogeneity test over matched cells. Returns
/// `(statistic, degrees_of_freedom)`.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> (f64, usize) {
    assert_eq!(a.len(), b.len());
    let cells = a.len();
    assert!(cells >= 2);
    let total_a: u64 = a.iter().sum();
    let total_b: u64 = b.iter().sum();
    let grand = (total_a + total_b) as f64;
    let mut stat = 0.0;
    for k in 0..cells {
        let col = (a[k] + b[k]) as f64;
        for (count, total) in [(a[k], total_a), (b[k], total_b)] {
            let expected = col * total as f64 / grand;
            if expected > 0.0 {
                let diff = count as f64 - expected;
                stat += diff * diff / expected;
            }
        }
    }
    (stat, cells - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_finds_quadratic_minimum() {
        let f = |x: &DVector<f64>| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 1.2).powi(2);
        let (x, v) = grid_minimize(&f, &[-20.0, -20.0], &[20.0, 20.0], 32, 14);
        assert_relative_eq!(x[0], 0.3, epsilon = 1e-8);
        assert_relative_eq!(x[1], -1.2, epsilon = 1e-8);
        assert!(v < 1e-14);
    }

    #[test]
    fn grid_respects_infeasible_marks() {
        // minimize x² over x ≥ 1
        let f = |x: &DVector<f64>| {
            if x[0] >= 1.0 {
                x[0] * x[0]
            } else {
                f64::INFINITY
            }
        };
        let (x, v) = grid_minimize(&f, &[-5.0], &[5.0], 32, 14);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-8);
        assert_relative_eq!(v, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn finite_difference_matches_analytic_gradient() {
        let f = |x: &DVector<f64>| x[0] * x[0] + 3.0 * x[0] * x[1];
        let y = DVector::from_vec(vec![0.7, -0.4]);
        let g = central_difference_gradient(&f, &y, 1e-6);
        assert_relative_eq!(g[0], 2.0 * 0.7 + 3.0 * -0.4, epsilon = 1e-6);
        assert_relative_eq!(g[1], 3.0 * 0.7, epsilon = 1e-6);
    }

    #[test]
    fn chi_square_statistic_basics() {
        let (stat, dof) = chi_square_uniform(&[10, 10, 10, 10]);
        assert_eq!(dof, 3);
        assert_relative_eq!(stat, 0.0);
        let (stat, _) = chi_square_uniform(&[20, 0, 20, 0]);
        assert!(stat > 10.0);
    }
}

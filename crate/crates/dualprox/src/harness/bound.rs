//! Rate-bound checks: the stated `O(1/t)` synchronous bound and the `O(1/t²)`
//! accelerated bound, evaluated against a converged reference point.

use nalgebra::DVector;

use crate::trace::Trace;

use super::HarnessError;

/// Additive slack absorbing floating-point error in the bound comparisons.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub holds: bool,
    /// Largest `lhs − rhs` over the checked iterations (negative when the
    /// bound holds with margin).
    pub max_violation: f64,
    pub worst_iteration: usize,
    pub checked: usize,
}

fn check_bound(
    trace: &Trace,
    gamma_star: f64,
    rhs: impl Fn(usize) -> f64,
    slack: f64,
) -> Result<BoundReport, HarnessError> {
    let mut report = BoundReport {
        holds: true,
        max_violation: f64::NEG_INFINITY,
        worst_iteration: 0,
        checked: 0,
    };
    for record in &trace.records {
        if record.iteration == 0 {
            continue;
        }
        let gamma = record.dual_objective.ok_or_else(|| {
            HarnessError::Config("trace lacks dual objective values".into())
        })?;
        let violation = (gamma - gamma_star) - rhs(record.iteration);
        report.checked += 1;
        if violation > report.max_violation {
            report.max_violation = violation;
            report.worst_iteration = record.iteration;
        }
        if violation > slack {
            report.holds = false;
        }
    }
    if report.checked == 0 {
        return Err(HarnessError::Config(
            "trace has no iterations to check".into(),
        ));
    }
    Ok(report)
}

/// Checks `Γ(y(t)) − Γ* ≤ (Σ 1/σ_i)·‖y₀ − y*‖²/(2t)` for every traced
/// `t ≥ 1`, with additive slack.
pub fn sync_rate_bound_check(
    trace: &Trace,
    sigmas: &[f64],
    y0: &DVector<f64>,
    y_star: &DVector<f64>,
    gamma_star: f64,
    slack: f64,
) -> Result<BoundReport, HarnessError> {
    let sum_inv: f64 = sigmas.iter().map(|s| 1.0 / s).sum();
    let dist_sq = (y0 - y_star).norm_squared();
    check_bound(
        trace,
        gamma_star,
        |t| sum_inv * dist_sq / (2.0 * t as f64),
        slack,
    )
}

/// Accelerated analogue: `Γ(y(t)) − Γ* ≤ 2(Σ 1/σ_i)·‖y₀ − y*‖²/(t+1)²`.
pub fn accelerated_rate_bound_check(
    trace: &Trace,
    sigmas: &[f64],
    y0: &DVector<f64>,
    y_star: &DVector<f64>,
    gamma_star: f64,
    slack: f64,
) -> Result<BoundReport, HarnessError> {
    let sum_inv: f64 = sigmas.iter().map(|s| 1.0 / s).sum();
    let dist_sq = (y0 - y_star).norm_squared();
    check_bound(
        trace,
        gamma_star,
        |t| {
            let tp = (t + 1) as f64;
            2.0 * sum_inv * dist_sq / (tp * tp)
        },
        slack,
    )
}

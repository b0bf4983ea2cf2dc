//! Dual-variable layout, dual objective Γ = F* + G*, block gradients, and
//! the synchronous dual proximal gradient solver with its accelerated
//! variant.
//!
//! Each node `i` owns the multipliers `λ_i^j` (one per neighbor, for the
//! consensus constraint with `j`) and `μ_i` (for the local slack constraint
//! `x_i = z_i`), stacked as `y_i = [Λ_i; μ_i]`. The smooth dual term is
//! `F*(y) = Σ_i f_i*(−v_i)` with the coupled vector
//! `v_i = Σ_{j∈N_i}(λ_i^j − λ_j^i) + μ_i`, and `G*(y) = Σ_i g_i*(μ_i)`.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::ProblemInstance;
use crate::oracles::{prox_conjugate, OracleError, Regularizer};
use crate::trace::{Trace, TraceOptions, TraceRecord};
use crate::SolverError;

/// Dual variables of every node plus the cached primal minimizers
/// `x_i* = argmin { x_i^T v_i + f_i(x_i) }` kept coherent with them.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    dim: usize,
    pub(crate) lambda: Vec<BTreeMap<usize, DVector<f64>>>,
    pub(crate) mu: Vec<DVector<f64>>,
    pub(crate) x_star: Vec<DVector<f64>>,
}

impl DualState {
    /// All-zero duals (the default initialization), caches refreshed.
    pub fn zero(inst: &ProblemInstance) -> Result<Self, SolverError> {
        let d = inst.dim();
        let lambda = (1..=inst.n())
            .map(|i| {
                Ok(inst
                    .graph()
                    .neighbors(i)?
                    .iter()
                    .map(|&j| (j, DVector::zeros(d)))
                    .collect())
            })
            .collect::<Result<Vec<_>, SolverError>>()?;
        let mu = vec![DVector::zeros(d); inst.n()];
        let mut state = Self {
            dim: d,
            lambda,
            mu,
            x_star: vec![DVector::zeros(d); inst.n()],
        };
        state.refresh_all(inst)?;
        Ok(state)
    }

    /// Arbitrary initial duals. `lambda[i]` must hold exactly the neighbors
    /// of node `i+1`. The preliminary exchange of initial multipliers is a
    /// no-op here: every block is already visible to the simulation.
    pub fn from_duals(
        inst: &ProblemInstance,
        lambda: Vec<BTreeMap<usize, DVector<f64>>>,
        mu: Vec<DVector<f64>>,
    ) -> Result<Self, SolverError> {
        let d = inst.dim();
        if lambda.len() != inst.n() || mu.len() != inst.n() {
            return Err(SolverError::BadParameter(
                "dual blocks must cover every node".into(),
            ));
        }
        for i in 1..=inst.n() {
            let keys: Vec<usize> = lambda[i - 1].keys().copied().collect();
            if keys != inst.graph().neighbors(i)? {
                return Err(SolverError::BadParameter(format!(
                    "lambda keys of node {i} do not match its neighbor set"
                )));
            }
            if lambda[i - 1].values().any(|v| v.len() != d) || mu[i - 1].len() != d {
                return Err(SolverError::BadParameter(format!(
                    "dual block of node {i} has wrong dimension"
                )));
            }
        }
        let mut state = Self {
            dim: d,
            lambda,
            mu,
            x_star: vec![DVector::zeros(d); inst.n()],
        };
        state.refresh_all(inst)?;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self, i: usize) -> &BTreeMap<usize, DVector<f64>> {
        &self.lambda[i - 1]
    }

    /// `λ_i^j`; panics if `j` is not a neighbor of `i`.
    pub fn lambda_ij(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.lambda[i - 1][&j]
    }

    pub fn mu(&self, i: usize) -> &DVector<f64> {
        &self.mu[i - 1]
    }

    pub fn x_star(&self, i: usize) -> &DVector<f64> {
        &self.x_star[i - 1]
    }

    /// Recomputes the cached minimizer of node `i` from the current duals.
    pub fn refresh(&mut self, inst: &ProblemInstance, i: usize) -> Result<(), SolverError> {
        let v = coupled_vector(inst, self, i)?;
        self.x_star[i - 1] = inst.cost(i).argmin_coupled(&v);
        Ok(())
    }

    pub fn refresh_all(&mut self, inst: &ProblemInstance) -> Result<(), SolverError> {
        for i in 1..=inst.n() {
            self.refresh(inst, i)?;
        }
        Ok(())
    }

    /// Total stacked dimension `Σ_i d(|N_i| + 1) = d(2|E| + n)`.
    pub fn stacked_len(&self) -> usize {
        self.lambda
            .iter()
            .map(|l| self.dim * (l.len() + 1))
            .sum()
    }

    /// Stacks all blocks as `[Λ_1; μ_1; …; Λ_n; μ_n]`, neighbors ascending.
    pub fn stacked(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.stacked_len());
        let mut off = 0;
        for i in 0..self.lambda.len() {
            for block in self.lambda[i].values() {
                out.rows_mut(off, self.dim).copy_from(block);
                off += self.dim;
            }
            out.rows_mut(off, self.dim).copy_from(&self.mu[i]);
            off += self.dim;
        }
        out
    }

    /// Rebuilds a state from a stacked vector (layout of [`DualState::stacked`])
    /// and refreshes all caches.
    pub fn from_stacked(inst: &ProblemInstance, y: &DVector<f64>) -> Result<Self, SolverError> {
        let d = inst.dim();
        let expected = dual_total_dim(inst)?;
        if y.len() != expected {
            return Err(SolverError::BadParameter(format!(
                "stacked dual vector has length {}, expected {expected}",
                y.len()
            )));
        }
        let mut lambda = Vec::with_capacity(inst.n());
        let mut mu = Vec::with_capacity(inst.n());
        let mut off = 0;
        for i in 1..=inst.n() {
            let mut blocks = BTreeMap::new();
            for &j in inst.graph().neighbors(i)? {
                blocks.insert(j, y.rows(off, d).into_owned());
                off += d;
            }
            lambda.push(blocks);
            mu.push(y.rows(off, d).into_owned());
            off += d;
        }
        Self::from_duals(inst, lambda, mu)
    }

    /// `max_{(i,j)∈E} ‖x_i* − x_j*‖`, certifying the consensus constraints.
    pub fn consensus_residual(&self, inst: &ProblemInstance) -> f64 {
        inst.graph()
            .edges()
            .map(|(i, j)| (&self.x_star[i - 1] - &self.x_star[j - 1]).norm())
            .fold(0.0, f64::max)
    }

    /// Node average `x̄ = (1/n) Σ_i x_i*`.
    pub fn average_x(&self) -> DVector<f64> {
        let n = self.x_star.len() as f64;
        let mut sum = DVector::zeros(self.dim);
        for x in &self.x_star {
            sum += x;
        }
        sum / n
    }
}

/// Per-node block dimensions `d(|N_i| + 1)` in node order.
pub fn dual_block_dims(inst: &ProblemInstance) -> Result<Vec<usize>, SolverError> {
    (1..=inst.n())
        .map(|i| Ok(inst.dim() * (inst.graph().neighbors(i)?.len() + 1)))
        .collect()
}

pub fn dual_total_dim(inst: &ProblemInstance) -> Result<usize, SolverError> {
    Ok(dual_block_dims(inst)?.iter().sum())
}

/// `v_i = Σ_{j∈N_i}(λ_i^j − λ_j^i) + μ_i`.
///
/// Neighbor terms accumulate in ascending order so that every code path
/// (synchronous, gossip, block-coordinate) performs bitwise-identical
/// arithmetic.
pub fn coupled_vector(
    inst: &ProblemInstance,
    y: &DualState,
    i: usize,
) -> Result<DVector<f64>, SolverError> {
    if y.dim != inst.dim() || y.lambda.len() != inst.n() {
        return Err(SolverError::BadParameter(
            "dual state shape does not match instance".into(),
        ));
    }
    let mut v = DVector::zeros(inst.dim());
    for &j in inst.graph().neighbors(i)? {
        v += &y.lambda[i - 1][&j];
        v -= &y.lambda[j - 1][&i];
    }
    v += &y.mu[i - 1];
    Ok(v)
}

/// `x_i* = argmin_x { xᵀ v_i + f_i(x) }`; refreshes the cache and returns it.
pub fn primal_from_dual(
    inst: &ProblemInstance,
    y: &mut DualState,
    i: usize,
) -> Result<DVector<f64>, SolverError> {
    y.refresh(inst, i)?;
    Ok(y.x_star[i - 1].clone())
}

/// Stacked gradient of `F*`: the `λ_i^j` block is `x_j* − x_i*` and the
/// `μ_i` block is `−x_i*`. Caches must be coherent.
pub fn dual_gradient(inst: &ProblemInstance, y: &DualState) -> Result<DVector<f64>, SolverError> {
    let d = inst.dim();
    let mut g = DVector::zeros(dual_total_dim(inst)?);
    let mut off = 0;
    for i in 1..=inst.n() {
        for &j in inst.graph().neighbors(i)? {
            let block = &y.x_star[j - 1] - &y.x_star[i - 1];
            g.rows_mut(off, d).copy_from(&block);
            off += d;
        }
        g.rows_mut(off, d).copy_from(&(-&y.x_star[i - 1]));
        off += d;
    }
    Ok(g)
}

/// `Γ(y) = Σ_i f_i*(−v_i) + Σ_i g_i*(μ_i)`; `+∞` when some `μ_i` leaves the
/// domain of its conjugate. Errors only when a support function is
/// unsupported for the regularizer's shape.
pub fn dual_objective(inst: &ProblemInstance, y: &DualState) -> Result<f64, SolverError> {
    let mut total = 0.0;
    for i in 1..=inst.n() {
        let v = coupled_vector(inst, y, i)?;
        total += inst.cost(i).conjugate(&(-v));
        let g = inst.regularizer(i).conjugate(&y.mu[i - 1])?;
        match g.as_f64() {
            v if v == f64::INFINITY => return Ok(f64::INFINITY),
            v => total += v,
        }
    }
    Ok(total)
}

/// One synchronous iteration: gradient step on every block, conjugate prox
/// on every `μ_i` (the prox of `αG*` leaves λ-blocks untouched), then a full
/// cache refresh.
pub fn sync_step(
    inst: &ProblemInstance,
    y: &DualState,
    alpha: f64,
) -> Result<DualState, SolverError> {
    if alpha <= 0.0 {
        return Err(SolverError::BadParameter(format!(
            "step size must be positive, got {alpha}"
        )));
    }
    let mut next = y.clone();
    for i in 1..=inst.n() {
        for (&j, block) in next.lambda[i - 1].iter_mut() {
            *block = &y.lambda[i - 1][&j] + alpha * (&y.x_star[i - 1] - &y.x_star[j - 1]);
        }
        let mu_tilde = &y.mu[i - 1] + alpha * &y.x_star[i - 1];
        next.mu[i - 1] = prox_conjugate(inst.regularizer(i), alpha, &mu_tilde)?;
    }
    next.refresh_all(inst)?;
    Ok(next)
}

/// The σ-based synchronous step bound `1/(Σ_i 1/σ_i)`.
pub fn sync_step_bound(sigmas: &[f64]) -> Result<f64, SolverError> {
    if sigmas.is_empty() {
        return Err(SolverError::BadParameter("no strong convexity moduli".into()));
    }
    if sigmas.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
        return Err(SolverError::BadParameter(
            "strong convexity moduli must be positive".into(),
        ));
    }
    Ok(1.0 / sigmas.iter().map(|s| 1.0 / s).sum::<f64>())
}

/// Local gossip constant `L_i = sqrt(1/σ_i² + Σ_{j∈N_i}(1/σ_i + 1/σ_j)²)`.
pub fn local_lipschitz(
    i: usize,
    sigmas: &[f64],
    graph: &crate::graph::Graph,
) -> Result<f64, SolverError> {
    if sigmas.len() != graph.node_count() {
        return Err(SolverError::BadParameter(
            "one strong convexity modulus per node required".into(),
        ));
    }
    let check = |s: f64| -> Result<f64, SolverError> {
        if s <= 0.0 || !s.is_finite() {
            Err(SolverError::BadParameter(
                "strong convexity moduli must be positive".into(),
            ))
        } else {
            Ok(s)
        }
    };
    let si = check(sigmas[i - 1])?;
    let mut sum = 1.0 / (si * si);
    for &j in graph.neighbors(i)? {
        let sj = check(sigmas[j - 1])?;
        let term = 1.0 / si + 1.0 / sj;
        sum += term * term;
    }
    Ok(sum.sqrt())
}

/// Largest eigenvalue of the (constant) Hessian of `F*` for quadratic costs,
/// by power iteration on exact gradient differences.
pub fn dual_hessian_norm(inst: &ProblemInstance) -> Result<f64, SolverError> {
    let total = dual_total_dim(inst)?;
    let base = DualState::zero(inst)?;
    let g0 = dual_gradient(inst, &base)?;
    let y0 = base.stacked();
    let matvec = |s: &DVector<f64>| -> Result<DVector<f64>, SolverError> {
        let shifted = DualState::from_stacked(inst, &(&y0 + s))?;
        Ok(dual_gradient(inst, &shifted)? - &g0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DVector::from_fn(total, |_, _| rng.gen::<f64>() - 0.5);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..200 {
        let hv = matvec(&v)?;
        let norm = hv.norm();
        if norm <= 1e-300 {
            return Ok(0.0);
        }
        let next = norm;
        let done = (next - lambda).abs() <= 1e-13 * next.max(1.0);
        lambda = next;
        v = hv / norm;
        if done {
            break;
        }
    }
    Ok(lambda)
}

/// Default synchronous step in safe mode: the σ-based bound capped by the
/// measured curvature `1/λ_max(∇²F*)`, which keeps the descent lemma valid
/// on instances where the stated bound alone over-steps.
pub fn safe_sync_step_size(inst: &ProblemInstance) -> Result<f64, SolverError> {
    let stated = sync_step_bound(&inst.sigmas())?;
    let norm = dual_hessian_norm(inst)?;
    if norm <= 0.0 {
        return Ok(stated);
    }
    Ok(stated.min(1.0 / (norm * (1.0 + 1e-9))))
}

pub(crate) fn record_trace(
    inst: &ProblemInstance,
    y: &DualState,
    iteration: usize,
    active_node: i64,
    opts: TraceOptions,
    start: Instant,
) -> Result<TraceRecord, SolverError> {
    let dual = if opts.objective {
        match dual_objective(inst, y) {
            Ok(v) => Some(v),
            Err(SolverError::Oracle(OracleError::UnsupportedSupportFunction { .. })) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let (raw, projected) = if opts.primal {
        let xbar = y.average_x();
        let raw = inst.primal_cost(&xbar).as_f64();
        let feasible = inst.project_intersection(&xbar, 1e-10, 100_000)?;
        (Some(raw), Some(inst.primal_smooth_cost(&feasible)))
    } else {
        (None, None)
    };
    Ok(TraceRecord {
        iteration,
        active_node,
        dual_objective: dual,
        primal_cost_raw: raw,
        primal_cost_projected: projected,
        consensus_residual: y.consensus_residual(inst),
        wall_clock_ns: start.elapsed().as_nanos(),
    })
}

/// Runs the synchronous solver for `iters ≥ 1` iterations from zero duals.
/// The trace starts with a row for the initial state (iteration 0); the
/// callback fires after every recorded row.
pub fn run_sync(
    inst: &ProblemInstance,
    alpha: f64,
    iters: usize,
    opts: TraceOptions,
    mut callback: impl FnMut(usize, &DualState),
) -> Result<(Trace, DualState), SolverError> {
    let y0 = DualState::zero(inst)?;
    run_sync_from(inst, y0, alpha, iters, opts, &mut callback)
}

/// [`run_sync`] from an arbitrary initial state.
pub fn run_sync_from(
    inst: &ProblemInstance,
    y0: DualState,
    alpha: f64,
    iters: usize,
    opts: TraceOptions,
    mut callback: impl FnMut(usize, &DualState),
) -> Result<(Trace, DualState), SolverError> {
    if iters < 1 {
        return Err(SolverError::BadParameter(
            "iteration count must be at least 1".into(),
        ));
    }
    let start = Instant::now();
    let mut trace = Trace::with_capacity(iters + 1);
    let mut y = y0;
    trace.records.push(record_trace(inst, &y, 0, -1, opts, start)?);
    callback(0, &y);
    for t in 1..=iters {
        y = sync_step(inst, &y, alpha)?;
        trace.records.push(record_trace(inst, &y, t, -1, opts, start)?);
        callback(t, &y);
    }
    Ok((trace, y))
}

/// Accelerated variant with the standard extrapolation schedule
/// `θ_1 = 1`, `θ_{k+1} = (1 + sqrt(1 + 4θ_k²))/2`,
/// `w = y(t) + ((θ_k − 1)/θ_{k+1})(y(t) − y(t−1))`.
///
/// The first iteration has zero momentum and therefore equals a plain
/// synchronous step. Requires `alpha` within the stated synchronous bound.
pub fn run_fista(
    inst: &ProblemInstance,
    alpha: f64,
    iters: usize,
    opts: TraceOptions,
    mut callback: impl FnMut(usize, &DualState),
) -> Result<(Trace, DualState), SolverError> {
    fista_impl(inst, alpha, iters, opts, None, &mut callback)
}

fn fista_impl(
    inst: &ProblemInstance,
    alpha: f64,
    iters: usize,
    opts: TraceOptions,
    momentum_override: Option<f64>,
    callback: &mut dyn FnMut(usize, &DualState),
) -> Result<(Trace, DualState), SolverError> {
    if iters < 1 {
        return Err(SolverError::BadParameter(
            "iteration count must be at least 1".into(),
        ));
    }
    let bound = sync_step_bound(&inst.sigmas())?;
    if !(alpha > 0.0 && alpha <= bound * (1.0 + 1e-12)) {
        return Err(SolverError::BadParameter(format!(
            "accelerated step size {alpha} outside (0, {bound}]"
        )));
    }
    let start = Instant::now();
    let mut trace = Trace::with_capacity(iters + 1);
    let y0 = DualState::zero(inst)?;
    trace.records.push(record_trace(inst, &y0, 0, -1, opts, start)?);
    callback(0, &y0);

    let mut prev = y0.stacked();
    let mut cur = prev.clone();
    let mut cur_state = y0;
    let mut theta: f64 = 1.0;
    for t in 1..=iters {
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = momentum_override.unwrap_or((theta - 1.0) / theta_next);
        let w = &cur + beta * (&cur - &prev);
        let w_state = DualState::from_stacked(inst, &w)?;
        let next_state = sync_step(inst, &w_state, alpha)?;
        prev = cur;
        cur = next_state.stacked();
        cur_state = next_state;
        theta = theta_next;
        trace
            .records
            .push(record_trace(inst, &cur_state, t, -1, opts, start)?);
        callback(t, &cur_state);
    }
    Ok((trace, cur_state))
}

/// Step-size bundle: the global synchronous step and the per-node gossip
/// steps with their stated Lipschitz constants.
#[derive(Debug, Clone)]
pub struct StepSizes {
    pub global_alpha: f64,
    pub local_alpha: Vec<f64>,
    pub local_lipschitz: Vec<f64>,
}

impl StepSizes {
    /// Safe mode: global step from [`safe_sync_step_size`], local steps
    /// `α_i = 1/L_i`.
    pub fn safe(inst: &ProblemInstance) -> Result<Self, SolverError> {
        let sigmas = inst.sigmas();
        let local_lipschitz: Vec<f64> = (1..=inst.n())
            .map(|i| local_lipschitz(i, &sigmas, inst.graph()))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            global_alpha: safe_sync_step_size(inst)?,
            local_alpha: local_lipschitz.iter().map(|l| 1.0 / l).collect(),
            local_lipschitz,
        })
    }

    /// Reproduction mode: one constant step everywhere (the experiment uses
    /// `α_i = 1`), Lipschitz constants kept for reference.
    pub fn reproduction(inst: &ProblemInstance, alpha: f64) -> Result<Self, SolverError> {
        if alpha <= 0.0 {
            return Err(SolverError::BadParameter(format!(
                "step size must be positive, got {alpha}"
            )));
        }
        let sigmas = inst.sigmas();
        let local_lipschitz: Vec<f64> = (1..=inst.n())
            .map(|i| local_lipschitz(i, &sigmas, inst.graph()))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            global_alpha: alpha,
            local_alpha: vec![alpha; inst.n()],
            local_lipschitz,
        })
    }

    /// True iff every local step satisfies its stated bound `α_i ≤ 1/L_i`.
    pub fn locally_safe(&self) -> bool {
        self.local_alpha
            .iter()
            .zip(&self.local_lipschitz)
            .all(|(&a, &l)| a > 0.0 && a <= 1.0 / l * (1.0 + 1e-12))
    }
}

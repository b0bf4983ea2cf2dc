//! Event-driven gossip engine: exponential local timers wake one node at a
//! time; the waking node updates only its own dual block and refreshes the
//! primal caches its broadcast reaches.
//!
//! Communication is modeled as instantaneous and reliable. While idle a node
//! reacts to an incoming `λ_j^i` by recomputing (and rebroadcasting) its
//! primal minimizer, which is exactly what keeps the caches coherent between
//! activations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dual::{record_trace, DualState, StepSizes};
use crate::instance::ProblemInstance;
use crate::oracles::prox_conjugate;
use crate::trace::{EventRecord, Trace, TraceOptions};
use crate::SolverError;

/// How activations are drawn.
///
/// `EventQueue` simulates the exponential timers literally; `UniformPick`
/// draws the waking node uniformly, which is the distribution the timers
/// induce (memoryless property). With equal rates the two are statistically
/// indistinguishable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationMode {
    EventQueue,
    UniformPick,
}

/// Per-node exponential timer rates.
#[derive(Debug, Clone)]
pub struct TimerModel {
    rates: Vec<f64>,
    mode: ActivationMode,
}

impl TimerModel {
    pub fn new(rates: Vec<f64>, mode: ActivationMode) -> Result<Self, SolverError> {
        if rates.is_empty() || rates.iter().any(|&r| r <= 0.0 || !r.is_finite()) {
            return Err(SolverError::BadParameter(
                "timer rates must be positive".into(),
            ));
        }
        Ok(Self { rates, mode })
    }

    /// Unit rate for every node.
    pub fn uniform(n: usize, mode: ActivationMode) -> Result<Self, SolverError> {
        Self::new(vec![1.0; n], mode)
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    pub fn mode(&self) -> ActivationMode {
        self.mode
    }
}

/// A pending timer expiry. Processed in nondecreasing time order with
/// `(time, node, seq)` lexicographic tie-breaking.
#[derive(Debug, Clone, Copy)]
pub struct SimEvent {
    pub time: f64,
    pub node: usize,
    pub seq: u64,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for SimEvent {}
impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.node.cmp(&other.node))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Draws the activation sequence for a timer model.
#[derive(Debug)]
pub struct ActivationSequencer {
    model: TimerModel,
    rng: ChaCha8Rng,
    // event-queue state
    pending: BinaryHeap<std::cmp::Reverse<SimEvent>>,
    seq: u64,
    count: usize,
}

fn sample_exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // inverse CDF; 1−U avoids ln(0)
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

impl ActivationSequencer {
    pub fn new(model: TimerModel, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pending = BinaryHeap::new();
        let mut seq = 0;
        if model.mode == ActivationMode::EventQueue {
            for (idx, &rate) in model.rates.iter().enumerate() {
                let time = sample_exponential(&mut rng, rate);
                pending.push(std::cmp::Reverse(SimEvent {
                    time,
                    node: idx + 1,
                    seq,
                }));
                seq += 1;
            }
        }
        Self {
            model,
            rng,
            pending,
            seq,
            count: 0,
        }
    }

    /// Next waking node and its simulated trigger time. `UniformPick` mode
    /// uses the activation index as time.
    pub fn next_activation(&mut self) -> (usize, f64) {
        self.count += 1;
        match self.model.mode {
            ActivationMode::UniformPick => {
                let node = self.rng.gen_range(1..=self.model.n());
                (node, self.count as f64)
            }
            ActivationMode::EventQueue => {
                let std::cmp::Reverse(event) = self.pending.pop().expect("timers always pending");
                let rate = self.model.rates[event.node - 1];
                let next_time = event.time + sample_exponential(&mut self.rng, rate);
                self.pending.push(std::cmp::Reverse(SimEvent {
                    time: next_time,
                    node: event.node,
                    seq: self.seq,
                }));
                self.seq += 1;
                (event.node, event.time)
            }
        }
    }
}

/// One AWAKE block of node `i`: gradient step on every `λ_i^j`, conjugate
/// prox on `μ_i`, recompute `x_i*`, then the idle reaction of each neighbor
/// (which received `λ_i^j`) recomputes `x_j*`. No other block changes.
pub fn awake_update(
    inst: &ProblemInstance,
    y: &mut DualState,
    i: usize,
    alpha_i: f64,
) -> Result<(), SolverError> {
    if alpha_i <= 0.0 {
        return Err(SolverError::BadParameter(format!(
            "step size must be positive, got {alpha_i}"
        )));
    }
    let neighbors = inst.graph().neighbors(i)?.to_vec();
    let x_i = y.x_star[i - 1].clone();
    for &j in &neighbors {
        let updated = &y.lambda[i - 1][&j] + alpha_i * (&x_i - &y.x_star[j - 1]);
        y.lambda[i - 1].insert(j, updated);
    }
    let mu_tilde = &y.mu[i - 1] + alpha_i * &x_i;
    y.mu[i - 1] = prox_conjugate(inst.regularizer(i), alpha_i, &mu_tilde)?;
    y.refresh(inst, i)?;
    for &j in &neighbors {
        y.refresh(inst, j)?;
    }
    Ok(())
}

/// Runs the asynchronous solver for `activations ≥ 1` wake-ups from zero
/// duals. Returns the trace (one row for the initial state, then one per
/// activation), the event log, and the final state. Deterministic given
/// `(seed, mode)`.
pub fn run_async(
    inst: &ProblemInstance,
    steps: &StepSizes,
    activations: usize,
    seed: u64,
    mode: ActivationMode,
    opts: TraceOptions,
    mut callback: impl FnMut(usize, &DualState),
) -> Result<(Trace, Vec<EventRecord>, DualState), SolverError> {
    if activations < 1 {
        return Err(SolverError::BadParameter(
            "activation count must be at least 1".into(),
        ));
    }
    if steps.local_alpha.len() != inst.n() {
        return Err(SolverError::BadParameter(
            "one local step size per node required".into(),
        ));
    }
    let start = Instant::now();
    let mut sequencer = ActivationSequencer::new(TimerModel::uniform(inst.n(), mode)?, seed);
    let mut y = DualState::zero(inst)?;
    let mut trace = Trace::with_capacity(activations + 1);
    let mut events = Vec::with_capacity(activations);
    trace.records.push(record_trace(inst, &y, 0, -1, opts, start)?);
    callback(0, &y);
    for t in 1..=activations {
        let (node, time) = sequencer.next_activation();
        awake_update(inst, &mut y, node, steps.local_alpha[node - 1])?;
        events.push(EventRecord {
            time,
            node,
            msg_count: inst.graph().neighbors(node)?.len(),
        });
        trace
            .records
            .push(record_trace(inst, &y, t, node as i64, opts, start)?);
        callback(t, &y);
    }
    Ok((trace, events, y))
}

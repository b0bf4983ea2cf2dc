//! Experiment front end: seeded instance generation, the centralized
//! reference oracle, run orchestration for every algorithm, rate-bound
//! checks, and deterministic trace/plot artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dual::{record_trace, run_fista, run_sync, DualState, StepSizes};
use crate::gossip::run_async;
use crate::graph::erdos_renyi_connected;
use crate::instance::ProblemInstance;
use crate::oracles::{PolytopeOracle, QuadraticOracle, RegularizerKind, ZeroOracle};
use crate::trace::{write_events_csv, EventRecord, Trace, TraceOptions};
use crate::ucdc::{run_ucdc, BlockSchedule, DualBlockProblem};
use crate::SolverError;

pub mod bound;
pub mod config;
pub mod plot;
mod reference;

pub use bound::{accelerated_rate_bound_check, sync_rate_bound_check, BoundReport, BOUND_SLACK};
pub use config::{Algorithm, RunConfig, StepMode};
pub use reference::{centralized_reference, ActiveConstraint, Reference};

/// Attempts at drawing constraint sets with a strictly feasible common point.
const FEASIBILITY_RETRIES: usize = 50;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("reference solver: {0}")]
    Reference(String),
    #[error("instance generation: {0}")]
    Generation(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<crate::graph::GraphError> for HarnessError {
    fn from(e: crate::graph::GraphError) -> Self {
        HarnessError::Solver(SolverError::Graph(e))
    }
}

impl From<crate::oracles::OracleError> for HarnessError {
    fn from(e: crate::oracles::OracleError) -> Self {
        HarnessError::Solver(SolverError::Oracle(e))
    }
}

fn sample_vector(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.gen_range(lo..hi))
}

fn sample_costs(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<QuadraticOracle> {
    (0..n)
        .map(|_| {
            let diag = sample_vector(rng, dim, 1.0, 2.0);
            let r = sample_vector(rng, dim, -5.0, 5.0);
            QuadraticOracle::diagonal(diag, r).expect("sampled diagonal is positive")
        })
        .collect()
}

fn sample_polytope(rng: &mut ChaCha8Rng, dim: usize, m: usize) -> PolytopeOracle {
    loop {
        let mut a = DMatrix::zeros(m, dim);
        for row in 0..m {
            loop {
                let candidate = sample_vector(rng, dim, 0.0, 10.0);
                if candidate.norm() >= 1e-6 {
                    a.row_mut(row).copy_from(&candidate.transpose());
                    break;
                }
            }
        }
        let b = sample_vector(rng, m, -5.0, 5.0);
        // nonnegative rows always admit points far along −1, but retry on the
        // (theoretical) empty draw anyway
        if let Ok(p) = PolytopeOracle::new(a, b) {
            return p;
        }
    }
}

/// Finds a point with margin `δ` inside every halfspace, trying the ray
/// `−t·1` first and a shrunk-set Dykstra projection second.
fn strictly_feasible_point(polytopes: &[&PolytopeOracle], dim: usize) -> Option<DVector<f64>> {
    let margin = 1e-6;
    let strictly_inside = |x: &DVector<f64>| {
        polytopes.iter().all(|p| {
            (0..p.rows()).all(|row| {
                p.a_matrix().row(row).transpose().dot(x) <= p.b_vector()[row] - margin
            })
        })
    };
    let ones = DVector::from_element(dim, 1.0);
    let mut t = 0.0;
    for _ in 0..40 {
        let x = -t * &ones;
        if strictly_inside(&x) {
            return Some(x);
        }
        t = if t == 0.0 { 1.0 } else { t * 2.0 };
    }
    // Dykstra over the δ-shrunk sets
    let shrunk: Vec<PolytopeOracle> = polytopes
        .iter()
        .map(|p| {
            PolytopeOracle::new(
                p.a_matrix().clone(),
                p.b_vector().map(|b| b - 2.0 * margin),
            )
        })
        .collect::<Result<_, _>>()
        .ok()?;
    let mut x = DVector::zeros(dim);
    let mut corrections = vec![DVector::zeros(dim); shrunk.len()];
    for _ in 0..10_000 {
        let before = x.clone();
        for (k, p) in shrunk.iter().enumerate() {
            let shifted = &x + &corrections[k];
            let projected = p.project(&shifted).ok()?;
            corrections[k] = shifted - &projected;
            x = projected;
        }
        if (&x - before).norm() <= 1e-12 {
            break;
        }
    }
    strictly_inside(&x).then_some(x)
}

/// Samples a problem instance: a connected Erdős–Rényi graph, diagonal
/// quadratics with entries in `[1, 2]` (so σ_i ∈ [2, 4]) and linear terms in
/// `[−5, 5]`, and per-node polytopes with normals in `[0, 10]` and offsets in
/// `[−5, 5]`. Constraint sets are resampled until the intersection has a
/// strictly feasible point, so the constraint qualification holds by
/// construction. `m_halfspaces = 0` yields unconstrained instances.
pub fn generate_instance(config: &RunConfig) -> Result<ProblemInstance, HarnessError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let graph_seed = rng.gen::<u64>();
    let graph = erdos_renyi_connected(config.n, config.graph_p, graph_seed)?;
    let costs = sample_costs(&mut rng, config.n, config.dim);
    let regularizers: Vec<RegularizerKind> = if config.m_halfspaces == 0 {
        (0..config.n)
            .map(|_| RegularizerKind::Zero(ZeroOracle::new(config.dim)))
            .collect()
    } else {
        let mut chosen = None;
        for _ in 0..FEASIBILITY_RETRIES {
            let candidate: Vec<PolytopeOracle> = (0..config.n)
                .map(|_| sample_polytope(&mut rng, config.dim, config.m_halfspaces))
                .collect();
            let refs: Vec<&PolytopeOracle> = candidate.iter().collect();
            if strictly_feasible_point(&refs, config.dim).is_some() {
                chosen = Some(candidate);
                break;
            }
        }
        chosen
            .ok_or_else(|| {
                HarnessError::Generation(format!(
                    "no strictly feasible constraint intersection in {FEASIBILITY_RETRIES} draws"
                ))
            })?
            .into_iter()
            .map(RegularizerKind::Polytope)
            .collect()
    };
    ProblemInstance::new(graph, config.dim, costs, regularizers).map_err(HarnessError::from)
}

/// Strided per-node state snapshots for plots and the snapshot CSV.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub iteration: usize,
    /// `x_i*` per node.
    pub x: Vec<Vec<f64>>,
    /// `μ_i` per node.
    pub mu: Vec<Vec<f64>>,
    /// `(neighbor, λ_i^j)` per node, neighbors ascending.
    pub lambda: Vec<Vec<(usize, Vec<f64>)>>,
}

#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    stride: usize,
    final_iteration: usize,
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotSeries {
    pub fn new(stride: usize, final_iteration: usize) -> Self {
        Self {
            stride: stride.max(1),
            final_iteration,
            snapshots: Vec::new(),
        }
    }

    pub fn observe(&mut self, iteration: usize, y: &DualState, n: usize) {
        if !iteration.is_multiple_of(self.stride) && iteration != self.final_iteration {
            return;
        }
        let x = (1..=n).map(|i| y.x_star(i).iter().copied().collect()).collect();
        let mu = (1..=n).map(|i| y.mu(i).iter().copied().collect()).collect();
        let lambda = (1..=n)
            .map(|i| {
                y.lambda(i)
                    .iter()
                    .map(|(&j, v)| (j, v.iter().copied().collect()))
                    .collect()
            })
            .collect();
        self.snapshots.push(Snapshot {
            iteration,
            x,
            mu,
            lambda,
        });
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "iteration,node,kind,neighbor,component,value")?;
        for s in &self.snapshots {
            for (node0, comps) in s.x.iter().enumerate() {
                for (c, v) in comps.iter().enumerate() {
                    writeln!(w, "{},{},x,,{},{}", s.iteration, node0 + 1, c, v)?;
                }
            }
            for (node0, comps) in s.mu.iter().enumerate() {
                for (c, v) in comps.iter().enumerate() {
                    writeln!(w, "{},{},mu,,{},{}", s.iteration, node0 + 1, c, v)?;
                }
            }
            for (node0, blocks) in s.lambda.iter().enumerate() {
                for (j, comps) in blocks {
                    for (c, v) in comps.iter().enumerate() {
                        writeln!(w, "{},{},lambda,{},{},{}", s.iteration, node0 + 1, j, c, v)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Everything a finished run produced.
#[derive(Debug)]
pub struct RunArtifacts {
    pub config: RunConfig,
    pub instance: ProblemInstance,
    pub steps: StepSizes,
    pub reference: Reference,
    pub trace: Trace,
    pub events: Vec<EventRecord>,
    pub snapshots: SnapshotSeries,
    pub final_state: DualState,
}

/// Generates the instance, solves the centralized reference, and runs the
/// configured algorithm.
pub fn execute_run(config: &RunConfig) -> Result<RunArtifacts, HarnessError> {
    config.validate()?;
    let instance = generate_instance(config)?;
    let reference = centralized_reference(&instance, config.tolerance)?;
    let steps = match config.step_mode {
        StepMode::Safe => StepSizes::safe(&instance)?,
        StepMode::Reproduction => {
            StepSizes::reproduction(&instance, config.reproduction_alpha())?
        }
    };
    let stride = config.effective_snapshot_stride();
    let mut snapshots = SnapshotSeries::new(stride, config.iterations);
    let opts = TraceOptions::default();
    let n = instance.n();

    let (trace, events, final_state) = match config.algorithm {
        Algorithm::Sync => {
            let (trace, state) = run_sync(
                &instance,
                steps.global_alpha,
                config.iterations,
                opts,
                |t, y| snapshots.observe(t, y, n),
            )?;
            (trace, Vec::new(), state)
        }
        Algorithm::Fista => {
            let (trace, state) = run_fista(
                &instance,
                steps.global_alpha,
                config.iterations,
                opts,
                |t, y| snapshots.observe(t, y, n),
            )?;
            (trace, Vec::new(), state)
        }
        Algorithm::Async => {
            let (trace, events, state) = run_async(
                &instance,
                &steps,
                config.iterations,
                config.seed,
                config.activation_mode,
                opts,
                |t, y| snapshots.observe(t, y, n),
            )?;
            (trace, events, state)
        }
        Algorithm::Ucdc => run_ucdc_traced(config, &instance, &steps, opts, &mut snapshots)?,
    };

    Ok(RunArtifacts {
        config: config.clone(),
        instance,
        steps,
        reference,
        trace,
        events,
        snapshots,
        final_state,
    })
}

/// UCDC on the dual problem with per-iteration trace rows (`active_node` is
/// the chosen block).
fn run_ucdc_traced(
    config: &RunConfig,
    instance: &ProblemInstance,
    steps: &StepSizes,
    opts: TraceOptions,
    snapshots: &mut SnapshotSeries,
) -> Result<(Trace, Vec<EventRecord>, DualState), HarnessError> {
    let lipschitz = match config.step_mode {
        StepMode::Safe => steps.local_lipschitz.clone(),
        StepMode::Reproduction => vec![1.0 / config.reproduction_alpha(); instance.n()],
    };
    let problem = DualBlockProblem::with_lipschitz(instance, lipschitz)?;
    let start = Instant::now();
    let y0 = DualState::zero(instance)?;
    let mut trace = Trace::with_capacity(config.iterations + 1);
    trace
        .records
        .push(record_trace(instance, &y0, 0, -1, opts, start)?);
    snapshots.observe(0, &y0, instance.n());

    let mut failure: Option<SolverError> = None;
    let mut last_state = y0.clone();
    let schedule = BlockSchedule::Uniform { seed: config.seed };
    run_ucdc(
        &problem,
        y0.stacked(),
        config.iterations,
        &schedule,
        |t, block, y| {
            if failure.is_some() {
                return;
            }
            match DualState::from_stacked(instance, y) {
                Ok(state) => {
                    match record_trace(instance, &state, t, block as i64, opts, start) {
                        Ok(record) => trace.records.push(record),
                        Err(e) => {
                            failure = Some(e);
                            return;
                        }
                    }
                    snapshots.observe(t, &state, instance.n());
                    last_state = state;
                }
                Err(e) => failure = Some(e),
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok((trace, Vec::new(), last_state))
}

fn write_file(path: &Path, content: &str) -> Result<(), HarnessError> {
    std::fs::write(path, content).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Human-readable run summary (deterministic: no timings).
pub fn summary_text(art: &RunArtifacts) -> String {
    let last = art.trace.last().expect("trace never empty");
    let mut out = String::new();
    out.push_str(&format!(
        "algorithm = {}\nseed = {}\niterations = {}\nconfig_hash = {}\n",
        art.config.algorithm,
        art.config.seed,
        art.config.iterations,
        art.config.config_hash()
    ));
    out.push_str(&format!(
        "centralized_optimum = {}\nactive_constraints = {}\n",
        art.reference.value,
        art.reference
            .active_constraints
            .iter()
            .map(|a| format!("node{}#{}", a.node, a.row))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    out.push_str(&format!(
        "final_consensus_residual = {}\n",
        last.consensus_residual
    ));
    if let Some(gamma) = last.dual_objective {
        let cost = -gamma;
        let gap = (cost - art.reference.value).abs() / (1.0 + art.reference.value.abs());
        out.push_str(&format!(
            "final_dual_objective = {gamma}\nfinal_cost = {cost}\nrelative_gap_to_optimum = {gap}\n"
        ));
    }
    if let Some(projected) = last.primal_cost_projected {
        out.push_str(&format!("final_primal_cost_projected = {projected}\n"));
    }
    out
}

/// Writes every artifact of a run under its output directory and returns the
/// paths. Output bytes are fully determined by `(seed, config)` unless
/// wall-clock columns were requested.
pub fn emit_outputs(art: &RunArtifacts) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = &art.config.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    let meta = format!(
        "dualprox seed={} config_hash={}",
        art.config.seed,
        art.config.config_hash()
    );

    let path = dir.join("config.txt");
    write_file(&path, &art.config.canonical_text())?;
    written.push(path);

    let path = dir.join("instance.txt");
    write_file(&path, &art.instance.canonical_text())?;
    written.push(path);

    let path = dir.join("graph.txt");
    write_file(&path, &art.instance.graph().to_edge_list())?;
    written.push(path);

    let path = dir.join("trace.csv");
    let mut buf = Vec::new();
    art.trace
        .write_csv(&mut buf, art.config.csv_wall_clock)
        .map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
    write_file(&path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    written.push(path);

    if !art.events.is_empty() {
        let path = dir.join("events.csv");
        let mut buf = Vec::new();
        write_events_csv(&art.events, &mut buf).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        write_file(&path, &String::from_utf8(buf).expect("csv is utf-8"))?;
        written.push(path);
    }

    let path = dir.join("snapshots.csv");
    let mut buf = Vec::new();
    art.snapshots
        .write_csv(&mut buf)
        .map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
    write_file(&path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    written.push(path);

    let path = dir.join("summary.txt");
    write_file(&path, &summary_text(art))?;
    written.push(path);

    for (name, spec) in chart_specs(art, &meta) {
        let path = dir.join(name);
        write_file(&path, &plot::line_chart(&spec))?;
        written.push(path);
    }
    Ok(written)
}

fn chart_specs(art: &RunArtifacts, meta: &str) -> Vec<(&'static str, plot::ChartSpec)> {
    let cost_points: Vec<(f64, f64)> = art
        .trace
        .records
        .iter()
        .filter_map(|r| {
            r.dual_objective
                .filter(|g| g.is_finite())
                .map(|g| (r.iteration as f64, -g))
        })
        .collect();
    let cost = plot::ChartSpec {
        title: "Cost vs centralized optimum".into(),
        x_label: "iteration t".into(),
        y_label: "-Gamma(y(t))".into(),
        series: vec![plot::Series {
            label: "-Gamma(y(t))".into(),
            points: cost_points,
        }],
        hline: Some((art.reference.value, "optimal cost".into())),
        metadata: meta.to_string(),
    };

    let n = art.instance.n();
    let per_node = |extract: &dyn Fn(&Snapshot, usize) -> f64| -> Vec<plot::Series> {
        (1..=n)
            .map(|i| plot::Series {
                label: format!("node {i}"),
                points: art
                    .snapshots
                    .snapshots
                    .iter()
                    .map(|s| (s.iteration as f64, extract(s, i)))
                    .collect(),
            })
            .collect()
    };
    let x_chart = plot::ChartSpec {
        title: "First component of x_i*(t)".into(),
        x_label: "iteration t".into(),
        y_label: "x_i*[0]".into(),
        series: per_node(&|s, i| s.x[i - 1][0]),
        hline: Some((art.reference.x[0], "optimal x[0]".into())),
        metadata: meta.to_string(),
    };
    let mu_chart = plot::ChartSpec {
        title: "First component of mu_i(t)".into(),
        x_label: "iteration t".into(),
        y_label: "mu_i[0]".into(),
        series: per_node(&|s, i| s.mu[i - 1][0]),
        hline: None,
        metadata: meta.to_string(),
    };
    let node = art.config.plot_node;
    let neighbor_count = art
        .snapshots
        .snapshots
        .first()
        .map(|s| s.lambda[node - 1].len())
        .unwrap_or(0);
    let lambda_series = (0..neighbor_count)
        .map(|k| {
            let j = art.snapshots.snapshots[0].lambda[node - 1][k].0;
            plot::Series {
                label: format!("lambda_{node}^{j}"),
                points: art
                    .snapshots
                    .snapshots
                    .iter()
                    .map(|s| (s.iteration as f64, s.lambda[node - 1][k].1[0]))
                    .collect(),
            }
        })
        .collect();
    let lambda_chart = plot::ChartSpec {
        title: format!("First component of lambda_{node}^j(t)"),
        x_label: "iteration t".into(),
        y_label: format!("lambda_{node}^j[0]"),
        series: lambda_series,
        hline: None,
        metadata: meta.to_string(),
    };
    vec![
        ("cost.svg", cost),
        ("x_first.svg", x_chart),
        ("mu_first.svg", mu_chart),
        ("lambda_first.svg", lambda_chart),
    ]
}

/// The reproduction preset: 15 nodes, edge probability 0.2, two-dimensional
/// variables, one halfspace per node, asynchronous gossip with constant unit
/// steps, 5000 activations.
pub fn sec5_preset(seed: u64) -> RunConfig {
    RunConfig {
        seed,
        ..RunConfig::default()
    }
}

//! Per-iteration trace records shared by every solver, and their CSV form.

use std::io::{self, Write};

/// One solver iteration (or gossip activation).
///
/// `active_node` is the 1-based waking node for asynchronous runs, the block
/// id for block-coordinate runs, and −1 for synchronous sweeps. Optional
/// fields are `None` when their recording was disabled or unsupported for the
/// instance; `primal_cost_raw` is `+∞` whenever the averaged iterate is still
/// infeasible for some local constraint set.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iteration: usize,
    pub active_node: i64,
    pub dual_objective: Option<f64>,
    pub primal_cost_raw: Option<f64>,
    pub primal_cost_projected: Option<f64>,
    pub consensus_residual: f64,
    pub wall_clock_ns: u128,
}

/// Which trace fields the runners compute. Objective and primal evaluation
/// cost real work per iteration; reference runs turn them off.
#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub objective: bool,
    pub primal: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            objective: true,
            primal: true,
        }
    }
}

impl TraceOptions {
    /// Consensus residual only; for long reference runs.
    pub fn lean() -> Self {
        Self {
            objective: false,
            primal: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x == f64::INFINITY => "inf".into(),
        Some(x) => format!("{x}"),
    }
}

impl Trace {
    pub fn with_capacity(cap: usize) -> Self {
        Self {
            records: Vec::with_capacity(cap),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Record for iteration `t`, if traced.
    pub fn at(&self, t: usize) -> Option<&TraceRecord> {
        self.records.iter().find(|r| r.iteration == t)
    }

    /// Writes the fixed-schema CSV. Wall-clock timings are excluded by
    /// default so that reruns with one seed are byte-identical; pass
    /// `include_wall_clock` to keep them.
    pub fn write_csv<W: Write>(&self, w: &mut W, include_wall_clock: bool) -> io::Result<()> {
        if include_wall_clock {
            writeln!(
                w,
                "iteration,active_node,dual_objective,primal_cost_raw,primal_cost_projected,consensus_residual,wall_clock_ns"
            )?;
        } else {
            writeln!(
                w,
                "iteration,active_node,dual_objective,primal_cost_raw,primal_cost_projected,consensus_residual"
            )?;
        }
        for r in &self.records {
            write!(
                w,
                "{},{},{},{},{},{}",
                r.iteration,
                r.active_node,
                fmt_opt(r.dual_objective),
                fmt_opt(r.primal_cost_raw),
                fmt_opt(r.primal_cost_projected),
                r.consensus_residual
            )?;
            if include_wall_clock {
                write!(w, ",{}", r.wall_clock_ns)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// One gossip activation in the event log: simulated trigger time, waking
/// node, and the number of per-neighbor message bundles it broadcast.
#[derive(Debug, Clone)]
pub struct EventRecord {
    pub time: f64,
    pub node: usize,
    pub msg_count: usize,
}

pub fn write_events_csv<W: Write>(events: &[EventRecord], w: &mut W) -> io::Result<()> {
    writeln!(w, "time,node,msg_count")?;
    for e in events {
        writeln!(w, "{},{},{}", e.time, e.node, e.msg_count)?;
    }
    Ok(())
}

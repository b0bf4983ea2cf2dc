//! Run configuration: defaults match the reproduction experiment (15 nodes,
//! edge probability 0.2, two-dimensional variables, one halfspace per node,
//! constant unit step in reproduction mode), a flat `key = value` text
//! format, and canonical serialization for artifact metadata.

use std::fmt;
use std::path::PathBuf;

use crate::gossip::ActivationMode;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Sync,
    Fista,
    Async,
    Ucdc,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "sync" => Ok(Self::Sync),
            "fista" => Ok(Self::Fista),
            "async" => Ok(Self::Async),
            "ucdc" => Ok(Self::Ucdc),
            other => Err(HarnessError::Config(format!(
                "unknown algorithm {other:?} (expected sync|fista|async|ucdc)"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sync => "sync",
            Self::Fista => "fista",
            Self::Async => "async",
            Self::Ucdc => "ucdc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Step sizes satisfy the stated bounds (and the measured curvature cap
    /// for synchronous runs); `alpha` overrides are rejected.
    Safe,
    /// Constant user-chosen step everywhere, default 1 as in the reported
    /// experiment. Traces are recorded regardless of guarantees.
    Reproduction,
}

impl StepMode {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "safe" => Ok(Self::Safe),
            "reproduction" => Ok(Self::Reproduction),
            other => Err(HarnessError::Config(format!(
                "unknown step mode {other:?} (expected safe|reproduction)"
            ))),
        }
    }
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Safe => "safe",
            Self::Reproduction => "reproduction",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub dim: usize,
    pub graph_p: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub step_mode: StepMode,
    pub alpha_override: Option<f64>,
    pub m_halfspaces: usize,
    pub output_dir: PathBuf,
    pub tolerance: f64,
    /// Node whose λ_i^j trajectories are plotted.
    pub plot_node: usize,
    /// Snapshot every this many iterations; 0 picks a stride that keeps about
    /// a thousand snapshots.
    pub snapshot_stride: usize,
    pub activation_mode: ActivationMode,
    /// Include wall-clock nanoseconds in trace CSVs (breaks byte-for-byte
    /// reproducibility of output files).
    pub csv_wall_clock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 15,
            dim: 2,
            graph_p: 0.2,
            seed: 0,
            algorithm: Algorithm::Async,
            iterations: 5000,
            step_mode: StepMode::Reproduction,
            alpha_override: None,
            m_halfspaces: 1,
            output_dir: PathBuf::from("out"),
            tolerance: 1e-10,
            plot_node: 5,
            snapshot_stride: 0,
            activation_mode: ActivationMode::EventQueue,
            csv_wall_clock: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n < 2 {
            return Err(HarnessError::Config("n must be at least 2".into()));
        }
        if self.graph_p.is_nan() || self.graph_p <= 0.0 || self.graph_p > 1.0 {
            return Err(HarnessError::Config("graph_p must lie in (0, 1]".into()));
        }
        if self.dim < 1 {
            return Err(HarnessError::Config("d must be at least 1".into()));
        }
        if self.iterations < 1 {
            return Err(HarnessError::Config("iterations must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(HarnessError::Config("tolerance must be positive".into()));
        }
        if self.plot_node < 1 || self.plot_node > self.n {
            return Err(HarnessError::Config(format!(
                "node must lie in 1..={}, got {}",
                self.n, self.plot_node
            )));
        }
        if self.alpha_override.is_some() && self.step_mode == StepMode::Safe {
            return Err(HarnessError::Config(
                "alpha override is only honored in reproduction mode".into(),
            ));
        }
        if let Some(a) = self.alpha_override {
            if a.is_nan() || a <= 0.0 {
                return Err(HarnessError::Config("alpha must be positive".into()));
            }
        }
        Ok(())
    }

    /// The constant step used in reproduction mode (the experiment's 1.0
    /// unless overridden).
    pub fn reproduction_alpha(&self) -> f64 {
        self.alpha_override.unwrap_or(1.0)
    }

    /// Effective snapshot stride.
    pub fn effective_snapshot_stride(&self) -> usize {
        if self.snapshot_stride > 0 {
            self.snapshot_stride
        } else {
            (self.iterations / 1000).max(1)
        }
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let bad = |what: &str, v: &str| {
            HarnessError::Config(format!("invalid {what} value {v:?}"))
        };
        match key {
            "n" => self.n = value.parse().map_err(|_| bad("n", value))?,
            "d" => self.dim = value.parse().map_err(|_| bad("d", value))?,
            "graph_p" => self.graph_p = value.parse().map_err(|_| bad("graph_p", value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed", value))?,
            "algorithm" => self.algorithm = Algorithm::parse(value)?,
            "iterations" => {
                self.iterations = value.parse().map_err(|_| bad("iterations", value))?
            }
            "step_mode" => self.step_mode = StepMode::parse(value)?,
            "alpha" => {
                self.alpha_override = Some(value.parse().map_err(|_| bad("alpha", value))?)
            }
            "m_halfspaces" => {
                self.m_halfspaces = value.parse().map_err(|_| bad("m_halfspaces", value))?
            }
            "out" => self.output_dir = PathBuf::from(value),
            "tolerance" => self.tolerance = value.parse().map_err(|_| bad("tolerance", value))?,
            "node" => self.plot_node = value.parse().map_err(|_| bad("node", value))?,
            "snapshot_stride" => {
                self.snapshot_stride = value.parse().map_err(|_| bad("snapshot_stride", value))?
            }
            "activation_mode" => {
                self.activation_mode = match value {
                    "event_queue" => ActivationMode::EventQueue,
                    "uniform_pick" => ActivationMode::UniformPick,
                    _ => return Err(bad("activation_mode", value)),
                }
            }
            "csv_wall_clock" => {
                self.csv_wall_clock = value.parse().map_err(|_| bad("csv_wall_clock", value))?
            }
            other => {
                return Err(HarnessError::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Parses the flat `key = value` format ('#' starts a comment) on top of
    /// the defaults.
    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), HarnessError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!(
                    "line {} is not a `key = value` assignment: {raw:?}",
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Canonical resolved form: every key, sorted, one per line. Identical
    /// configs produce identical bytes.
    pub fn canonical_text(&self) -> String {
        let alpha = match self.alpha_override {
            Some(a) => format!("{a}"),
            None => String::new(),
        };
        let mode = match self.activation_mode {
            ActivationMode::EventQueue => "event_queue",
            ActivationMode::UniformPick => "uniform_pick",
        };
        let mut pairs = vec![
            ("activation_mode".to_string(), mode.to_string()),
            ("algorithm".to_string(), self.algorithm.to_string()),
            ("alpha".to_string(), alpha),
            ("csv_wall_clock".to_string(), self.csv_wall_clock.to_string()),
            ("d".to_string(), self.dim.to_string()),
            ("graph_p".to_string(), format!("{}", self.graph_p)),
            ("iterations".to_string(), self.iterations.to_string()),
            ("m_halfspaces".to_string(), self.m_halfspaces.to_string()),
            ("n".to_string(), self.n.to_string()),
            ("node".to_string(), self.plot_node.to_string()),
            ("out".to_string(), self.output_dir.display().to_string()),
            ("seed".to_string(), self.seed.to_string()),
            (
                "snapshot_stride".to_string(),
                self.snapshot_stride.to_string(),
            ),
            ("step_mode".to_string(), self.step_mode.to_string()),
            ("tolerance".to_string(), format!("{}", self.tolerance)),
        ];
        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// FNV-1a hash identifying the experiment, for artifact metadata. The
    /// output directory is excluded: the same experiment written elsewhere
    /// hashes identically.
    pub fn config_hash(&self) -> String {
        let mut hash: u64 = 0xcbf29ce484222325;
        for line in self.canonical_text().lines() {
            if line.starts_with("out = ") {
                continue;
            }
            for byte in line.bytes().chain(std::iter::once(b'\n')) {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
        }
        format!("{hash:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides_defaults() {
        let text = "n = 5\nd = 1\nalgorithm = sync\nstep_mode = safe\nnode = 2\n# comment\n";
        let config = RunConfig::from_text(text).unwrap();
        assert_eq!(config.n, 5);
        assert_eq!(config.dim, 1);
        assert_eq!(config.algorithm, Algorithm::Sync);
        assert_eq!(config.step_mode, StepMode::Safe);
        assert_eq!(config.graph_p, 0.2); // untouched default
    }

    #[test]
    fn rejects_unknown_key_and_malformed_line() {
        assert!(RunConfig::from_text("bogus = 1\n").is_err());
        assert!(RunConfig::from_text("just some text\n").is_err());
    }

    #[test]
    fn alpha_in_safe_mode_is_rejected() {
        let mut config = RunConfig::default();
        config.step_mode = StepMode::Safe;
        config.alpha_override = Some(1.0);
        assert!(config.validate().is_err());
        config.step_mode = StepMode::Reproduction;
        assert!(config.validate().is_ok());
    }

    #[test]
    fn canonical_text_round_trips_and_hashes() {
        let config = RunConfig::default();
        let text = config.canonical_text();
        // canonical text parses back to an equivalent config (alpha empty is
        // the only non-assignment)
        let filtered: String = text
            .lines()
            .filter(|l| !l.starts_with("alpha ="))
            .map(|l| format!("{l}\n"))
            .collect();
        let back = RunConfig::from_text(&filtered).unwrap();
        assert_eq!(back.canonical_text(), text);
        assert_eq!(config.config_hash().len(), 16);
    }

    #[test]
    fn plot_node_bounds_checked() {
        let mut config = RunConfig::default();
        config.n = 4;
        config.plot_node = 5;
        assert!(config.validate().is_err());
    }
}

//! CLI front end: `dualprox run` executes a configured experiment and
//! `dualprox reproduce-sec5` applies the reproduction preset (15-node
//! Erdős–Rényi graph with p = 0.2, d = 2, one halfspace per node,
//! asynchronous gossip with constant unit steps).
//!
//! Exit codes: 0 success, 2 usage error (bad flags), 3 configuration error
//! (malformed config file or invalid parameter combination), 4 runtime
//! failure (solver or I/O).

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use dualprox::harness::{self, HarnessError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_RUN: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "dualprox",
    about = "Distributed dual proximal gradient solvers over undirected graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment from a config file and/or flags.
    Run(RunFlags),
    /// Reproduce the reported experiment (overridable via flags).
    ReproduceSec5(RunFlags),
}

#[derive(Args, Debug, Default)]
struct RunFlags {
    /// Flat `key = value` config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sync | fista | async | ucdc
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iterations (activations for async/ucdc).
    #[arg(long)]
    iters: Option<usize>,
    /// safe | reproduction
    #[arg(long)]
    step_mode: Option<String>,
    /// Constant step size; only honored in reproduction mode.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory for traces and charts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reference-solver tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Node whose multiplier trajectories are plotted.
    #[arg(long)]
    node: Option<usize>,
}

fn apply_flags(config: &mut RunConfig, flags: &RunFlags) -> Result<(), HarnessError> {
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        config.apply_text(&text)?;
    }
    if let Some(a) = &flags.algorithm {
        config.algorithm = harness::Algorithm::parse(a)?;
    }
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(iters) = flags.iters {
        config.iterations = iters;
    }
    if let Some(mode) = &flags.step_mode {
        config.step_mode = harness::StepMode::parse(mode)?;
    }
    if let Some(alpha) = flags.alpha {
        config.alpha_override = Some(alpha);
    }
    if let Some(out) = &flags.out {
        config.output_dir = out.clone();
    }
    if let Some(tol) = flags.tolerance {
        config.tolerance = tol;
    }
    if let Some(node) = flags.node {
        config.plot_node = node;
    }
    Ok(())
}

fn execute(config: &RunConfig) -> Result<(), HarnessError> {
    config.validate()?;
    let artifacts = harness::execute_run(config)?;
    let written = harness::emit_outputs(&artifacts)?;
    print!("{}", harness::summary_text(&artifacts));
    println!("wrote {} files under {}", written.len(), config.output_dir.display());
    Ok(())
}

fn error_exit_code(err: &HarnessError) -> i32 {
    match err {
        HarnessError::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUN,
    }
}

/// Parses `argv` (without the binary name handled by clap itself) and runs.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let (mut config, flags) = match cli.command {
        Command::Run(flags) => (RunConfig::default(), flags),
        Command::ReproduceSec5(flags) => (harness::sec5_preset(0), flags),
    };
    if let Err(e) = apply_flags(&mut config, &flags) {
        eprintln!("dualprox: {e}");
        return error_exit_code(&e);
    }
    match execute(&config) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("dualprox: {e}");
            error_exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_usage_error() {
        let code = cli_main(["dualprox", "run", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn alpha_in_safe_mode_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o");
        let code = cli_main([
            "dualprox",
            "run",
            "--step-mode",
            "safe",
            "--alpha",
            "1.0",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn malformed_config_file_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "nonsense line\n").unwrap();
        let code = cli_main([
            "dualprox",
            "run",
            "--config",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_CONFIG);
    }
}

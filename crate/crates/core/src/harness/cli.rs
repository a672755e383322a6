//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::check::run_checks;
use super::config::{parse_entries, ConfigError, ExperimentConfig};
use super::output::emit_results;
use super::run::{run_experiment, ExperimentResult, HarnessError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "twr-harvest", version, about = "Energy-harvesting two-way relay experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Config file of `key = value` lines; defaults apply when omitted.
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one axis over a comma-separated grid.
    Sweep {
        /// Source transmit powers in dBm.
        #[arg(long, allow_hyphen_values = true, group = "axis")]
        ps_dbm: Option<String>,
        /// Relay peak powers in dBm.
        #[arg(long, allow_hyphen_values = true, group = "axis")]
        pr_dbm: Option<String>,
        /// Terminal separations in metres.
        #[arg(long, group = "axis")]
        distance: Option<String>,
        /// Base config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive search on a small instance.
    Oracle {
        #[arg(long, default_value_t = 2)]
        relays: usize,
        #[arg(long, default_value_t = 2)]
        slots: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in invariant checks.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Override any config key, e.g. `--set system.tc_ms=175`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// max-sum or max-min.
    #[arg(long)]
    utility: Option<String>,
    /// bpso, bb or exhaustive.
    #[arg(long)]
    solver: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or both.
    #[arg(long)]
    format: Option<String>,
    /// Record wall-clock times per trial.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn entries(&self) -> Result<Vec<(String, String)>, ConfigError> {
        let mut out = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: 0, text: s.clone() })?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("experiment.seed", self.seed.map(|v| v.to_string()));
        push("experiment.trials", self.trials.map(|v| v.to_string()));
        push("experiment.utility", self.utility.clone());
        push("experiment.solver", self.solver.clone());
        push("output.path", self.out.as_ref().map(|p| p.display().to_string()));
        push("output.format", self.format.clone());
        if self.timing {
            push("experiment.timing", Some("true".into()));
        }
        Ok(out)
    }
}

fn file_entries(path: Option<&Path>) -> Result<Vec<(String, String)>, ConfigError> {
    let Some(path) = path else { return Ok(Vec::new()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), reason: e.to_string() })?;
    parse_entries(&text)
}

fn pair(k: &str, v: impl Into<String>) -> (String, String) {
    (k.to_string(), v.into())
}

fn build_config(command: &Command) -> Result<ExperimentConfig, ConfigError> {
    let entries = match command {
        Command::Run { config, common } => {
            let mut e = file_entries(config.as_deref())?;
            e.extend(common.entries()?);
            e
        }
        Command::Sweep { ps_dbm, pr_dbm, distance, config, common } => {
            let mut e = file_entries(config.as_deref())?;
            let axis = [("ps_dbm", ps_dbm), ("pr_dbm", pr_dbm), ("distance_m", distance)]
                .into_iter()
                .find_map(|(name, v)| v.as_ref().map(|v| (name, v.clone())));
            if let Some((name, values)) = axis {
                e.push(pair("experiment.sweep", name));
                e.push(pair("experiment.sweep_values", values));
            }
            e.extend(common.entries()?);
            e
        }
        Command::Oracle { relays, slots, common } => {
            let mut e = vec![pair("system.relays", relays.to_string()), pair("system.slots", slots.to_string())];
            e.extend(common.entries()?);
            e.push(pair("experiment.solver", "exhaustive"));
            e
        }
        Command::Check { .. } => Vec::new(),
    };
    ExperimentConfig::from_entries(&entries)
}

fn report(result: &ExperimentResult) {
    println!("utility {} solver {} axis {} seed {}", result.utility_kind, result.solver, result.axis, result.base_seed);
    for g in &result.summary {
        let label = g.sweep_value.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{label:>10}  feasible {}/{}  utility {:.6} +/- {:.6} Mbps",
            g.feasible, g.trials, g.utility.mean, g.utility.stderr
        );
    }
}

fn experiment(command: &Command) -> i32 {
    let cfg = match build_config(command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                HarnessError::Guard { .. } => EXIT_GUARD,
                _ => EXIT_FAILURE,
            };
        }
    };
    report(&result);
    match emit_results(&result, &cfg.output_path, cfg.output_format) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::Check { seed } => {
            let outcomes = run_checks(*seed);
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            if outcomes.iter().all(|o| o.passed) {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        command => experiment(command),
    }
}

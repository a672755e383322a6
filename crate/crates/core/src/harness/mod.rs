//! Experiment configuration, Monte Carlo runs, result files and the CLI.

pub mod check;
pub mod cli;
mod config;
mod output;
mod run;

pub use check::{run_checks, CheckOutcome};
pub use config::{
    parse_beta, parse_entries, parse_list, parse_utility, ConfigError, ExperimentConfig, OutputFormat, SolverKind,
    SweepAxis,
};
pub use output::{emit_results, CSV_HEADER};
pub use run::{
    run_experiment, solve_scenario, summarize, trial_seed, worker_count, ExperimentResult, GroupSummary,
    HarnessError, MetricSummary, TrialRecord, METRICS, WORKERS_ENV,
};

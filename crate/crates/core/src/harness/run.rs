//! Seeded Monte Carlo trials over a sweep grid.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use statrs::statistics::Statistics;
use thiserror::Error;

use super::config::{ExperimentConfig, SolverKind};
use crate::model::{bits_to_mbps, derive_seed, roll_ledger, ModelError, Point, Scenario};
use crate::selection::{bb_optimize, bpso_optimize, exhaustive_optimize, SearchResult, SelectionError};
use crate::subproblem::Evaluator;

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "TWR_EH_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{source} (sweep value {})", label(.sweep_value))]
    Guard { sweep_value: Option<f64>, source: SelectionError },
    #[error("scenario error at sweep value {}: {source}", label(.sweep_value))]
    Model { sweep_value: Option<f64>, source: ModelError },
    #[error("cannot write {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

fn label(v: &Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "none".into())
}

/// One Monte Carlo trial. Rates are in Mbit/s, energies in joules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub sweep_index: usize,
    pub sweep_value: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub feasible: bool,
    pub utility: f64,
    pub min_slot_rate: f64,
    pub sum_rate: f64,
    /// Per slot, the rates towards terminal 1 and terminal 2.
    pub slot_rates: Vec<[f64; 2]>,
    pub selection: String,
    pub rf_harvest_j: f64,
    pub re_harvest_j: f64,
    pub solver_iters: usize,
    pub evaluations: usize,
    pub gp_solves: usize,
    pub wall_ms: f64,
    pub relay_positions: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub stderr: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        let mean = values.mean();
        let stderr = if values.len() < 2 { 0.0 } else { values.std_dev() / (values.len() as f64).sqrt() };
        MetricSummary { mean, stderr }
    }
}

/// Aggregates of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub sweep_value: Option<f64>,
    pub trials: usize,
    pub feasible: usize,
    pub utility: MetricSummary,
    pub min_slot_rate: MetricSummary,
    pub sum_rate: MetricSummary,
    pub rf_harvest_j: MetricSummary,
    pub re_harvest_j: MetricSummary,
}

pub type Accessor = fn(&TrialRecord) -> f64;

/// Metric names as used in output files, with their accessors.
pub const METRICS: [(&str, Accessor); 5] = [
    ("utility", |r| r.utility),
    ("min_slot_rate", |r| r.min_slot_rate),
    ("sum_rate", |r| r.sum_rate),
    ("rf_harvest_J", |r| r.rf_harvest_j),
    ("re_harvest_J", |r| r.re_harvest_j),
];

impl GroupSummary {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        match name {
            "utility" => Some(&self.utility),
            "min_slot_rate" => Some(&self.min_slot_rate),
            "sum_rate" => Some(&self.sum_rate),
            "rf_harvest_J" => Some(&self.rf_harvest_j),
            "re_harvest_J" => Some(&self.re_harvest_j),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub axis: &'static str,
    pub utility_kind: &'static str,
    pub solver: &'static str,
    pub base_seed: u64,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<GroupSummary>,
}

pub fn summarize(records: &[TrialRecord], grid: &[Option<f64>]) -> Vec<GroupSummary> {
    grid.iter()
        .enumerate()
        .map(|(i, &value)| {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.sweep_index == i).collect();
            let take = |f: Accessor| MetricSummary::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            GroupSummary {
                sweep_value: value,
                trials: group.len(),
                feasible: group.iter().filter(|r| r.feasible).count(),
                utility: take(METRICS[0].1),
                min_slot_rate: take(METRICS[1].1),
                sum_rate: take(METRICS[2].1),
                rf_harvest_j: take(METRICS[3].1),
                re_harvest_j: take(METRICS[4].1),
            }
        })
        .collect()
}

/// Trial seed: base seed XOR trial index. The same seeds are reused at every grid point.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base ^ trial as u64
}

/// Runs the configured outer solver on one scenario.
pub fn solve_scenario(cfg: &ExperimentConfig, scenario: &Scenario, seed: u64) -> Result<SearchResult, SelectionError> {
    let mut evaluator = Evaluator::new(scenario, cfg.utility);
    evaluator.beta = cfg.beta;
    evaluator.sca = cfg.sca.clone();
    match cfg.solver {
        SolverKind::Bpso => {
            let settings = crate::selection::BpsoSettings { seed: derive_seed(seed, 4), ..cfg.bpso.clone() };
            bpso_optimize(&evaluator, &settings)
        }
        SolverKind::Bb => bb_optimize(&evaluator, &cfg.bb),
        SolverKind::Exhaustive => exhaustive_optimize(&evaluator),
    }
}

fn run_trial(cfg: &ExperimentConfig, index: usize, value: Option<f64>, trial: usize) -> Result<TrialRecord, HarnessError> {
    let start = Instant::now();
    let seed = trial_seed(cfg.seed, trial);
    let params = cfg.params_at(value);
    let scenario = Scenario::sample(&params, seed).map_err(|source| HarnessError::Model { sweep_value: value, source })?;
    let outcome = solve_scenario(cfg, &scenario, seed);
    let mbps = |bits: f64| bits_to_mbps(bits, &params);
    let mut record = TrialRecord {
        sweep_index: index,
        sweep_value: value,
        trial,
        seed,
        feasible: false,
        utility: 0.0,
        min_slot_rate: 0.0,
        sum_rate: 0.0,
        slot_rates: Vec::new(),
        selection: String::new(),
        rf_harvest_j: 0.0,
        re_harvest_j: 0.0,
        solver_iters: 0,
        evaluations: 0,
        gp_solves: 0,
        wall_ms: 0.0,
        relay_positions: scenario.geometry.relays.clone(),
    };
    match outcome {
        Ok(found) => {
            let best = &found.best;
            let ledger = roll_ledger(&best.eps, &best.decision, &scenario.channels, &scenario.renewable, &params);
            record.feasible = true;
            record.utility = mbps(best.utility);
            record.min_slot_rate = mbps(best.rates.min_rate());
            record.sum_rate = mbps(best.rates.sum_rate());
            record.slot_rates = (0..params.slots).map(|b| [mbps(best.rates.rate[(b, 0)]), mbps(best.rates.rate[(b, 1)])]).collect();
            record.selection = best.eps.to_string();
            record.rf_harvest_j = ledger.total_rf();
            record.re_harvest_j = ledger.total_renewable();
            record.solver_iters = found.iterations;
            record.evaluations = found.evaluations;
            record.gp_solves = found.gp_solves;
        }
        Err(SelectionError::AllInfeasible) => {}
        Err(source) => return Err(HarnessError::Guard { sweep_value: value, source }),
    }
    if cfg.timing {
        record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(record)
}

/// Worker count after the environment override; 0 means the pool default.
pub fn worker_count(cfg: &ExperimentConfig) -> usize {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(cfg.workers)
}

/// Runs every (grid point, trial) pair; records come back ordered by grid index then trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let grid = cfg.grid();
    let jobs: Vec<(usize, Option<f64>, usize)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| (0..cfg.trials).map(move |t| (i, v, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(cfg))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        jobs.par_iter().map(|&(i, v, t)| run_trial(cfg, i, v, t)).collect::<Result<Vec<_>, _>>()
    })?;
    let summary = summarize(&records, &grid);
    Ok(ExperimentResult {
        axis: cfg.sweep.name(),
        utility_kind: cfg.utility.name(),
        solver: cfg.solver.name(),
        base_seed: cfg.seed,
        records,
        summary,
    })
}

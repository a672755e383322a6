//! CSV, JSON and plot-data files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::OutputFormat;
use super::run::{ExperimentResult, GroupSummary, HarnessError, TrialRecord, METRICS};

pub const CSV_HEADER: [&str; 10] = [
    "sweep_value",
    "trial",
    "seed",
    "utility",
    "min_slot_rate",
    "sum_rate",
    "rf_harvest_J",
    "re_harvest_J",
    "solver_iters",
    "wall_ms",
];

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), reason: e.to_string() }
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn write_csv(path: &Path, records: &[TrialRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| io_err(path, e))?;
    for r in records {
        w.write_record([
            cell(r.sweep_value),
            r.trial.to_string(),
            r.seed.to_string(),
            format!("{:?}", r.utility),
            format!("{:?}", r.min_slot_rate),
            format!("{:?}", r.sum_rate),
            format!("{:?}", r.rf_harvest_j),
            format!("{:?}", r.re_harvest_j),
            r.solver_iters.to_string(),
            format!("{:?}", r.wall_ms),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct JsonGroup<'a> {
    sweep_value: Option<f64>,
    summary: &'a GroupSummary,
    trials: Vec<&'a TrialRecord>,
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    axis: &'a str,
    utility_kind: &'a str,
    solver: &'a str,
    base_seed: u64,
    groups: Vec<JsonGroup<'a>>,
}

fn write_json(path: &Path, result: &ExperimentResult) -> Result<(), HarnessError> {
    let groups = result
        .summary
        .iter()
        .enumerate()
        .map(|(i, s)| JsonGroup {
            sweep_value: s.sweep_value,
            summary: s,
            trials: result.records.iter().filter(|r| r.sweep_index == i).collect(),
        })
        .collect();
    let doc = JsonDoc {
        axis: result.axis,
        utility_kind: result.utility_kind,
        solver: result.solver,
        base_seed: result.base_seed,
        groups,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn write_plot(path: &Path, metric: &str, summary: &[GroupSummary]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["sweep_value", "mean", "stderr"]).map_err(|e| io_err(path, e))?;
    for g in summary {
        let m = g.metric(metric).expect("known metric");
        w.write_record([cell(g.sweep_value), format!("{:?}", m.mean), format!("{:?}", m.stderr)])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes `results.csv` and/or `results.json` plus one `plot_<metric>.csv` per metric into `dir`.
pub fn emit_results(result: &ExperimentResult, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, HarnessError> {
    if result.records.is_empty() {
        return Err(HarnessError::Io { path: dir.display().to_string(), reason: "no records to write".into() });
    }
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let p = dir.join("results.csv");
        write_csv(&p, &result.records)?;
        written.push(p);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let p = dir.join("results.json");
        write_json(&p, result)?;
        written.push(p);
    }
    for (metric, _) in METRICS {
        let p = dir.join(format!("plot_{metric}.csv"));
        write_plot(&p, metric, &result.summary)?;
        written.push(p);
    }
    Ok(written)
}

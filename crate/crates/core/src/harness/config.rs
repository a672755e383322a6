//! Flat `key = value` experiment configuration with dotted keys.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::gp::ScaSettings;
use crate::model::{dbm_to_watts, SystemParams, UtilityKind};
use crate::selection::{BbSettings, BpsoSettings};
use crate::subproblem::BetaPolicy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    None,
    PsDbm,
    PrDbm,
    DistanceM,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::PsDbm => "ps_dbm",
            SweepAxis::PrDbm => "pr_dbm",
            SweepAxis::DistanceM => "distance_m",
        }
    }

    /// Writes one grid value into the parameters.
    pub fn apply(self, params: &mut SystemParams, value: f64) {
        match self {
            SweepAxis::None => {}
            SweepAxis::PsDbm => params.set_source_power(dbm_to_watts(value)),
            SweepAxis::PrDbm => params.relay_power_max = dbm_to_watts(value),
            SweepAxis::DistanceM => params.distance = value,
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" | "" => Ok(SweepAxis::None),
            "ps_dbm" | "ps" => Ok(SweepAxis::PsDbm),
            "pr_dbm" | "pr" => Ok(SweepAxis::PrDbm),
            "distance_m" | "distance" => Ok(SweepAxis::DistanceM),
            _ => Err("expected none, ps_dbm, pr_dbm or distance_m".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Bpso,
    Bb,
    Exhaustive,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bpso => "bpso",
            SolverKind::Bb => "bb",
            SolverKind::Exhaustive => "exhaustive",
        }
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bpso" => Ok(SolverKind::Bpso),
            "bb" => Ok(SolverKind::Bb),
            "exhaustive" => Ok(SolverKind::Exhaustive),
            _ => Err("expected bpso, bb or exhaustive".into()),
        }
    }
}

pub fn parse_utility(s: &str) -> Result<UtilityKind, String> {
    match s {
        "max-sum" | "max_sum" | "sum" => Ok(UtilityKind::MaxSum),
        "max-min" | "max_min" | "min" => Ok(UtilityKind::MaxMin),
        _ => Err("expected max-sum or max-min".into()),
    }
}

pub fn parse_beta(s: &str) -> Result<BetaPolicy, String> {
    if s == "optimized" {
        return Ok(BetaPolicy::Optimized);
    }
    let v = s
        .strip_prefix("fixed:")
        .ok_or("expected optimized or fixed:<value>")?
        .trim()
        .parse::<f64>()
        .map_err(|e| e.to_string())?;
    if !(v > 0.0 && v <= 1.0) {
        return Err("fixed splitting ratio must lie in (0, 1]".into());
    }
    Ok(BetaPolicy::Fixed(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            _ => Err("expected csv, json or both".into()),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub sweep: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub utility: UtilityKind,
    pub solver: SolverKind,
    pub trials: usize,
    pub seed: u64,
    pub beta: BetaPolicy,
    /// 0 lets the thread pool decide.
    pub workers: usize,
    /// Record wall-clock times; off by default so outputs are reproducible byte for byte.
    pub timing: bool,
    pub bpso: BpsoSettings,
    pub sca: ScaSettings,
    pub bb: BbSettings,
    pub output_path: PathBuf,
    pub output_format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: SystemParams::default(),
            sweep: SweepAxis::None,
            sweep_values: Vec::new(),
            utility: UtilityKind::MaxSum,
            solver: SolverKind::Bpso,
            trials: 200,
            seed: 1,
            beta: BetaPolicy::Optimized,
            workers: 0,
            timing: false,
            bpso: BpsoSettings::default(),
            sca: ScaSettings::default(),
            bb: BbSettings::default(),
            output_path: PathBuf::from("results"),
            output_format: OutputFormat::Csv,
        }
    }
}

/// Splits a config text into `(key, value)` pairs; `#` starts a comment.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| ConfigError::BadValue { key: key.to_string(), value: v.to_string(), reason: e.to_string() })
}

fn with<T>(key: &str, v: &str, r: Result<T, String>) -> Result<T, ConfigError> {
    r.map_err(|reason| ConfigError::BadValue { key: key.to_string(), value: v.to_string(), reason })
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| value::<f64>(key, s.trim())).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => with(key, v, Err("expected true or false".into())),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(&parse_entries(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.to_path_buf(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    /// Applies entries over the defaults. Later entries win.
    pub fn from_entries(entries: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut battery = None;
        let (mut relays, mut slots) = (cfg.params.relays, cfg.params.slots);
        for (k, v) in entries {
            let (k, v) = (k.as_str(), v.as_str());
            let p = &mut cfg.params;
            match k {
                "system.relays" => relays = value(k, v)?,
                "system.slots" => slots = value(k, v)?,
                "system.tc_ms" => p.slot_duration = value::<f64>(k, v)? * 1e-3,
                "system.bandwidth_hz" => p.bandwidth = value(k, v)?,
                "system.carrier_hz" => p.carrier_frequency = value(k, v)?,
                "system.ps_dbm" => p.set_source_power(dbm_to_watts(value(k, v)?)),
                "system.p1_dbm" => p.source_power[0] = dbm_to_watts(value(k, v)?),
                "system.p2_dbm" => p.source_power[1] = dbm_to_watts(value(k, v)?),
                "system.pr_max_dbm" => p.relay_power_max = dbm_to_watts(value(k, v)?),
                "system.storage_j" => p.storage_capacity = value(k, v)?,
                "system.leakage_mj" => p.leakage = value::<f64>(k, v)? * 1e-3,
                "system.a0_w" => p.offset_power = value(k, v)?,
                "system.at" => p.transmit_scale = value(k, v)?,
                "system.ar_w" => p.receive_power = value(k, v)?,
                "system.eta_rf" => p.eta_rf = value(k, v)?,
                "system.eta_re" => p.eta_re = value(k, v)?,
                "system.noise_dbm" => p.noise_power = dbm_to_watts(value(k, v)?),
                "system.path_loss_exponent" => p.path_loss_exponent = value(k, v)?,
                "system.pl_los_db" => p.extra_loss_db = value(k, v)?,
                "system.rician_k_db" => p.rician_k_db = value(k, v)?,
                "system.distance_m" => p.distance = value(k, v)?,
                "system.initial_battery_j" => battery = Some(value::<f64>(k, v)?),
                "renewable.mean_w" => p.renewable.mean = value(k, v)?,
                "renewable.variance" => p.renewable.variance = value(k, v)?,
                "renewable.lower_w" => p.renewable.lower = value(k, v)?,
                "renewable.upper_w" => p.renewable.upper = value(k, v)?,
                "experiment.utility" => cfg.utility = with(k, v, parse_utility(v))?,
                "experiment.solver" => cfg.solver = with(k, v, v.parse())?,
                "experiment.trials" => cfg.trials = value(k, v)?,
                "experiment.seed" => cfg.seed = value(k, v)?,
                "experiment.sweep" => cfg.sweep = with(k, v, v.parse())?,
                "experiment.sweep_values" => cfg.sweep_values = parse_list(k, v)?,
                "experiment.beta" => cfg.beta = with(k, v, parse_beta(v))?,
                "experiment.workers" => cfg.workers = value(k, v)?,
                "experiment.timing" => cfg.timing = parse_bool(k, v)?,
                "bpso.particles" => cfg.bpso.particles = value(k, v)?,
                "bpso.iterations" => cfg.bpso.iterations = value(k, v)?,
                "bpso.inertia_start" => cfg.bpso.inertia_start = value(k, v)?,
                "bpso.inertia_end" => cfg.bpso.inertia_end = value(k, v)?,
                "bpso.velocity_clamp" => cfg.bpso.velocity_clamp = value(k, v)?,
                "bpso.stall_window" => cfg.bpso.stall_window = value(k, v)?,
                "sca.tolerance" => cfg.sca.tolerance = value(k, v)?,
                "sca.max_iterations" => cfg.sca.max_iterations = value(k, v)?,
                "bb.max_entries" => cfg.bb.max_entries = value(k, v)?,
                "output.path" => cfg.output_path = PathBuf::from(v),
                "output.format" => cfg.output_format = with(k, v, v.parse())?,
                _ => return Err(ConfigError::UnknownKey(k.to_string())),
            }
        }
        cfg.params.resize(relays, slots);
        let level = battery.unwrap_or(cfg.params.storage_capacity / 2.0);
        cfg.params.initial_battery = vec![level; relays];
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.trials == 0 {
            return invalid("experiment.trials must be at least 1");
        }
        if self.sweep != SweepAxis::None {
            if self.sweep_values.is_empty() {
                return invalid("experiment.sweep_values must be nonempty when a sweep axis is set");
            }
            if self.sweep_values.windows(2).any(|w| !(w[0] < w[1])) {
                return invalid("experiment.sweep_values must be strictly increasing");
            }
            if self.sweep == SweepAxis::DistanceM && self.sweep_values.iter().any(|&d| !(d > 0.0)) {
                return invalid("distances must be positive");
            }
        }
        if self.bpso.particles == 0 || self.bpso.iterations == 0 {
            return invalid("bpso.particles and bpso.iterations must be at least 1");
        }
        let omega = [self.bpso.inertia_start, self.bpso.inertia_end];
        if omega.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return invalid("bpso inertia values must lie in [0, 1]");
        }
        if !(self.sca.tolerance >= 0.0) {
            return invalid("sca.tolerance must be nonnegative");
        }
        Ok(())
    }

    /// Grid values, or a single unlabeled group when there is no sweep.
    pub fn grid(&self) -> Vec<Option<f64>> {
        match self.sweep {
            SweepAxis::None => vec![None],
            _ => self.sweep_values.iter().map(|&v| Some(v)).collect(),
        }
    }

    /// Parameters for one grid point.
    pub fn params_at(&self, value: Option<f64>) -> SystemParams {
        let mut p = self.params.clone();
        if let Some(v) = value {
            self.sweep.apply(&mut p, v);
        }
        p
    }
}

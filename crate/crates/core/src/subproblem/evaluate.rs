//! Scoring of a selection matrix: initial point, SCA, then the exact utility.

use super::builder::{BetaPolicy, SubproblemBuilder};
use crate::gp::{run_sca, ScaSettings};
use crate::grid::Grid;
use crate::model::{
    check_feasible, roll_ledger, snr_and_rate, utility, ChannelSet, ContinuousDecision, RateResult, RenewableTrace,
    Scenario, SelectionMatrix, SystemParams, UtilityKind, Verdict,
};

const BETA_CANDIDATES: [f64; 5] = [0.5, 0.9, 0.1, 0.99, 0.01];
const POWER_CANDIDATES: [f64; 5] = [0.5, 0.1, 0.01, 1e-3, 1e-6];

#[derive(Debug, Clone, PartialEq)]
pub struct TrueUtility {
    pub utility: f64,
    pub verdict: Verdict,
    pub rates: RateResult,
}

/// Utility with the exact gain, plus the feasibility verdict of the decision.
pub fn true_utility(
    eps: &SelectionMatrix,
    dec: &ContinuousDecision,
    ch: &ChannelSet,
    re: &RenewableTrace,
    params: &SystemParams,
    kind: UtilityKind,
) -> TrueUtility {
    let rates = snr_and_rate(eps, dec, ch, params);
    TrueUtility { utility: utility(&rates, kind), verdict: check_feasible(eps, dec, ch, re, params), rates }
}

/// First uniform decision over the selected entries that the batteries can afford.
pub fn initial_decision(builder: &SubproblemBuilder<'_>, kind: UtilityKind) -> Option<ContinuousDecision> {
    let eps = builder.eps;
    let p = builder.params;
    let betas: Vec<f64> = match builder.layout.fixed_beta {
        Some(v) => vec![v],
        None => BETA_CANDIDATES.to_vec(),
    };
    for &ratio in &POWER_CANDIDATES {
        for &beta in &betas {
            let on = |l, b| eps.get(l, b);
            let dec = ContinuousDecision {
                beta: Grid::from_fn(p.relays, p.slots, |l, b| if on(l, b) { beta } else { 0.0 }),
                p_r: Grid::from_fn(p.relays, p.slots, |l, b| if on(l, b) { ratio * p.relay_power_max } else { 0.0 }),
            };
            if accepts(builder, kind, &dec) {
                return Some(dec);
            }
        }
    }
    None
}

fn accepts(builder: &SubproblemBuilder<'_>, kind: UtilityKind, dec: &ContinuousDecision) -> bool {
    let p = builder.params;
    if !check_feasible(builder.eps, dec, builder.ch, builder.renewable, p).is_feasible() {
        return false;
    }
    let z = builder.layout.encode(dec, gamma_start(builder, dec));
    match kind {
        UtilityKind::MaxMin if builder.eps.any_silent_slot() => true,
        _ => builder.build(kind, &z).is_ok(),
    }
}

/// Slightly below the smallest approximate SNR so the rate constraints start strictly inside.
fn gamma_start(builder: &SubproblemBuilder<'_>, dec: &ContinuousDecision) -> f64 {
    let snr = builder.approximate_snr(dec);
    0.99 * snr.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Result of optimizing the continuous variables for one selection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub eps: SelectionMatrix,
    pub decision: ContinuousDecision,
    /// Exact-gain utility in bits per slot.
    pub utility: f64,
    pub verdict: Verdict,
    pub rates: RateResult,
    pub gp_solves: usize,
    pub inner_iterations: usize,
    /// Surrogate log-objective per SCA iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// SCA stopped with an error and the initial point was kept.
    pub sca_failed: bool,
}

impl Evaluation {
    pub fn rf_harvest(&self, scenario: &Scenario) -> f64 {
        roll_ledger(&self.eps, &self.decision, &scenario.channels, &scenario.renewable, &scenario.params).total_rf()
    }

    pub fn renewable_harvest(&self, scenario: &Scenario) -> f64 {
        roll_ledger(&self.eps, &self.decision, &scenario.channels, &scenario.renewable, &scenario.params)
            .total_renewable()
    }
}

#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub scenario: &'a Scenario,
    pub kind: UtilityKind,
    pub beta: BetaPolicy,
    pub sca: ScaSettings,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario, kind: UtilityKind) -> Self {
        Evaluator { scenario, kind, beta: BetaPolicy::Optimized, sca: ScaSettings::default() }
    }

    pub fn builder<'s>(&'s self, eps: &'s SelectionMatrix) -> SubproblemBuilder<'s> {
        let sc = self.scenario;
        SubproblemBuilder::new(eps, &sc.channels, &sc.renewable, &sc.params, self.beta, self.kind)
    }

    fn finish(&self, eps: &SelectionMatrix, decision: ContinuousDecision) -> Evaluation {
        let sc = self.scenario;
        let t = true_utility(eps, &decision, &sc.channels, &sc.renewable, &sc.params, self.kind);
        Evaluation {
            eps: eps.clone(),
            decision,
            utility: t.utility,
            verdict: t.verdict,
            rates: t.rates,
            gp_solves: 0,
            inner_iterations: 0,
            trace: Vec::new(),
            converged: true,
            sca_failed: false,
        }
    }

    /// Optimizes `(beta, P_r)` for `eps`; `None` when no affordable starting point exists.
    pub fn evaluate(&self, eps: &SelectionMatrix) -> Option<Evaluation> {
        let p = &self.scenario.params;
        if eps.count() == 0 {
            let zero = self.finish(eps, ContinuousDecision::zeros(p.relays, p.slots));
            return zero.verdict.is_feasible().then_some(zero);
        }
        let builder = self.builder(eps);
        let start = initial_decision(&builder, self.kind)?;
        let initial = self.finish(eps, start.clone());
        if !initial.verdict.is_feasible() {
            return None;
        }
        if self.kind == UtilityKind::MaxMin && eps.any_silent_slot() {
            return Some(initial);
        }
        let z0 = builder.layout.encode(&start, gamma_start(&builder, &start));
        let outcome = run_sca(|z| builder.build(self.kind, z), &z0, &self.sca);
        let mut out = match outcome {
            Ok(sca) => {
                let mut e = self.finish(eps, builder.layout.decode(&sca.point));
                if !e.verdict.is_feasible() || e.utility < initial.utility {
                    e = initial.clone();
                }
                e.gp_solves = sca.gp_solves;
                e.inner_iterations = sca.inner_iterations;
                e.trace = sca.trace;
                e.converged = sca.converged;
                e
            }
            Err(_) => {
                let mut e = initial;
                e.sca_failed = true;
                e.converged = false;
                e
            }
        };
        out.eps = eps.clone();
        Some(out)
    }

    /// Exact utility of `eps`, or negative infinity when it is infeasible.
    pub fn score(&self, eps: &SelectionMatrix) -> f64 {
        self.evaluate(eps).map_or(f64::NEG_INFINITY, |e| e.utility)
    }
}

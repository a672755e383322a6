//! Amplify-and-forward gains, end-to-end SNRs, rates and utilities.

use serde::{Deserialize, Serialize};

use super::{ChannelSet, ContinuousDecision, ModelError, SelectionMatrix, SystemParams};
use crate::grid::Grid;

/// Whether the receiver noise is kept in the amplification-gain denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GainModel {
    Exact,
    NoiseNeglected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UtilityKind {
    MaxSum,
    MaxMin,
}

impl UtilityKind {
    pub fn name(self) -> &'static str {
        match self {
            UtilityKind::MaxSum => "max-sum",
            UtilityKind::MaxMin => "max-min",
        }
    }
}

/// Per-slot SNRs and rates (`B x 2`, column `q` is terminal `q`) plus relay gains (`L x B`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub snr: Grid<f64>,
    /// Bits delivered per slot.
    pub rate: Grid<f64>,
    pub gain: Grid<f64>,
}

impl RateResult {
    pub fn sum_rate(&self) -> f64 {
        self.rate.iter().sum()
    }

    /// Smallest per-terminal rate over all slots.
    pub fn min_rate(&self) -> f64 {
        self.rate.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `R_b = R_{b,1} + R_{b,2}` for every slot.
    pub fn slot_rates(&self) -> Vec<f64> {
        (0..self.rate.rows()).map(|b| self.rate[(b, 0)] + self.rate[(b, 1)]).collect()
    }
}

pub fn bits_to_mbps(bits_per_slot: f64, params: &SystemParams) -> f64 {
    bits_per_slot / params.slot_duration / 1e6
}

/// Relay gain `w = sqrt(P_r / (beta S + N0))`, `S = P_1|h_1|^2 + P_2|h_2|^2`.
pub fn amplification_gain(
    l: usize,
    b: usize,
    dec: &ContinuousDecision,
    ch: &ChannelSet,
    params: &SystemParams,
    model: GainModel,
) -> Result<f64, ModelError> {
    let s = ch.received_power(l, b, params);
    let mut denom = dec.beta[(l, b)] * s;
    if model == GainModel::Exact {
        denom += params.noise_power;
    }
    if !(denom > 0.0) {
        return Err(ModelError::NonPositiveDenominator { relay: l, slot: b });
    }
    Ok((dec.p_r[(l, b)] / denom).sqrt())
}

// Returns (w sqrt(beta), w^2) for one relay. Under the noise-neglected model the
// first factor is sqrt(P/S) regardless of beta, and the second diverges at beta = 0.
fn gain_factors(p: f64, beta: f64, s: f64, n0: f64, model: GainModel) -> (f64, f64) {
    let noise = if model == GainModel::Exact { n0 } else { 0.0 };
    let denom = beta * s + noise;
    if p == 0.0 {
        return (0.0, 0.0);
    }
    if denom > 0.0 {
        let w2 = p / denom;
        return ((w2 * beta).sqrt(), w2);
    }
    if s > 0.0 {
        ((p / s).sqrt(), f64::INFINITY)
    } else {
        (0.0, 0.0)
    }
}

/// SNRs and rates with the exact gain.
pub fn snr_and_rate(
    eps: &SelectionMatrix,
    dec: &ContinuousDecision,
    ch: &ChannelSet,
    params: &SystemParams,
) -> RateResult {
    snr_and_rate_with(eps, dec, ch, params, GainModel::Exact)
}

pub fn snr_and_rate_with(
    eps: &SelectionMatrix,
    dec: &ContinuousDecision,
    ch: &ChannelSet,
    params: &SystemParams,
    model: GainModel,
) -> RateResult {
    let (relays, slots) = (params.relays, params.slots);
    let n0 = params.noise_power;
    let mut gain = Grid::filled(relays, slots, 0.0);
    let mut snr = Grid::filled(slots, 2, 0.0);
    for b in 0..slots {
        for q in 0..2 {
            let other = 1 - q;
            let (mut amp, mut loss) = (0.0, 0.0);
            for l in eps.selected(b) {
                let s = ch.received_power(l, b, params);
                let (a, w2) = gain_factors(dec.p_r[(l, b)], dec.beta[(l, b)], s, n0, model);
                gain[(l, b)] = w2.sqrt();
                let hq = ch.terminal(q, l, b).norm();
                let hp = ch.terminal(other, l, b).norm();
                amp += a * hq * hp;
                loss += w2 * hq * hq;
            }
            snr[(b, q)] = if loss.is_infinite() || amp == 0.0 {
                0.0
            } else {
                params.source_power[other] * amp * amp / (n0 * (1.0 + loss))
            };
        }
    }
    let scale = params.bits_per_log2();
    let rate = snr.map(|&g| scale * (1.0 + g).log2());
    RateResult { snr, rate, gain }
}

/// Utility of a set of per-(slot, terminal) rates; an empty set scores 0.
pub fn utility_of(rates: &[f64], kind: UtilityKind) -> f64 {
    if rates.is_empty() {
        return 0.0;
    }
    match kind {
        UtilityKind::MaxSum => rates.iter().sum(),
        UtilityKind::MaxMin => rates.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

pub fn utility(rates: &RateResult, kind: UtilityKind) -> f64 {
    utility_of(rates.rate.as_slice(), kind)
}

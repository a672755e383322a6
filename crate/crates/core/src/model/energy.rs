//! Harvest, consumption and battery bookkeeping of the relays.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ChannelSet, ContinuousDecision, RenewableTrace, SelectionMatrix, SystemParams};
use crate::grid::Grid;

/// Slack (J) granted to the energy constraints when judging feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Energy harvested by one relay in one slot, split by origin (J).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Harvest {
    pub rf_terminals: f64,
    pub rf_relays: f64,
    pub renewable: f64,
}

impl Harvest {
    pub fn rf(&self) -> f64 {
        self.rf_terminals + self.rf_relays
    }

    pub fn total(&self) -> f64 {
        self.rf_terminals + self.rf_relays + self.renewable
    }
}

pub fn harvest_breakdown(
    l: usize,
    b: usize,
    eps: &SelectionMatrix,
    dec: &ContinuousDecision,
    ch: &ChannelSet,
    re: &RenewableTrace,
    params: &SystemParams,
) -> Harvest {
    let half = params.slot_duration / 2.0;
    let terminals = params.eta_rf * ch.received_power(l, b, params) * half;
    let renewable = params.eta_re * re.phi[(l, b)] * params.slot_duration;
    if eps.get(l, b) {
        let beta = dec.beta[(l, b)];
        Harvest { rf_terminals: (1.0 - beta) * terminals, rf_relays: 0.0, renewable }
    } else {
        let from_relays: f64 = eps.selected(b).map(|j| dec.p_r[(j, b)] * ch.relay_gain(l, j, b)).sum();
        Harvest { rf_terminals: terminals, rf_relays: params.eta_rf * from_relays * half, renewable }
    }
}

/// Total energy `E^h` harvested by relay `l` in slot `b`.
pub fn harvested_energy(
    l: usize,
    b: usize,
    eps: &SelectionMatrix,
    dec: &ContinuousDecision,
    ch: &ChannelSet,
    re: &RenewableTrace,
    params: &SystemParams,
) -> f64 {
    harvest_breakdown(l, b, eps, dec, ch, re, params).total()
}

/// Energy `E^c` drawn by relay `l` in slot `b`.
pub fn consumed_energy(
    l: usize,
    b: usize,
    eps: &SelectionMatrix,
    dec: &ContinuousDecision,
    params: &SystemParams,
) -> f64 {
    let tc = params.slot_duration;
    let base = params.offset_power * tc;
    if eps.get(l, b) {
        base + (params.receive_power + params.transmit_scale * dec.p_r[(l, b)]) * tc / 2.0
    } else {
        base + params.receive_power * tc
    }
}

/// Per-slot energy flows and the resulting battery trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub harvested: Grid<f64>,
    pub consumed: Grid<f64>,
    /// `L x (B + 1)`; column 0 holds the initial charge.
    pub stored: Grid<f64>,
    pub breakdown: Grid<Harvest>,
}

impl EnergyLedger {
    pub fn total_rf(&self) -> f64 {
        self.breakdown.iter().map(Harvest::rf).sum()
    }

    pub fn total_renewable(&self) -> f64 {
        self.breakdown.iter().map(|h| h.renewable).sum()
    }
}

/// Runs the battery recurrence from the initial charge without clamping.
pub fn roll_ledger(
    eps: &SelectionMatrix,
    dec: &ContinuousDecision,
    ch: &ChannelSet,
    re: &RenewableTrace,
    params: &SystemParams,
) -> EnergyLedger {
    let (relays, slots) = (params.relays, params.slots);
    let breakdown = Grid::from_fn(relays, slots, |l, b| harvest_breakdown(l, b, eps, dec, ch, re, params));
    let harvested = breakdown.map(Harvest::total);
    let consumed = Grid::from_fn(relays, slots, |l, b| consumed_energy(l, b, eps, dec, params));
    let mut stored = Grid::filled(relays, slots + 1, 0.0);
    for l in 0..relays {
        stored[(l, 0)] = params.initial_battery[l];
        for b in 0..slots {
            stored[(l, b + 1)] = stored[(l, b)] + harvested[(l, b)] - consumed[(l, b)] - params.leakage;
        }
    }
    EnergyLedger { harvested, consumed, stored, breakdown }
}

/// First constraint found violated by a candidate solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Transmit power outside `[0, P_max]`.
    PowerBound { relay: usize, slot: usize, value: f64 },
    /// Splitting ratio outside `[0, 1]`.
    BetaBound { relay: usize, slot: usize, value: f64 },
    /// Slot consumption plus leakage exceeds the charge at the start of the slot.
    ConsumedEnergy { relay: usize, slot: usize, required: f64, available: f64 },
    /// Charge plus harvest would overflow the storage capacity.
    StorageCapacity { relay: usize, slot: usize, level: f64, capacity: f64 },
    /// Decision matrices do not match the network size.
    Shape,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PowerBound { relay, slot, value } => {
                write!(f, "peak power: relay {relay} slot {slot} has P_r = {value}")
            }
            Violation::BetaBound { relay, slot, value } => {
                write!(f, "splitting ratio: relay {relay} slot {slot} has beta = {value}")
            }
            Violation::ConsumedEnergy { relay, slot, required, available } => {
                write!(f, "consumed energy: relay {relay} slot {slot} needs {required} J, holds {available} J")
            }
            Violation::StorageCapacity { relay, slot, level, capacity } => {
                write!(f, "storage capacity: relay {relay} slot {slot} reaches {level} J > {capacity} J")
            }
            Violation::Shape => f.write_str("decision shape does not match the network"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Feasible,
    Violated(Violation),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Verdict::Feasible => None,
            Verdict::Violated(v) => Some(v),
        }
    }
}

/// Checks the box bounds, then the consumption and storage constraints slot by slot.
pub fn check_feasible(
    eps: &SelectionMatrix,
    dec: &ContinuousDecision,
    ch: &ChannelSet,
    re: &RenewableTrace,
    params: &SystemParams,
) -> Verdict {
    let shape = (params.relays, params.slots);
    if eps.as_grid().shape() != shape
        || dec.shape() != shape
        || re.phi.shape() != shape
        || ch.relays() != shape.0
        || ch.slots() != shape.1
    {
        return Verdict::Violated(Violation::Shape);
    }
    for ((l, b), &p) in dec.p_r.indexed() {
        if !(0.0..=params.relay_power_max).contains(&p) {
            return Verdict::Violated(Violation::PowerBound { relay: l, slot: b, value: p });
        }
    }
    for ((l, b), &beta) in dec.beta.indexed() {
        if !(0.0..=1.0).contains(&beta) {
            return Verdict::Violated(Violation::BetaBound { relay: l, slot: b, value: beta });
        }
    }
    let ledger = roll_ledger(eps, dec, ch, re, params);
    for b in 0..params.slots {
        for l in 0..params.relays {
            let available = ledger.stored[(l, b)];
            let required = ledger.consumed[(l, b)] + params.leakage;
            if required > available + FEASIBILITY_TOL {
                return Verdict::Violated(Violation::ConsumedEnergy { relay: l, slot: b, required, available });
            }
            let level = available + ledger.harvested[(l, b)];
            if level > params.storage_capacity + FEASIBILITY_TOL {
                return Verdict::Violated(Violation::StorageCapacity {
                    relay: l,
                    slot: b,
                    level,
                    capacity: params.storage_capacity,
                });
            }
        }
    }
    Verdict::Feasible
}

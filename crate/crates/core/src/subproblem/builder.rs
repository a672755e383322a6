//! GP subproblems for a fixed selection matrix.

use super::coefficients::{energy_coefficients, snr_coefficients, EnergyCoefficients, SnrCoefficients};
use crate::gp::{condense, GpError, GpProblem, Monomial, Posynomial};
use crate::grid::Grid;
use crate::model::{ChannelSet, ContinuousDecision, RenewableTrace, SelectionMatrix, SystemParams, UtilityKind};

/// Smallest value a positive GP variable may take.
pub const VARIABLE_FLOOR: f64 = 1e-9;
/// Decoded values below this are reported as exact zeros.
pub const SNAP_BELOW: f64 = 1e-8;
/// Slack on `lhs <= 1` tolerated at a reference point.
const REFERENCE_TOL: f64 = 1e-9;

/// How the power-splitting ratios of selected relays are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaPolicy {
    Optimized,
    Fixed(f64),
}

/// Maps the decision entries of selected relays to GP variable indices.
///
/// Powers are normalized by the relay budget, so `z = P_r / P_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarLayout {
    pub beta: Grid<Option<usize>>,
    pub power: Grid<Option<usize>>,
    pub gamma: Option<usize>,
    pub fixed_beta: Option<f64>,
    pub power_max: f64,
    pub names: Vec<String>,
}

impl VarLayout {
    pub fn new(eps: &SelectionMatrix, policy: BetaPolicy, kind: UtilityKind, power_max: f64) -> Self {
        let (relays, slots) = (eps.relays(), eps.slots());
        let mut names = Vec::new();
        let mut beta = Grid::filled(relays, slots, None);
        let mut power = Grid::filled(relays, slots, None);
        for l in 0..relays {
            for b in 0..slots {
                if !eps.get(l, b) {
                    continue;
                }
                if policy == BetaPolicy::Optimized {
                    beta[(l, b)] = Some(names.len());
                    names.push(format!("beta[{l},{b}]"));
                }
                power[(l, b)] = Some(names.len());
                names.push(format!("p[{l},{b}]"));
            }
        }
        let gamma = (kind == UtilityKind::MaxMin).then(|| {
            names.push("gamma_min".to_string());
            names.len() - 1
        });
        let fixed_beta = match policy {
            BetaPolicy::Optimized => None,
            BetaPolicy::Fixed(v) => Some(v),
        };
        VarLayout { beta, power, gamma, fixed_beta, power_max, names }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// `beta_{l,b}` as a monomial (a constant under a fixed policy).
    pub fn beta_monomial(&self, l: usize, b: usize) -> Monomial {
        match self.beta[(l, b)] {
            Some(i) => Monomial::var(i),
            None => Monomial::constant(self.fixed_beta.unwrap_or(0.0)),
        }
    }

    /// `P_{l,b}` in watts as a monomial; `None` for silent entries.
    pub fn power_monomial(&self, l: usize, b: usize) -> Option<Monomial> {
        self.power[(l, b)].map(|i| Monomial::new(self.power_max, [(i, 1.0)]))
    }

    /// Packs a decision (and the auxiliary SNR level) into a GP point, applying the floor.
    pub fn encode(&self, dec: &ContinuousDecision, gamma: f64) -> Vec<f64> {
        let mut z = vec![1.0; self.num_vars()];
        for ((l, b), slot) in self.beta.indexed() {
            if let Some(i) = *slot {
                z[i] = dec.beta[(l, b)].max(VARIABLE_FLOOR);
            }
        }
        for ((l, b), slot) in self.power.indexed() {
            if let Some(i) = *slot {
                z[i] = (dec.p_r[(l, b)] / self.power_max).max(VARIABLE_FLOOR);
            }
        }
        if let Some(i) = self.gamma {
            z[i] = gamma.max(VARIABLE_FLOOR);
        }
        z
    }

    /// Unpacks a GP point, clamping to the box and snapping tiny values to zero.
    pub fn decode(&self, z: &[f64]) -> ContinuousDecision {
        let (relays, slots) = self.beta.shape();
        let snap = |v: f64| if v < SNAP_BELOW { 0.0 } else { v.min(1.0) };
        let mut dec = ContinuousDecision::zeros(relays, slots);
        for l in 0..relays {
            for b in 0..slots {
                let Some(pi) = self.power[(l, b)] else {
                    continue;
                };
                dec.p_r[(l, b)] = snap(z[pi]) * self.power_max;
                dec.beta[(l, b)] = match self.beta[(l, b)] {
                    Some(bi) => snap(z[bi]),
                    None => self.fixed_beta.unwrap_or(0.0),
                };
            }
        }
        dec
    }
}

/// Everything needed to rebuild the condensed subproblem at a new reference point.
#[derive(Debug, Clone)]
pub struct SubproblemBuilder<'a> {
    pub eps: &'a SelectionMatrix,
    pub ch: &'a ChannelSet,
    pub renewable: &'a RenewableTrace,
    pub params: &'a SystemParams,
    pub layout: VarLayout,
    pub energy: EnergyCoefficients,
    pub snr: SnrCoefficients,
}

fn sum_terms(constant: f64, terms: Vec<Monomial>) -> Posynomial {
    let mut all = Vec::with_capacity(terms.len() + 1);
    if constant != 0.0 || terms.is_empty() {
        all.push(Monomial::constant(constant));
    }
    all.extend(terms.into_iter().filter(|m| m.coeff() != 0.0));
    if all.is_empty() {
        all.push(Monomial::constant(0.0));
    }
    Posynomial::from_terms(all).expect("nonnegative terms")
}

impl<'a> SubproblemBuilder<'a> {
    pub fn new(
        eps: &'a SelectionMatrix,
        ch: &'a ChannelSet,
        re: &'a RenewableTrace,
        params: &'a SystemParams,
        policy: BetaPolicy,
        kind: UtilityKind,
    ) -> Self {
        SubproblemBuilder {
            eps,
            ch,
            renewable: re,
            params,
            layout: VarLayout::new(eps, policy, kind, params.relay_power_max),
            energy: energy_coefficients(eps, ch, re, params),
            snr: snr_coefficients(eps, ch, params),
        }
    }

    /// RF harvested from the broadcasts of selected relays, as posynomial terms.
    fn relay_harvest_terms(&self, l: usize, t: usize, out: &mut Vec<Monomial>) {
        let zeta2 = self.energy.zeta2[(l, t)];
        if zeta2 == 0.0 {
            return;
        }
        for j in self.eps.selected(t) {
            let g = self.ch.relay_gain(l, j, t);
            if let Some(p) = self.layout.power_monomial(j, t) {
                out.push(p.scale(zeta2 * g));
            }
        }
    }

    /// Adds both energy constraints and the box constraints, condensing at `z_ref`.
    fn add_energy_constraints(&self, gp: &mut GpProblem, z_ref: &[f64]) -> Result<(), GpError> {
        let p = self.params;
        let e = &self.energy;
        for l in 0..p.relays {
            let init = p.initial_battery[l];
            for b in 0..p.slots {
                // Consumption up to slot b against the charge entering slot b.
                let mut num_const = 0.0;
                let mut num = Vec::new();
                let mut den_const = init;
                let mut den = Vec::new();
                for t in 0..=b {
                    num_const += e.theta2[(l, t)] + p.leakage;
                    if let Some(pw) = self.layout.power_monomial(l, t) {
                        num.push(pw.scale(e.theta1[(l, t)]));
                    }
                    if t < b {
                        if e.zeta1[(l, t)] > 0.0 {
                            num.push(self.layout.beta_monomial(l, t).scale(e.zeta1[(l, t)]));
                        }
                        den_const += e.zeta3[(l, t)];
                        self.relay_harvest_terms(l, t, &mut den);
                    }
                }
                let label = format!("consumed[{l},{b}]");
                self.push_ratio(gp, label, sum_terms(num_const, num), &sum_terms(den_const, den), z_ref)?;

                // Charge entering slot b plus its harvest against the capacity.
                let mut num_const = init;
                let mut num = Vec::new();
                let mut den_const = p.storage_capacity;
                let mut den = Vec::new();
                for t in 0..=b {
                    num_const += e.zeta3[(l, t)];
                    self.relay_harvest_terms(l, t, &mut num);
                    if e.zeta1[(l, t)] > 0.0 {
                        den.push(self.layout.beta_monomial(l, t).scale(e.zeta1[(l, t)]));
                    }
                    if t < b {
                        den_const += e.theta2[(l, t)] + p.leakage;
                        if let Some(pw) = self.layout.power_monomial(l, t) {
                            den.push(pw.scale(e.theta1[(l, t)]));
                        }
                    }
                }
                let label = format!("storage[{l},{b}]");
                self.push_ratio(gp, label, sum_terms(num_const, num), &sum_terms(den_const, den), z_ref)?;
            }
        }
        for ((l, b), slot) in self.layout.power.indexed() {
            if let Some(i) = *slot {
                gp.subject_to(format!("power[{l},{b}]"), Posynomial::from(Monomial::var(i)));
                gp.bound(i, Some(VARIABLE_FLOOR), None);
            }
        }
        for ((l, b), slot) in self.layout.beta.indexed() {
            if let Some(i) = *slot {
                gp.subject_to(format!("beta[{l},{b}]"), Posynomial::from(Monomial::var(i)));
                gp.bound(i, Some(VARIABLE_FLOOR), None);
            }
        }
        Ok(())
    }

    fn push_ratio(
        &self,
        gp: &mut GpProblem,
        label: String,
        num: Posynomial,
        den: &Posynomial,
        z_ref: &[f64],
    ) -> Result<(), GpError> {
        let value = num.eval(z_ref) / den.eval(z_ref);
        if !(value <= 1.0 + REFERENCE_TOL) {
            return Err(GpError::InfeasibleStart { label, value });
        }
        let mono = condense(den, z_ref)?;
        gp.subject_to(label, num.div_monomial(&mono));
        Ok(())
    }

    /// `1 + sum_l delta1 P beta^-1` for slot `b`, terminal `q`.
    fn loss_posynomial(&self, b: usize, q: usize) -> Posynomial {
        let mut terms = vec![Monomial::constant(1.0)];
        for l in self.eps.selected(b) {
            let d1 = self.snr.delta1[q][(l, b)];
            if d1 == 0.0 {
                continue;
            }
            let pw = self.layout.power_monomial(l, b).expect("selected relay has a power variable");
            terms.push(&pw.scale(d1) * &self.layout.beta_monomial(l, b).recip());
        }
        Posynomial::from_terms(terms).expect("positive terms")
    }

    /// Expanded `scale (sum_l delta2 sqrt(P))^2`; `None` if every coefficient vanishes.
    fn signal_terms(&self, b: usize, q: usize, scale: f64) -> Vec<Monomial> {
        let active: Vec<(f64, Monomial)> = self
            .eps
            .selected(b)
            .filter(|&l| self.snr.delta2[q][(l, b)] > 0.0)
            .map(|l| (self.snr.delta2[q][(l, b)], self.layout.power_monomial(l, b).expect("power variable")))
            .collect();
        let mut terms = Vec::new();
        for (i, (di, pi)) in active.iter().enumerate() {
            terms.push(pi.scale(scale * di * di));
            for (dj, pj) in &active[i + 1..] {
                terms.push((&pi.powf(0.5) * &pj.powf(0.5)).scale(2.0 * scale * di * dj));
            }
        }
        terms
    }

    fn check_reference(&self, z_ref: &[f64]) -> Result<(), GpError> {
        if z_ref.len() != self.layout.num_vars() {
            return Err(GpError::MissingVariable(z_ref.len().min(self.layout.num_vars())));
        }
        if let Some((i, &v)) = z_ref.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(GpError::NonPositive { var: i, value: v });
        }
        Ok(())
    }

    /// Minimize `prod_{b,q} f / g~` with `g` condensed at `z_ref`.
    pub fn max_sum(&self, z_ref: &[f64]) -> Result<GpProblem, GpError> {
        self.check_reference(z_ref)?;
        let mut gp = GpProblem::new(self.layout.names.clone());
        let p = self.params;
        for b in 0..p.slots {
            if self.eps.slot_is_silent(b) {
                continue;
            }
            for q in 0..2 {
                let f = self.loss_posynomial(b, q);
                let signal = self.signal_terms(b, q, p.source_power[1 - q] / p.noise_power);
                if signal.is_empty() {
                    continue;
                }
                let g = f.add(&Posynomial::from_terms(signal)?);
                let g_tilde = condense(&g, z_ref)?;
                gp.minimize(f.div_monomial(&g_tilde));
            }
        }
        if gp.objective.is_empty() {
            gp.minimize(Posynomial::from(Monomial::constant(1.0)));
        }
        self.add_energy_constraints(&mut gp, z_ref)?;
        Ok(gp)
    }

    /// Minimize `1 / gamma_min` subject to `gamma_min <= gamma_{b,q}` with the signal condensed at `z_ref`.
    pub fn max_min(&self, z_ref: &[f64]) -> Result<GpProblem, GpError> {
        self.check_reference(z_ref)?;
        let gamma = self.layout.gamma.ok_or(GpError::MissingVariable(self.layout.num_vars()))?;
        let mut gp = GpProblem::new(self.layout.names.clone());
        let p = self.params;
        gp.minimize(Posynomial::from(Monomial::var(gamma).recip()));
        for b in 0..p.slots {
            for q in 0..2 {
                let signal = self.signal_terms(b, q, p.source_power[1 - q]);
                if signal.is_empty() {
                    return Err(GpError::ZeroCondensation);
                }
                let s = Posynomial::from_terms(signal)?;
                let num = self.loss_posynomial(b, q).mul_monomial(&Monomial::new(p.noise_power, [(gamma, 1.0)]));
                self.push_ratio(&mut gp, format!("rate[{b},{q}]"), num, &s, z_ref)?;
            }
        }
        gp.bound(gamma, Some(VARIABLE_FLOOR), None);
        self.add_energy_constraints(&mut gp, z_ref)?;
        Ok(gp)
    }

    pub fn build(&self, kind: UtilityKind, z_ref: &[f64]) -> Result<GpProblem, GpError> {
        match kind {
            UtilityKind::MaxSum => self.max_sum(z_ref),
            UtilityKind::MaxMin => self.max_min(z_ref),
        }
    }

    /// Noise-neglected SNR of every (slot, terminal) for a decision.
    pub fn approximate_snr(&self, dec: &ContinuousDecision) -> Grid<f64> {
        Grid::from_fn(self.params.slots, 2, |b, q| {
            self.snr.snr(b, q, |l| dec.beta[(l, b)], |l| dec.p_r[(l, b)], self.params)
        })
    }
}

/// Max-sum subproblem with optimized splitting ratios, condensed at `z_ref`.
pub fn build_max_sum(
    eps: &SelectionMatrix,
    ch: &ChannelSet,
    re: &RenewableTrace,
    params: &SystemParams,
    z_ref: &[f64],
) -> Result<GpProblem, GpError> {
    SubproblemBuilder::new(eps, ch, re, params, BetaPolicy::Optimized, UtilityKind::MaxSum).max_sum(z_ref)
}

/// Max-min subproblem with optimized splitting ratios, condensed at `z_ref`.
pub fn build_max_min(
    eps: &SelectionMatrix,
    ch: &ChannelSet,
    re: &RenewableTrace,
    params: &SystemParams,
    z_ref: &[f64],
) -> Result<GpProblem, GpError> {
    SubproblemBuilder::new(eps, ch, re, params, BetaPolicy::Optimized, UtilityKind::MaxMin).max_min(z_ref)
}

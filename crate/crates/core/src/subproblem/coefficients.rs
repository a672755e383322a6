//! Closed-form coefficients that make the energy and SNR expressions polynomial in `(beta, P_r)`.

use crate::grid::Grid;
use crate::model::{ChannelSet, RenewableTrace, SelectionMatrix, SystemParams};

/// Harvest `E^h = -zeta1 beta + zeta2 sum_j P_j |h_lj|^2 + zeta3`, consumption `E^c = theta1 P + theta2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCoefficients {
    pub zeta1: Grid<f64>,
    pub zeta2: Grid<f64>,
    pub zeta3: Grid<f64>,
    pub theta1: Grid<f64>,
    pub theta2: Grid<f64>,
}

pub fn energy_coefficients(
    eps: &SelectionMatrix,
    ch: &ChannelSet,
    re: &RenewableTrace,
    params: &SystemParams,
) -> EnergyCoefficients {
    let (relays, slots) = (params.relays, params.slots);
    let tc = params.slot_duration;
    let half = tc / 2.0;
    let on = |l, b| if eps.get(l, b) { 1.0 } else { 0.0 };
    let rf = |l, b| params.eta_rf * ch.received_power(l, b, params) * half;
    EnergyCoefficients {
        zeta1: Grid::from_fn(relays, slots, |l, b| on(l, b) * rf(l, b)),
        zeta2: Grid::from_fn(relays, slots, |l, b| (1.0 - on(l, b)) * params.eta_rf * half),
        zeta3: Grid::from_fn(relays, slots, |l, b| rf(l, b) + params.eta_re * re.phi[(l, b)] * tc),
        theta1: Grid::from_fn(relays, slots, |l, b| on(l, b) * params.transmit_scale * half),
        theta2: Grid::from_fn(relays, slots, |l, b| {
            params.offset_power * tc + on(l, b) * params.receive_power * half + (1.0 - on(l, b)) * params.receive_power * tc
        }),
    }
}

/// `delta1[q] = eps |h_q|^2 / S`, `delta2[q] = eps |h_q h_qbar| / sqrt(S)` with
/// `S = P_1|h_1|^2 + P_2|h_2|^2`; zero when `S = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrCoefficients {
    pub delta1: [Grid<f64>; 2],
    pub delta2: [Grid<f64>; 2],
}

pub fn snr_coefficients(eps: &SelectionMatrix, ch: &ChannelSet, params: &SystemParams) -> SnrCoefficients {
    let (relays, slots) = (params.relays, params.slots);
    let d1 = |q: usize| {
        Grid::from_fn(relays, slots, |l, b| {
            let s = ch.received_power(l, b, params);
            if !eps.get(l, b) || s <= 0.0 {
                0.0
            } else {
                ch.terminal_gain(q, l, b) / s
            }
        })
    };
    let d2 = |q: usize| {
        Grid::from_fn(relays, slots, |l, b| {
            let s = ch.received_power(l, b, params);
            if !eps.get(l, b) || s <= 0.0 {
                0.0
            } else {
                ch.terminal(q, l, b).norm() * ch.terminal(1 - q, l, b).norm() / s.sqrt()
            }
        })
    };
    SnrCoefficients { delta1: [d1(0), d1(1)], delta2: [d2(0), d2(1)] }
}

impl SnrCoefficients {
    /// Noise-neglected SNR of slot `b` at terminal `q` for given `beta` and `P_r` columns.
    pub fn snr(&self, b: usize, q: usize, beta: impl Fn(usize) -> f64, power: impl Fn(usize) -> f64, params: &SystemParams) -> f64 {
        let relays = self.delta1[q].rows();
        let mut amp = 0.0;
        let mut loss = 0.0;
        for l in 0..relays {
            let (d1, d2) = (self.delta1[q][(l, b)], self.delta2[q][(l, b)]);
            if d1 == 0.0 && d2 == 0.0 {
                continue;
            }
            let p = power(l);
            amp += d2 * p.sqrt();
            if p > 0.0 {
                loss += d1 * p / beta(l);
            }
        }
        if amp == 0.0 || loss.is_infinite() {
            return 0.0;
        }
        params.source_power[1 - q] / params.noise_power * amp * amp / (1.0 + loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        consumed_energy, harvested_energy, snr_and_rate_with, ContinuousDecision, GainModel, Scenario,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64) -> (Scenario, SelectionMatrix, ContinuousDecision) {
        let p = SystemParams::with_size(3, 4);
        let sc = Scenario::sample(&p, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = SelectionMatrix::from_fn(3, 4, |_, _| rng.random());
        let dec = ContinuousDecision::new(
            Grid::from_fn(3, 4, |_, _| rng.random_range(0.01..1.0)),
            Grid::from_fn(3, 4, |_, _| rng.random_range(0.0..p.relay_power_max)),
        )
        .unwrap();
        (sc, eps, dec)
    }

    #[test]
    fn selection_switches_coefficients() {
        let (sc, _, _) = random(1);
        let p = &sc.params;
        let eps = SelectionMatrix::from_encoding(0b1, 3, 4);
        let e = energy_coefficients(&eps, &sc.channels, &sc.renewable, p);
        assert_eq!(e.zeta2[(0, 0)], 0.0);
        assert_eq!(e.theta1[(1, 0)], 0.0);
        let idle = p.offset_power * p.slot_duration + p.receive_power * p.slot_duration;
        assert!((e.theta2[(1, 0)] - idle).abs() < 1e-15);
        let none = snr_coefficients(&SelectionMatrix::none(3, 4), &sc.channels, p);
        assert!(none.delta1.iter().chain(none.delta2.iter()).all(|g| g.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn symmetric_relay_has_symmetric_delta1() {
        use num_complex::Complex64;
        let p = SystemParams::with_size(1, 1);
        let h = Grid::filled(1, 1, Complex64::new(3e-4, 0.0));
        let ch = ChannelSet::new(h.clone(), h, vec![Grid::filled(1, 1, Complex64::new(0.0, 0.0))]);
        let d = snr_coefficients(&SelectionMatrix::all(1, 1), &ch, &p);
        assert_eq!(d.delta1[0], d.delta1[1]);
    }

    proptest! {
        #[test]
        fn energy_reconstruction_matches_model(seed in any::<u64>()) {
            let (sc, eps, dec) = random(seed);
            let p = &sc.params;
            let e = energy_coefficients(&eps, &sc.channels, &sc.renewable, p);
            for l in 0..3 {
                for b in 0..4 {
                    let relays: f64 = eps.selected(b).map(|j| dec.p_r[(j, b)] * sc.channels.relay_gain(l, j, b)).sum();
                    let eh = -e.zeta1[(l, b)] * dec.beta[(l, b)] + e.zeta2[(l, b)] * relays + e.zeta3[(l, b)];
                    let ec = e.theta1[(l, b)] * dec.p_r[(l, b)] + e.theta2[(l, b)];
                    let mh = harvested_energy(l, b, &eps, &dec, &sc.channels, &sc.renewable, p);
                    let mc = consumed_energy(l, b, &eps, &dec, p);
                    prop_assert!((eh - mh).abs() <= 1e-12 * mh.abs());
                    prop_assert!((ec - mc).abs() <= 1e-12 * mc.abs());
                }
            }
        }

        #[test]
        fn delta_snr_matches_noise_neglected_model(seed in any::<u64>()) {
            let (sc, eps, dec) = random(seed);
            let p = &sc.params;
            let d = snr_coefficients(&eps, &sc.channels, p);
            let r = snr_and_rate_with(&eps, &dec, &sc.channels, p, GainModel::NoiseNeglected);
            for b in 0..4 {
                for q in 0..2 {
                    let g = d.snr(b, q, |l| dec.beta[(l, b)], |l| dec.p_r[(l, b)], p);
                    let m = r.snr[(b, q)];
                    prop_assert!((g - m).abs() <= 1e-9 * m.abs().max(1e-300));
                }
            }
        }
    }
}

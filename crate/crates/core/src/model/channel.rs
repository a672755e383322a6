//! Node placement, free-space path loss and Rician block fading.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ModelError, SystemParams};
use crate::grid::Grid;

/// A network node: one of the two terminals (0 or 1) or a relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Terminal(usize),
    Relay(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Terminal and relay positions (m). Terminals sit at the ends of a diameter
/// of the disk that contains the relays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub terminals: [Point; 2],
    pub relays: Vec<Point>,
}

impl Geometry {
    /// Terminals at `(-D/2, 0)` and `(D/2, 0)`, relays uniform over the disk of radius `D/2`.
    pub fn sample<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Geometry {
        let radius = params.distance / 2.0;
        let relays = (0..params.relays)
            .map(|_| {
                let r = radius * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                Point { x: r * theta.cos(), y: r * theta.sin() }
            })
            .collect();
        Geometry::with_relays(params.distance, relays)
    }

    pub fn with_relays(distance: f64, relays: Vec<Point>) -> Geometry {
        let half = distance / 2.0;
        Geometry { terminals: [Point { x: -half, y: 0.0 }, Point { x: half, y: 0.0 }], relays }
    }

    pub fn position(&self, node: Node) -> Point {
        match node {
            Node::Terminal(q) => self.terminals[q],
            Node::Relay(l) => self.relays[l],
        }
    }

    pub fn distance(&self, u: Node, v: Node) -> f64 {
        self.position(u).distance(&self.position(v))
    }

    /// Checks that every relay lies inside the disk spanned by the terminals.
    pub fn validate(&self) -> Result<(), ModelError> {
        let center = Point {
            x: (self.terminals[0].x + self.terminals[1].x) / 2.0,
            y: (self.terminals[0].y + self.terminals[1].y) / 2.0,
        };
        let radius = self.terminals[0].distance(&self.terminals[1]) / 2.0;
        for (l, p) in self.relays.iter().enumerate() {
            if p.distance(&center) > radius * (1.0 + 1e-12) {
                return Err(ModelError::RelayOutsideDisk { relay: l });
            }
        }
        Ok(())
    }
}

/// Free-space path loss between two nodes in dB.
pub fn path_loss(u: Node, v: Node, params: &SystemParams, geom: &Geometry) -> Result<f64, ModelError> {
    path_loss_db(geom.distance(u, v), params)
}

/// `10 nu log10(4 pi d f / c) + PL_LoS` for a distance `d` in metres.
pub fn path_loss_db(distance: f64, params: &SystemParams) -> Result<f64, ModelError> {
    if !(distance > 0.0) {
        return Err(ModelError::ZeroDistance);
    }
    let arg = 4.0 * PI * distance * params.carrier_frequency / params.speed_of_light;
    Ok(10.0 * params.path_loss_exponent * arg.log10() + params.extra_loss_db)
}

/// Channel gains for every link and slot.
///
/// `relay_relay` is stored as an `L x (L*B)` grid indexed through [`ChannelSet::relay_relay`];
/// links are reciprocal, so `h_{lj} = h_{jl}`. The diagonal is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    /// Terminal 1 to relay, `L x B`.
    pub h1r: Grid<Complex64>,
    /// Terminal 2 to relay, `L x B`.
    pub h2r: Grid<Complex64>,
    rr: Grid<Complex64>,
    slots: usize,
}

impl ChannelSet {
    pub fn new(h1r: Grid<Complex64>, h2r: Grid<Complex64>, rr: Vec<Grid<Complex64>>) -> ChannelSet {
        let (relays, slots) = h1r.shape();
        assert_eq!(h2r.shape(), (relays, slots), "h2r shape");
        assert_eq!(rr.len(), slots, "one relay-relay matrix per slot");
        let flat = Grid::from_fn(relays, relays * slots, |l, k| {
            let (b, j) = (k / relays, k % relays);
            assert_eq!(rr[b].shape(), (relays, relays));
            rr[b][(l, j)]
        });
        ChannelSet { h1r, h2r, rr: flat, slots }
    }

    pub fn relays(&self) -> usize {
        self.h1r.rows()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Complex gain between relay `l` and relay `j` in slot `b`.
    pub fn relay_relay(&self, l: usize, j: usize, b: usize) -> Complex64 {
        self.rr[(l, b * self.relays() + j)]
    }

    /// Terminal `q` (0 or 1) to relay `l` in slot `b`.
    pub fn terminal(&self, q: usize, l: usize, b: usize) -> Complex64 {
        if q == 0 {
            self.h1r[(l, b)]
        } else {
            self.h2r[(l, b)]
        }
    }

    /// `|h_{q r_l, b}|^2`.
    pub fn terminal_gain(&self, q: usize, l: usize, b: usize) -> f64 {
        self.terminal(q, l, b).norm_sqr()
    }

    /// `|h_{r_l r_j, b}|^2`.
    pub fn relay_gain(&self, l: usize, j: usize, b: usize) -> f64 {
        self.relay_relay(l, j, b).norm_sqr()
    }

    /// Received RF power at relay `l` in slot `b`: `P_1|h_1|^2 + P_2|h_2|^2`.
    pub fn received_power(&self, l: usize, b: usize, params: &SystemParams) -> f64 {
        params.source_power[0] * self.terminal_gain(0, l, b)
            + params.source_power[1] * self.terminal_gain(1, l, b)
    }
}

/// Draws a unit-mean-power Rician coefficient for a K-factor given in linear scale.
fn rician<R: Rng + ?Sized>(k_linear: f64, rng: &mut R) -> Complex64 {
    let phase = 2.0 * PI * rng.random::<f64>();
    if k_linear.is_infinite() {
        return Complex64::from_polar(1.0, phase);
    }
    let los = (k_linear / (k_linear + 1.0)).sqrt();
    let sigma = (1.0 / (2.0 * (k_linear + 1.0))).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::from_polar(los, phase) + Complex64::new(sigma * re, sigma * im)
}

/// Samples i.i.d. Rician block-fading channels, scaled by the path loss of each link.
pub fn sample_channels(params: &SystemParams, geom: &Geometry, seed: u64) -> Result<ChannelSet, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_linear = 10f64.powf(params.rician_k_db / 10.0);
    let relays = params.relays;
    let amplitude = |u: Node, v: Node| -> Result<f64, ModelError> {
        let pl = path_loss(u, v, params, geom)?;
        Ok(10f64.powf(-pl / 20.0))
    };
    let mut scale_1 = Vec::with_capacity(relays);
    let mut scale_2 = Vec::with_capacity(relays);
    for l in 0..relays {
        scale_1.push(amplitude(Node::Terminal(0), Node::Relay(l))?);
        scale_2.push(amplitude(Node::Terminal(1), Node::Relay(l))?);
    }
    let mut scale_rr = Grid::filled(relays, relays, 0.0);
    for l in 0..relays {
        for j in (l + 1)..relays {
            let a = amplitude(Node::Relay(l), Node::Relay(j))?;
            scale_rr[(l, j)] = a;
            scale_rr[(j, l)] = a;
        }
    }

    let mut h1r = Grid::filled(relays, params.slots, Complex64::new(0.0, 0.0));
    let mut h2r = h1r.clone();
    let mut rr = Vec::with_capacity(params.slots);
    for b in 0..params.slots {
        for l in 0..relays {
            h1r[(l, b)] = rician(k_linear, &mut rng) * scale_1[l];
            h2r[(l, b)] = rician(k_linear, &mut rng) * scale_2[l];
        }
        let mut slot = Grid::filled(relays, relays, Complex64::new(0.0, 0.0));
        for l in 0..relays {
            for j in (l + 1)..relays {
                let h = rician(k_linear, &mut rng) * scale_rr[(l, j)];
                slot[(l, j)] = h;
                slot[(j, l)] = h;
            }
        }
        rr.push(slot);
    }
    Ok(ChannelSet::new(h1r, h2r, rr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn path_loss_at_fifty_metres() {
        // 20 log10(4 pi 50 2.45e9 / c) evaluated by hand: 74.2099 dB.
        let pl = path_loss_db(50.0, &params()).unwrap();
        assert!((pl - 74.21).abs() < 5e-3, "{pl}");
    }

    #[test]
    fn path_loss_is_zero_at_unit_argument() {
        let p = params();
        let d = p.speed_of_light / (4.0 * PI * p.carrier_frequency);
        assert!(path_loss_db(d, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn doubling_distance_adds_six_db() {
        let p = params();
        let a = path_loss_db(30.0, &p).unwrap();
        let b = path_loss_db(60.0, &p).unwrap();
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_is_a_domain_error() {
        assert!(matches!(path_loss_db(0.0, &params()), Err(ModelError::ZeroDistance)));
        let g = Geometry::with_relays(50.0, vec![Point { x: -25.0, y: 0.0 }]);
        assert!(path_loss(Node::Terminal(0), Node::Relay(0), &params(), &g).is_err());
    }

    #[test]
    fn sampled_relays_stay_in_disk() {
        let p = SystemParams::with_size(50, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Geometry::sample(&p, &mut rng);
        g.validate().unwrap();
        let outside = Geometry::with_relays(50.0, vec![Point { x: 0.0, y: 26.0 }]);
        assert!(outside.validate().is_err());
    }

    #[test]
    fn los_limit_gives_pure_path_loss() {
        let mut p = SystemParams::with_size(3, 4);
        p.rician_k_db = f64::INFINITY;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Geometry::sample(&p, &mut rng);
        let ch = sample_channels(&p, &g, 9).unwrap();
        for l in 0..3 {
            let pl = path_loss(Node::Terminal(0), Node::Relay(l), &p, &g).unwrap();
            let expected = 10f64.powf(-pl / 10.0);
            for b in 0..4 {
                let got = ch.terminal_gain(0, l, b);
                assert!((got / expected - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_channels() {
        let p = SystemParams::with_size(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Geometry::sample(&p, &mut rng);
        assert_eq!(sample_channels(&p, &g, 42).unwrap(), sample_channels(&p, &g, 42).unwrap());
        assert_ne!(sample_channels(&p, &g, 42).unwrap(), sample_channels(&p, &g, 43).unwrap());
    }

    #[test]
    fn relay_links_are_reciprocal_with_empty_diagonal() {
        let p = SystemParams::with_size(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Geometry::sample(&p, &mut rng);
        let ch = sample_channels(&p, &g, 1).unwrap();
        for b in 0..3 {
            for l in 0..4 {
                assert_eq!(ch.relay_gain(l, l, b), 0.0);
                for j in 0..4 {
                    assert_eq!(ch.relay_relay(l, j, b), ch.relay_relay(j, l, b));
                }
            }
        }
    }

    #[test]
    fn fading_has_unit_mean_power() {
        // Monte Carlo estimate of E|h~|^2 over 1e5 draws.
        let k = 10f64.powf(0.778);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n).map(|_| rician(k, &mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }
}

use super::*;
use crate::gp::GpProblem;
use crate::grid::Grid;
use crate::model::{
    check_feasible, snr_and_rate, snr_and_rate_with, ContinuousDecision, GainModel, Scenario, SelectionMatrix,
    SystemParams, UtilityKind,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(relays: usize, slots: usize, seed: u64) -> Scenario {
    Scenario::sample(&SystemParams::with_size(relays, slots), seed).unwrap()
}

fn random_point(layout: &VarLayout, rng: &mut ChaCha8Rng, lo: f64) -> Vec<f64> {
    (0..layout.num_vars()).map(|_| rng.random_range(lo..1.0)).collect()
}

fn builder<'a>(sc: &'a Scenario, eps: &'a SelectionMatrix, kind: UtilityKind) -> SubproblemBuilder<'a> {
    SubproblemBuilder::new(eps, &sc.channels, &sc.renewable, &sc.params, BetaPolicy::Optimized, kind)
}

fn max_constraint(gp: &GpProblem, z: &[f64]) -> f64 {
    gp.constraints.iter().map(|c| c.lhs.eval(z)).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn single_entry_constraint_count() {
    let sc = scenario(1, 1, 3);
    let eps = SelectionMatrix::all(1, 1);
    let gp = build_max_sum(&eps, &sc.channels, &sc.renewable, &sc.params, &[0.5, 0.1]).unwrap();
    assert_eq!(gp.constraints.len(), 4);
    assert_eq!(gp.num_vars(), 2);
}

#[test]
fn max_min_adds_two_constraints_per_slot() {
    let sc = scenario(3, 4, 5);
    let eps = SelectionMatrix::all(3, 4);
    let dec = ContinuousDecision::uniform(3, 4, 0.5, 0.01 * sc.params.relay_power_max);
    let sum = builder(&sc, &eps, UtilityKind::MaxSum);
    let min = builder(&sc, &eps, UtilityKind::MaxMin);
    let gs = sum.max_sum(&sum.layout.encode(&dec, 1.0)).unwrap();
    let gm = min.max_min(&min.layout.encode(&dec, 1.0)).unwrap();
    assert_eq!(gm.constraints.len(), gs.constraints.len() + 2 * 4);
}

#[test]
fn silent_selection_has_unit_objective() {
    let sc = scenario(2, 3, 1);
    let eps = SelectionMatrix::none(2, 3);
    let gp = build_max_sum(&eps, &sc.channels, &sc.renewable, &sc.params, &[]).unwrap();
    assert_eq!(gp.objective_value(&[]), 1.0);
    assert_eq!(gp.num_vars(), 0);
    assert_eq!(gp.constraints.len(), 2 * 2 * 3);
}

#[test]
fn infeasible_reference_names_constraint() {
    let mut p = SystemParams::with_size(1, 2);
    p.initial_battery = vec![0.0];
    p.renewable.mean = 0.0;
    p.renewable.variance = 0.0;
    let sc = Scenario::sample(&p, 2).unwrap();
    let eps = SelectionMatrix::all(1, 2);
    let err = build_max_sum(&eps, &sc.channels, &sc.renewable, &sc.params, &[0.5, 0.5, 0.5, 0.5]).unwrap_err();
    assert!(matches!(err, crate::gp::GpError::InfeasibleStart { ref label, .. } if label == "consumed[0,0]"), "{err}");
}

#[test]
fn single_relay_rate_constraint_is_exact() {
    let sc = scenario(1, 2, 9);
    let eps = SelectionMatrix::all(1, 2);
    let b = builder(&sc, &eps, UtilityKind::MaxMin);
    let dec = ContinuousDecision::uniform(1, 2, 0.5, 0.01 * sc.params.relay_power_max);
    let gp = b.max_min(&b.layout.encode(&dec, 1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let z = random_point(&b.layout, &mut rng, 1e-3);
        let d = b.layout.decode(&z);
        let snr = b.approximate_snr(&d);
        let gamma = z[b.layout.gamma.unwrap()];
        for c in gp.constraints.iter().filter(|c| c.label.starts_with("rate")) {
            let (slot, q) = (c.label.as_bytes()[5] - b'0', c.label.as_bytes()[7] - b'0');
            let exact = gamma / snr[(slot as usize, q as usize)];
            assert!((c.lhs.eval(&z) - exact).abs() <= 1e-9 * exact);
        }
    }
}

#[test]
fn max_min_reference_gamma_is_binding() {
    let sc = scenario(3, 2, 13);
    let eps = SelectionMatrix::from_encoding(0b101011, 3, 2);
    let b = builder(&sc, &eps, UtilityKind::MaxMin);
    let dec = ContinuousDecision::uniform(3, 2, 0.7, 0.05 * sc.params.relay_power_max);
    let dec = ContinuousDecision::new(
        Grid::from_fn(3, 2, |l, t| if eps.get(l, t) { dec.beta[(l, t)] } else { 0.0 }),
        Grid::from_fn(3, 2, |l, t| if eps.get(l, t) { dec.p_r[(l, t)] } else { 0.0 }),
    )
    .unwrap();
    let gmin = b.approximate_snr(&dec).iter().copied().fold(f64::INFINITY, f64::min);
    let z = b.layout.encode(&dec, gmin);
    let gp = b.max_min(&z).unwrap();
    let worst = gp
        .constraints
        .iter()
        .filter(|c| c.label.starts_with("rate"))
        .map(|c| c.lhs.eval(&z))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((worst - 1.0).abs() < 1e-9);
}

#[test]
fn all_silent_scores_zero() {
    let sc = scenario(2, 2, 4);
    let eps = SelectionMatrix::none(2, 2);
    for kind in [UtilityKind::MaxSum, UtilityKind::MaxMin] {
        let e = Evaluator::new(&sc, kind).evaluate(&eps).unwrap();
        assert_eq!(e.utility, 0.0);
        assert_eq!(e.gp_solves, 0);
    }
}

#[test]
fn true_utility_reports_violation() {
    let sc = scenario(1, 1, 4);
    let eps = SelectionMatrix::all(1, 1);
    let dec = ContinuousDecision::uniform(1, 1, 0.5, 2.0 * sc.params.relay_power_max);
    let t = true_utility(&eps, &dec, &sc.channels, &sc.renewable, &sc.params, UtilityKind::MaxSum);
    assert!(!t.verdict.is_feasible());
    assert!(t.utility > 0.0);
}

#[test]
fn max_sum_utility_is_total_rate() {
    let sc = scenario(3, 4, 21);
    let eps = SelectionMatrix::from_encoding(0b1001_0110_0011, 3, 4);
    let e = Evaluator::new(&sc, UtilityKind::MaxSum).evaluate(&eps).unwrap();
    assert!(e.verdict.is_feasible());
    let r = snr_and_rate(&eps, &e.decision, &sc.channels, &sc.params);
    let total: f64 = r.rate.iter().sum();
    assert!((e.utility - total).abs() <= 1e-12 * total);
}

#[test]
fn fixed_beta_is_respected() {
    let sc = scenario(2, 3, 8);
    let eps = SelectionMatrix::all(2, 3);
    let mut ev = Evaluator::new(&sc, UtilityKind::MaxSum);
    ev.beta = BetaPolicy::Fixed(0.5);
    let e = ev.evaluate(&eps).unwrap();
    assert!(e.decision.beta.iter().all(|&v| v == 0.5));
}

#[test]
fn sca_improves_on_initial_point() {
    for seed in 0..5 {
        let sc = scenario(2, 2, seed);
        let eps = SelectionMatrix::from_encoding(0b1011, 2, 2);
        for kind in [UtilityKind::MaxSum, UtilityKind::MaxMin] {
            let ev = Evaluator::new(&sc, kind);
            let b = ev.builder(&eps);
            let start = initial_decision(&b, kind).unwrap();
            let init = true_utility(&eps, &start, &sc.channels, &sc.renewable, &sc.params, kind);
            let e = ev.evaluate(&eps).unwrap();
            assert!(!e.sca_failed);
            assert!(e.utility >= init.utility - 1e-9, "{kind:?} {} < {}", e.utility, init.utility);
            assert!(e.verdict.is_feasible());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn max_sum_objective_tight_at_reference(seed in any::<u64>(), code in 1u64..(1 << 6)) {
        let sc = scenario(3, 2, seed);
        let eps = SelectionMatrix::from_encoding(code, 3, 2);
        let b = builder(&sc, &eps, UtilityKind::MaxSum);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_point(&b.layout, &mut rng, 1e-4);
        let dec = b.layout.decode(&z);
        let scale = 1e-6;
        let z = b.layout.encode(&ContinuousDecision::new(dec.beta.clone(), dec.p_r.map(|v| v * scale)).unwrap(), 1.0);
        let dec = b.layout.decode(&z);
        let gp = match b.max_sum(&z) {
            Ok(gp) => gp,
            Err(_) => return Ok(()),
        };
        let r = snr_and_rate_with(&eps, &dec, &sc.channels, &sc.params, GainModel::NoiseNeglected);
        let expected: f64 = (0..2)
            .filter(|&t| !eps.slot_is_silent(t))
            .flat_map(|t| [0, 1].map(|q| 1.0 / (1.0 + r.snr[(t, q)])))
            .product();
        let got = gp.objective_value(&z);
        prop_assert!((got - expected).abs() <= 1e-9 * expected, "{got} vs {expected}");
    }

    #[test]
    fn condensed_constraints_are_tight_and_conservative(seed in any::<u64>(), code in 1u64..(1 << 6)) {
        let sc = scenario(3, 2, seed);
        let eps = SelectionMatrix::from_encoding(code, 3, 2);
        for kind in [UtilityKind::MaxSum, UtilityKind::MaxMin] {
            let b = builder(&sc, &eps, kind);
            let Some(start) = initial_decision(&b, kind) else { continue };
            if kind == UtilityKind::MaxMin && eps.any_silent_slot() {
                continue;
            }
            let snr = b.approximate_snr(&start);
            let z_ref = b.layout.encode(&start, 0.5 * snr.iter().copied().fold(f64::INFINITY, f64::min));
            let at_ref = b.build(kind, &z_ref).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
            for _ in 0..10 {
                let z: Vec<f64> = z_ref.iter().map(|&v| v * rng.random_range(0.2..3.0)).collect();
                let Ok(at_z) = b.build(kind, &z) else {
                    // z itself violates a true constraint, so the condensed one must too.
                    prop_assert!(max_constraint(&at_ref, &z) > 1.0 - 1e-9);
                    continue;
                };
                for (c, exact) in at_ref.constraints.iter().zip(&at_z.constraints) {
                    prop_assert_eq!(&c.label, &exact.label);
                    let (approx, truth) = (c.lhs.eval(&z), exact.lhs.eval(&z));
                    prop_assert!(approx >= truth * (1.0 - 1e-12), "{}: {approx} < {truth}", c.label);
                }
                if max_constraint(&at_ref, &z) <= 1.0 {
                    let dec = b.layout.decode(&z);
                    prop_assert!(check_feasible(&eps, &dec, &sc.channels, &sc.renewable, &sc.params).is_feasible());
                }
            }
        }
    }
}

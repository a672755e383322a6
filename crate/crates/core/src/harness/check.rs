//! Quick self-check suite behind the `check` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gp::{condense, to_convex_form, GpProblem, Monomial, Posynomial};
use crate::grid::Grid;
use crate::model::{
    check_feasible, dbm_to_watts, roll_ledger, watts_to_dbm, ContinuousDecision, Scenario, SelectionMatrix,
    SystemParams, UtilityKind,
};
use crate::selection::{bb_optimize, bpso_optimize, exhaustive_optimize, BbSettings, BpsoSettings};
use crate::subproblem::Evaluator;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, failures: usize, total: usize) -> CheckOutcome {
    CheckOutcome { name, passed: failures == 0, detail: format!("{failures} of {total} cases failed") }
}

fn random_posynomial(rng: &mut ChaCha8Rng, vars: usize) -> Posynomial {
    let terms = rng.random_range(1..=5);
    let monos = (0..terms)
        .map(|_| {
            let exps: Vec<(usize, f64)> = (0..vars).map(|i| (i, rng.random_range(-2.0..2.0))).collect();
            Monomial::new(rng.random_range(0.1..10.0), exps)
        })
        .collect();
    Posynomial::from_terms(monos).expect("positive coefficients")
}

fn dbm_round_trip(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let n = 1000;
    let bad = (0..n)
        .filter(|_| {
            let dbm = rng.random_range(-150.0..50.0);
            let w = dbm_to_watts(dbm);
            let back = dbm_to_watts(watts_to_dbm(w));
            (back - w).abs() > 1e-12 * w
        })
        .count();
    outcome("dBm and watt conversions invert each other", bad, n)
}

fn condensation_bound(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let n = 200;
    let mut bad = 0;
    for _ in 0..n {
        let g = random_posynomial(rng, 3);
        let z0: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..10.0)).collect();
        let m = condense(&g, &z0).expect("positive posynomial");
        let tight = (m.eval(&z0) - g.eval(&z0)).abs() <= 1e-9 * g.eval(&z0);
        let below = (0..20).all(|_| {
            let z: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..100.0)).collect();
            m.eval(&z) <= g.eval(&z) * (1.0 + 1e-12)
        });
        bad += usize::from(!(tight && below));
    }
    outcome("condensed monomial is a tight lower bound", bad, n)
}

fn convex_gradient(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let n = 50;
    let mut bad = 0;
    for _ in 0..n {
        let mut gp = GpProblem::new(vec!["a".into(), "b".into(), "c".into()]);
        gp.minimize(random_posynomial(rng, 3));
        let cp = to_convex_form(&gp).expect("valid program");
        let t: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = cp.objective_gradient(&t);
        for i in 0..3 {
            let h = 1e-5;
            let (mut up, mut dn) = (t.clone(), t.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (cp.objective_value(&up) - cp.objective_value(&dn)) / (2.0 * h);
            if (fd - g[i]).abs() > 1e-6 * g[i].abs().max(1.0) {
                bad += 1;
                break;
            }
        }
    }
    outcome("log-space gradients match finite differences", bad, n)
}

fn energy_ledger(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let n = 2000;
    let mut bad = 0;
    let mut checked = 0;
    let p = SystemParams::with_size(3, 4);
    let sc = Scenario::sample(&p, rng.random()).expect("default scenario");
    for _ in 0..n {
        let eps = SelectionMatrix::from_fn(3, 4, |_, _| rng.random_bool(0.5));
        let dec = ContinuousDecision {
            beta: Grid::from_fn(3, 4, |_, _| rng.random_range(0.0..=1.0)),
            p_r: Grid::from_fn(3, 4, |_, _| rng.random_range(0.0..=p.relay_power_max)),
        };
        if !check_feasible(&eps, &dec, &sc.channels, &sc.renewable, &p).is_feasible() {
            continue;
        }
        checked += 1;
        let ledger = roll_ledger(&eps, &dec, &sc.channels, &sc.renewable, &p);
        for l in 0..3 {
            let net: f64 = (0..4).map(|b| ledger.harvested[(l, b)] - ledger.consumed[(l, b)] - p.leakage).sum();
            let end = ledger.stored[(l, 4)];
            let telescoped = (end - ledger.stored[(l, 0)] - net).abs() <= 1e-12 * end.abs().max(1.0);
            let in_range = (0..=4).all(|b| {
                let s = ledger.stored[(l, b)];
                s >= -1e-9 && s <= p.storage_capacity + 1e-9
            });
            if !(telescoped && in_range) {
                bad += 1;
                break;
            }
        }
    }
    outcome("battery stays within capacity and telescopes", bad, checked)
}

fn searches_agree(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let n = 4;
    let mut bad = 0;
    for _ in 0..n {
        let sc = Scenario::sample(&SystemParams::with_size(2, 2), rng.random()).expect("scenario");
        for kind in [UtilityKind::MaxSum, UtilityKind::MaxMin] {
            let ev = Evaluator::new(&sc, kind);
            let (Ok(ex), Ok(bb)) = (exhaustive_optimize(&ev), bb_optimize(&ev, &BbSettings::default())) else {
                bad += 1;
                continue;
            };
            let s = BpsoSettings { seed: rng.random(), ..BpsoSettings::default() };
            let (a, b) = (bpso_optimize(&ev, &s), bpso_optimize(&ev, &s));
            let same = matches!((&a, &b), (Ok(a), Ok(b)) if a.trace == b.trace);
            let tol = 1e-6 * ex.best.utility.abs();
            let dominated = a.map(|a| a.best.utility <= ex.best.utility + tol).unwrap_or(false);
            if (bb.best.utility - ex.best.utility).abs() > tol || !same || !dominated {
                bad += 1;
            }
        }
    }
    outcome("branch and bound matches enumeration; swarm is reproducible", bad, 2 * n)
}

/// Runs every check with randomness derived from `seed`.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        dbm_round_trip(&mut rng),
        condensation_bound(&mut rng),
        convex_gradient(&mut rng),
        energy_ledger(&mut rng),
        searches_agree(&mut rng),
    ]
}

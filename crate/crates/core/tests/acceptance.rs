//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Criteria 7 to 11 use 3 relays and 4 slots so the single-core runtime stays
//! within budget; all other system parameters are the defaults.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twr_harvest::gp::{
    condense, run_sca, solve_convex, to_convex_form, GpProblem, Monomial, Posynomial, ScaSettings, SolverOptions,
};
use twr_harvest::grid::Grid;
use twr_harvest::harness::{run_experiment, ExperimentConfig, ExperimentResult};
use twr_harvest::model::{
    check_feasible, roll_ledger, ContinuousDecision, Scenario, SelectionMatrix, SystemParams, UtilityKind,
};
use twr_harvest::selection::{bb_optimize, bpso_optimize, exhaustive_optimize, BbSettings, BpsoSettings};
use twr_harvest::subproblem::{initial_decision, Evaluator};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn random_posynomial(rng: &mut ChaCha8Rng, vars: usize) -> Posynomial {
    let terms = rng.random_range(1..=6);
    let monos = (0..terms)
        .map(|_| {
            let anchor = rng.random_range(0..vars);
            let mut exps = Vec::new();
            for i in 0..vars {
                if i == anchor || rng.random_bool(0.8) {
                    exps.push((i, rng.random_range(-3.0..3.0)));
                }
            }
            Monomial::new(rng.random_range(0.05..20.0), exps)
        })
        .collect();
    Posynomial::from_terms(monos).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo.ln()..hi.ln()).exp()).collect()
}

fn condensation_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_tight, mut violations) = (0.0f64, 0);
    for _ in 0..1000 {
        let n = rng.random_range(1..=4);
        let g = random_posynomial(&mut rng, n);
        let z0 = random_point(&mut rng, n, 0.05, 20.0);
        let m = condense(&g, &z0).unwrap();
        worst_tight = worst_tight.max(rel(m.eval(&z0), g.eval(&z0)));
        for _ in 0..50 {
            let z = random_point(&mut rng, n, 1e-3, 1e3);
            if m.eval(&z) > g.eval(&z) * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0 && worst_tight <= 1e-9,
        format!("{violations} bound violations in 50000 probes, worst gap at z0 {worst_tight:.2e}"),
    )
}

fn random_gp(rng: &mut ChaCha8Rng, n: usize) -> GpProblem {
    let mut gp = GpProblem::new((0..n).map(|i| format!("z{i}")).collect());
    gp.minimize(random_posynomial(rng, n));
    for k in 0..rng.random_range(1..=3) {
        gp.subject_to(format!("c{k}"), random_posynomial(rng, n));
    }
    gp
}

fn convex_fidelity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_value, mut worst_grad) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let gp = random_gp(&mut rng, n);
        let cp = to_convex_form(&gp).unwrap();
        let z = random_point(&mut rng, n, 0.1, 10.0);
        let t: Vec<f64> = z.iter().map(|v| v.ln()).collect();
        worst_value = worst_value.max(rel(cp.objective_value(&t).exp(), gp.objective_value(&z)));
        let labels: Vec<&str> = cp.constraints.iter().map(|(l, _)| l.as_str()).collect();
        for (label, v) in labels.iter().zip(cp.constraint_values(&t)) {
            let lhs = gp.constraints.iter().find(|c| c.label == *label).unwrap().lhs.eval(&z);
            worst_value = worst_value.max(rel(v.exp(), lhs));
        }
        let g = cp.objective_gradient(&t);
        for i in 0..n {
            let h = 1e-5 * t[i].abs().max(1.0);
            let (mut up, mut dn) = (t.clone(), t.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (cp.objective_value(&up) - cp.objective_value(&dn)) / (2.0 * h);
            worst_grad = worst_grad.max((fd - g[i]).abs() / g[i].abs().max(1.0));
        }
    }
    verdict(
        worst_value <= 1e-12 && worst_grad <= 1e-6,
        format!("worst value mismatch {worst_value:.2e}, worst gradient mismatch {worst_grad:.2e}"),
    )
}

fn solver_optima() -> Verdict {
    let opts = SolverOptions::default();
    let mut errors = Vec::new();

    let mut a = GpProblem::new(vec!["z".into()]);
    a.minimize(Monomial::new(1.0, [(0, -1.0)]).into());
    a.subject_to("cap", Monomial::new(0.25, [(0, 1.0)]).into());
    let s = solve_convex(&to_convex_form(&a).unwrap(), &[1.0], &opts).unwrap();
    errors.push((s.z[0] - 4.0).abs().max((s.objective() - 0.25).abs()));

    let mut b = GpProblem::new(vec!["z".into()]);
    b.minimize(Posynomial::from_terms(vec![Monomial::new(1.0, [(0, 1.0)]), Monomial::new(1.0, [(0, -1.0)])]).unwrap());
    let s = solve_convex(&to_convex_form(&b).unwrap(), &[3.0], &opts).unwrap();
    errors.push((s.z[0] - 1.0).abs().max((s.objective() - 2.0).abs()));

    let mut c = GpProblem::new(vec!["z1".into(), "z2".into()]);
    c.minimize(Monomial::new(1.0, [(0, 1.0), (1, 1.0)]).into());
    c.subject_to("product", Monomial::new(1.0, [(0, -1.0), (1, -1.0)]).into());
    let s = solve_convex(&to_convex_form(&c).unwrap(), &[2.0, 3.0], &opts).unwrap();
    errors.push((s.objective() - 1.0).abs());

    let worst = errors.iter().copied().fold(0.0, f64::max);
    verdict(worst <= 1e-6, format!("worst error {worst:.2e} over 3 programs"))
}

fn sca_contract() -> Verdict {
    let params = SystemParams::with_size(2, 2);
    let settings = ScaSettings::default();
    let (mut rises, mut infeasible, mut iterates, mut runs) = (0, 0, 0, 0);
    let mut worst_rise = 0.0f64;
    for seed in 0..50u64 {
        let sc = Scenario::sample(&params, 4000 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for kind in [UtilityKind::MaxSum, UtilityKind::MaxMin] {
            let ev = Evaluator::new(&sc, kind);
            let mut chosen = None;
            for attempt in 0..64 {
                let eps = if attempt == 0 {
                    SelectionMatrix::all(2, 2)
                } else {
                    SelectionMatrix::from_fn(2, 2, |_, _| rng.random_bool(0.6))
                };
                if eps.count() == 0 || (kind == UtilityKind::MaxMin && eps.any_silent_slot()) {
                    continue;
                }
                let builder = ev.builder(&eps);
                if let Some(start) = initial_decision(&builder, kind) {
                    chosen = Some((eps, start));
                    break;
                }
            }
            let Some((eps, start)) = chosen else { continue };
            let builder = ev.builder(&eps);
            let snr = builder.approximate_snr(&start);
            let gamma = 0.99 * snr.iter().copied().fold(f64::INFINITY, f64::min);
            let z0 = builder.layout.encode(&start, gamma);
            let out = run_sca(|z| builder.build(kind, z), &z0, &settings).unwrap();
            runs += 1;
            for w in out.trace.windows(2) {
                worst_rise = worst_rise.max(w[1] - w[0]);
                if w[1] > w[0] + 1e-7 {
                    rises += 1;
                }
            }
            for z in &out.iterates {
                iterates += 1;
                let dec = builder.layout.decode(z);
                if !check_feasible(&eps, &dec, &sc.channels, &sc.renewable, &sc.params).is_feasible() {
                    infeasible += 1;
                }
            }
        }
    }
    verdict(
        rises == 0 && infeasible == 0 && runs >= 50,
        format!(
            "{runs} SCA runs, {rises} objective increases (worst {worst_rise:.2e}), {infeasible} of {iterates} iterates infeasible"
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let params = SystemParams::with_size(2, 2);
    let mut lines = Vec::new();
    let mut passed = true;
    for kind in [UtilityKind::MaxSum, UtilityKind::MaxMin] {
        let (mut bb_bad, mut near, mut total) = (0, 0, 0);
        for seed in 0..50u64 {
            let sc = Scenario::sample(&params, 5000 + seed).unwrap();
            let ev = Evaluator::new(&sc, kind);
            let Ok(ex) = exhaustive_optimize(&ev) else { continue };
            total += 1;
            let bb = bb_optimize(&ev, &BbSettings::default()).unwrap();
            if rel(bb.best.utility, ex.best.utility) > 1e-6 {
                bb_bad += 1;
            }
            let pso = bpso_optimize(&ev, &BpsoSettings { seed, ..BpsoSettings::default() }).unwrap();
            if pso.best.utility >= 0.95 * ex.best.utility {
                near += 1;
            }
        }
        let ok = total == 50 && bb_bad == 0 && near * 10 >= total * 9;
        passed &= ok;
        lines.push(format!("{}: bb mismatches {bb_bad}/{total}, bpso within 95% {near}/{total}", kind.name()));
    }
    verdict(passed, lines.join("; "))
}

fn utility_ordering() -> Verdict {
    let params = SystemParams::with_size(3, 4);
    let (mut sum_bad, mut fair, mut total) = (0, 0, 0);
    for seed in 0..50u64 {
        let sc = Scenario::sample(&params, 6000 + seed).unwrap();
        let settings = BpsoSettings { seed, ..BpsoSettings::default() };
        let s = bpso_optimize(&Evaluator::new(&sc, UtilityKind::MaxSum), &settings);
        let m = bpso_optimize(&Evaluator::new(&sc, UtilityKind::MaxMin), &settings);
        let (Ok(s), Ok(m)) = (s, m) else { continue };
        total += 1;
        let (ss, ms) = (s.best.rates.sum_rate(), m.best.rates.sum_rate());
        if ss < ms - 1e-6 * ms.abs() {
            sum_bad += 1;
        }
        if m.best.rates.min_rate() >= s.best.rates.min_rate() {
            fair += 1;
        }
    }
    verdict(
        total == 50 && sum_bad == 0 && fair * 10 >= total * 9,
        format!("sum rate order violated {sum_bad}/{total}, max-min has the larger minimum in {fair}/{total}"),
    )
}

fn experiment(extra: &str) -> ExperimentResult {
    let cfg = ExperimentConfig::parse(&format!(
        "system.relays = 3\nsystem.slots = 4\nexperiment.trials = 100\nexperiment.seed = 2024\n{extra}"
    ))
    .unwrap();
    run_experiment(&cfg).unwrap()
}

fn means(r: &ExperimentResult) -> String {
    r.summary.iter().map(|g| format!("{:.3}", g.utility.mean)).collect::<Vec<_>>().join(" ")
}

fn source_power_trend() -> Verdict {
    let r = experiment("experiment.sweep = ps_dbm\nexperiment.sweep_values = -10, 0, 10");
    let u: Vec<_> = r.summary.iter().map(|g| &g.utility).collect();
    let nondecreasing = u.windows(2).all(|w| w[1].mean >= w[0].mean);
    let separated = u[1].mean - u[0].mean >= u[0].stderr.max(u[1].stderr);
    verdict(nondecreasing && separated, format!("mean utility {} Mbps", means(&r)))
}

fn distance_trend() -> Verdict {
    let r = experiment("experiment.sweep = distance_m\nexperiment.sweep_values = 25, 50, 100, 200");
    let decreasing = r.summary.windows(2).all(|w| w[1].utility.mean < w[0].utility.mean);
    let (near, far) = (r.summary[0].rf_harvest_j.mean, r.summary[3].rf_harvest_j.mean);
    verdict(
        decreasing && far <= 0.1 * near,
        format!("mean utility {} Mbps, RF harvest {near:.3e} J at 25 m and {far:.3e} J at 200 m", means(&r)),
    )
}

fn splitting_trend() -> Verdict {
    let at = "experiment.sweep = distance_m\nexperiment.sweep_values = 100";
    let opt = experiment(at).summary[0].utility.mean;
    let half = experiment(&format!("{at}\nexperiment.beta = fixed:0.5")).summary[0].utility.mean;
    let one = experiment(&format!("{at}\nexperiment.beta = fixed:1")).summary[0].utility.mean;
    verdict(
        opt > half && rel(one, opt) <= 0.03,
        format!("optimized {opt:.3}, fixed 0.5 {half:.3}, fixed 1 {one:.3} Mbps"),
    )
}

fn energy_ledger() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut feasible, mut drawn, mut bad_range, mut worst_tel) = (0usize, 0usize, 0usize, 0.0f64);
    let mut sc = None;
    while feasible < 100_000 {
        if drawn % 1000 == 0 {
            let (l, b) = (rng.random_range(1..=4), rng.random_range(1..=8));
            let mut params = SystemParams::with_size(l, b);
            for e in params.initial_battery.iter_mut() {
                *e = rng.random_range(0.0..=params.storage_capacity);
            }
            sc = Some(Scenario::sample(&params, rng.random()).unwrap());
        }
        drawn += 1;
        let sc = sc.as_ref().unwrap();
        let p = &sc.params;
        let scale = rng.random_range(0.0..1.0f64).powi(2);
        let eps = SelectionMatrix::from_fn(p.relays, p.slots, |_, _| rng.random_bool(0.5));
        let dec = ContinuousDecision {
            beta: Grid::from_fn(p.relays, p.slots, |_, _| rng.random_range(0.0..=1.0)),
            p_r: Grid::from_fn(p.relays, p.slots, |_, _| scale * rng.random_range(0.0..=p.relay_power_max)),
        };
        if !check_feasible(&eps, &dec, &sc.channels, &sc.renewable, p).is_feasible() {
            continue;
        }
        feasible += 1;
        let ledger = roll_ledger(&eps, &dec, &sc.channels, &sc.renewable, p);
        for l in 0..p.relays {
            if (0..=p.slots).any(|b| !(0.0..=p.storage_capacity).contains(&ledger.stored[(l, b)])) {
                bad_range += 1;
            }
            let flow: f64 = (0..p.slots).map(|b| ledger.harvested[(l, b)] - ledger.consumed[(l, b)] - p.leakage).sum();
            let end = ledger.stored[(l, p.slots)];
            let scale = end.abs().max(ledger.stored[(l, 0)].abs()).max(flow.abs());
            worst_tel = worst_tel.max((end - ledger.stored[(l, 0)] - flow).abs() / scale);
        }
    }
    verdict(
        bad_range == 0 && worst_tel <= 1e-12,
        format!("{feasible} feasible of {drawn} drawn, {bad_range} out of range, worst telescoping error {worst_tel:.2e}"),
    )
}

fn bpso_convergence() -> Verdict {
    let params = SystemParams::with_size(3, 4);
    let mut lines = Vec::new();
    let mut passed = true;
    for kind in [UtilityKind::MaxSum, UtilityKind::MaxMin] {
        let (mut early, mut total) = (0, 0);
        let mut reached = Vec::new();
        for seed in 0..50u64 {
            let sc = Scenario::sample(&params, 7000 + seed).unwrap();
            let settings = BpsoSettings { seed, ..BpsoSettings::default() };
            let Ok(r) = bpso_optimize(&Evaluator::new(&sc, kind), &settings) else { continue };
            total += 1;
            let last = *r.trace.last().unwrap();
            let at = r.trace.iter().position(|&u| u == last).unwrap();
            reached.push(at);
            if at <= 30 {
                early += 1;
            }
        }
        reached.sort_unstable();
        let median = reached.get(reached.len() / 2).copied().unwrap_or(0);
        passed &= total == 50 && early * 10 >= total * 8;
        lines.push(format!("{}: final value by iteration 30 in {early}/{total}, median {median}", kind.name()));
    }
    verdict(passed, lines.join("; "))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Verdict, Duration);
    let criteria: [Criterion; 11] = [
        ("condensation bound", condensation_bound, Duration::from_secs(10)),
        ("convexification fidelity", convex_fidelity, Duration::from_secs(10)),
        ("solver unit optima", solver_optima, Duration::from_secs(1)),
        ("SCA contract", sca_contract, Duration::from_secs(120)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(900)),
        ("utility ordering", utility_ordering, Duration::from_secs(1800)),
        ("source power trend", source_power_trend, Duration::from_secs(1800)),
        ("distance trend", distance_trend, Duration::from_secs(1800)),
        ("splitting ratio trend", splitting_trend, Duration::from_secs(1800)),
        ("energy ledger invariants", energy_ledger, Duration::from_secs(60)),
        ("BPSO convergence", bpso_convergence, Duration::from_secs(1800)),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let ok = v.passed && took <= *limit;
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {name}: {} [{:.1} s, limit {} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

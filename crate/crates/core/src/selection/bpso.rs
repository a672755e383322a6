use super::{Memo, SearchResult, SelectionError};
use crate::grid::Grid;
use crate::model::SelectionMatrix;
use crate::subproblem::Evaluator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct BpsoSettings {
    pub particles: usize,
    pub iterations: usize,
    pub inertia_start: f64,
    pub inertia_end: f64,
    pub velocity_clamp: f64,
    /// Stop after this many iterations without a better global best.
    pub stall_window: usize,
    pub seed: u64,
}

impl Default for BpsoSettings {
    fn default() -> Self {
        BpsoSettings {
            particles: 10,
            iterations: 100,
            inertia_start: 0.9,
            inertia_end: 0.2,
            velocity_clamp: 6.0,
            stall_window: 15,
            seed: 0,
        }
    }
}

impl BpsoSettings {
    pub fn inertia(&self, i: usize) -> f64 {
        self.inertia_start - i as f64 * (self.inertia_start - self.inertia_end) / self.iterations as f64
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn bit(eps: &SelectionMatrix, l: usize, b: usize) -> f64 {
    if eps.get(l, b) {
        1.0
    } else {
        0.0
    }
}

struct Particle {
    position: SelectionMatrix,
    velocity: Grid<f64>,
    best: SelectionMatrix,
    best_utility: f64,
}

/// Binary particle swarm over selection matrices.
///
/// The swarm holds an all-ones and an all-zeros particle plus random ones.
/// Infeasible particles score negative infinity and keep moving.
pub fn bpso_optimize(evaluator: &Evaluator<'_>, settings: &BpsoSettings) -> Result<SearchResult, SelectionError> {
    let p = &evaluator.scenario.params;
    let (relays, slots) = (p.relays, p.slots);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut memo = Memo::new(evaluator);

    let count = settings.particles.max(1);
    let mut positions = vec![SelectionMatrix::all(relays, slots), SelectionMatrix::none(relays, slots)];
    while positions.len() < count {
        positions.push(SelectionMatrix::from_fn(relays, slots, |_, _| rng.random_bool(0.5)));
    }
    // The all-zeros fallback is always scored, even for a single particle.
    memo.fill(&positions);
    positions.truncate(count);

    let mut swarm: Vec<Particle> = positions
        .into_iter()
        .map(|position| {
            let u = memo.score(&position);
            Particle { best: position.clone(), position, velocity: Grid::filled(relays, slots, 0.0), best_utility: u }
        })
        .collect();
    let zero = SelectionMatrix::none(relays, slots);
    let mut global = zero.clone();
    let mut global_utility = memo.score(&zero);
    for part in &swarm {
        if part.best_utility > global_utility {
            global_utility = part.best_utility;
            global = part.best.clone();
        }
    }

    let mut trace = vec![global_utility];
    let mut stall = 0;
    let mut iterations = 0;
    for i in 1..=settings.iterations {
        iterations = i;
        let omega = settings.inertia(i);
        let psi1 = rng.random_range(0.0..=2.0);
        let psi2 = rng.random_range(0.0..=2.0);
        let vmax = settings.velocity_clamp;
        for part in swarm.iter_mut() {
            let mut next = part.position.clone();
            for l in 0..relays {
                for b in 0..slots {
                    let x = bit(&part.position, l, b);
                    let v = omega * part.velocity[(l, b)]
                        + psi1 * (bit(&part.best, l, b) - x)
                        + psi2 * (bit(&global, l, b) - x);
                    let v = v.clamp(-vmax, vmax);
                    part.velocity[(l, b)] = v;
                    next.set(l, b, rng.random::<f64>() < sigmoid(v));
                }
            }
            part.position = next;
        }
        let batch: Vec<SelectionMatrix> = swarm.iter().map(|s| s.position.clone()).collect();
        memo.fill(&batch);

        let before = global_utility;
        for part in swarm.iter_mut() {
            let u = memo.score(&part.position);
            if u > part.best_utility {
                part.best_utility = u;
                part.best = part.position.clone();
            }
            if u > global_utility {
                global_utility = u;
                global = part.position.clone();
            }
        }
        trace.push(global_utility);
        stall = if global_utility > before { 0 } else { stall + 1 };
        if stall >= settings.stall_window {
            break;
        }
    }

    if global_utility == f64::NEG_INFINITY {
        return Err(SelectionError::AllInfeasible);
    }
    Ok(SearchResult {
        best: memo.get(&global).cloned().expect("scored"),
        trace,
        evaluations: memo.len(),
        iterations,
        nodes: 0,
        gp_solves: memo.gp_solves,
    })
}

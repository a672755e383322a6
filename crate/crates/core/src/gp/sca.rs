//! Successive convex approximation: condense at the current point, solve, repeat.

use super::{solve_convex, to_convex_form, GpError, GpProblem, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct ScaSettings {
    /// Stop once the log-objective changes by at most this much.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub solver: SolverOptions,
}

impl Default for ScaSettings {
    fn default() -> Self {
        ScaSettings { tolerance: 1e-4, max_iterations: 30, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaOutcome {
    pub point: Vec<f64>,
    /// Log-objective of the problem built at each accepted point, starting with the initial one.
    pub trace: Vec<f64>,
    /// Accepted points, starting with the initial one.
    pub iterates: Vec<Vec<f64>>,
    pub converged: bool,
    /// Number of convex solves performed.
    pub gp_solves: usize,
    pub inner_iterations: usize,
}

/// Slack on `lhs <= 1` accepted when checking a reference point.
const START_TOL: f64 = 1e-9;

/// Runs SCA from `initial`.
///
/// `build(z)` must return the approximated program condensed at `z`; its
/// objective and constraints are tight at `z`. A solve that fails or does not
/// improve the surrogate leaves the point unchanged and ends the loop, so the
/// trace never increases.
pub fn run_sca<F>(mut build: F, initial: &[f64], settings: &ScaSettings) -> Result<ScaOutcome, GpError>
where
    F: FnMut(&[f64]) -> Result<GpProblem, GpError>,
{
    if let Some((i, &v)) = initial.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(GpError::NonPositive { var: i, value: v });
    }
    let mut z = initial.to_vec();
    let mut gp = build(&z)?;
    if gp.num_vars() != z.len() {
        return Err(GpError::MissingVariable(z.len().min(gp.num_vars())));
    }
    for c in &gp.constraints {
        let v = c.lhs.eval(&z);
        if !(v <= 1.0 + START_TOL) {
            return Err(GpError::InfeasibleStart { label: c.label.clone(), value: v });
        }
    }
    let mut u = gp.log_objective(&z);
    let mut outcome = ScaOutcome {
        point: z.clone(),
        trace: vec![u],
        iterates: vec![z.clone()],
        converged: false,
        gp_solves: 0,
        inner_iterations: 0,
    };
    if settings.tolerance.is_infinite() {
        outcome.converged = true;
        return Ok(outcome);
    }
    for _ in 0..settings.max_iterations {
        let convex = to_convex_form(&gp)?;
        let solved = solve_convex(&convex, &z, &settings.solver);
        outcome.gp_solves += 1;
        let Ok(sol) = solved else {
            break;
        };
        outcome.inner_iterations += sol.iterations;
        let feasible = gp.constraints.iter().all(|c| c.lhs.eval(&sol.z) <= 1.0 + START_TOL);
        if !feasible || !(gp.log_objective(&sol.z) <= u) {
            outcome.converged = true;
            break;
        }
        let next = build(&sol.z)?;
        let u_next = next.log_objective(&sol.z);
        let unchanged = next == gp;
        z = sol.z;
        outcome.trace.push(u_next);
        outcome.iterates.push(z.clone());
        outcome.point = z.clone();
        let delta = (u_next - u).abs();
        u = u_next;
        gp = next;
        if unchanged || delta <= settings.tolerance {
            outcome.converged = true;
            break;
        }
    }
    Ok(outcome)
}

//! Primal-dual interior-point solver for the log-space convex form.

use nalgebra::{DMatrix, DVector};

use super::{ConvexProblem, GpError};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Bound on the primal residual norm; the dual bound is scaled by `1 + |grad f0|`.
    pub feasibility_tol: f64,
    /// Bound on the surrogate duality gap.
    pub gap_tol: f64,
    /// Barrier growth factor.
    pub mu: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iterations: 100, feasibility_tol: 1e-8, gap_tol: 1e-9, mu: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    /// Infinity norm of the Lagrangian gradient.
    pub stationarity: f64,
    /// Largest `|lambda_i f_i|`.
    pub complementarity: f64,
    /// Largest equality residual or constraint excess.
    pub primal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Log-space point.
    pub t: Vec<f64>,
    /// `exp(t)`.
    pub z: Vec<f64>,
    /// `log f_0` at the solution.
    pub log_objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residuals: KktResiduals,
    pub multipliers: Vec<f64>,
}

impl Solution {
    pub fn objective(&self) -> f64 {
        self.log_objective.exp()
    }
}

type Eval = (f64, DVector<f64>);
/// Destination for `weight * Hessian`.
type Hess<'h> = Option<(f64, &'h mut DMatrix<f64>)>;

trait Smooth {
    fn dim(&self) -> usize;
    fn ineqs(&self) -> usize;
    fn objective(&self, x: &[f64], hess: Hess<'_>) -> Eval;
    fn constraint(&self, i: usize, x: &[f64], hess: Hess<'_>) -> Eval;
    fn constraint_value(&self, i: usize, x: &[f64]) -> f64;
    fn eq(&self) -> (&DMatrix<f64>, &DVector<f64>);
}

impl Smooth for ConvexProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn ineqs(&self) -> usize {
        self.constraints.len()
    }

    fn objective(&self, x: &[f64], mut hess: Hess<'_>) -> Eval {
        let mut value = self.objective_constant;
        let mut g = DVector::zeros(self.dim);
        for f in &self.objective {
            let (v, gi) = f.eval_into(x, hess.as_mut().map(|(w, h)| (*w, &mut **h)));
            value += v;
            g += gi;
        }
        (value, g)
    }

    fn constraint(&self, i: usize, x: &[f64], hess: Hess<'_>) -> Eval {
        self.constraints[i].1.eval_into(x, hess)
    }

    fn constraint_value(&self, i: usize, x: &[f64]) -> f64 {
        self.constraints[i].1.value(x)
    }

    fn eq(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.eq_matrix, &self.eq_rhs)
    }
}

/// Feasibility problem over `(t, s)`: minimize `s` subject to `G_i(t) <= s`, `s >= -1`.
struct PhaseOne<'a> {
    inner: &'a ConvexProblem,
    eq_matrix: DMatrix<f64>,
}

impl<'a> PhaseOne<'a> {
    fn new(inner: &'a ConvexProblem) -> Self {
        let (p, n) = inner.eq_matrix.shape();
        let mut eq_matrix = DMatrix::zeros(p, n + 1);
        eq_matrix.view_mut((0, 0), (p, n)).copy_from(&inner.eq_matrix);
        PhaseOne { inner, eq_matrix }
    }
}

impl Smooth for PhaseOne<'_> {
    fn dim(&self) -> usize {
        self.inner.dim + 1
    }

    fn ineqs(&self) -> usize {
        self.inner.constraints.len() + 1
    }

    fn objective(&self, x: &[f64], _hess: Hess<'_>) -> Eval {
        let n = self.dim();
        let mut g = DVector::zeros(n);
        g[n - 1] = 1.0;
        (x[n - 1], g)
    }

    fn constraint(&self, i: usize, x: &[f64], hess: Hess<'_>) -> Eval {
        let n = self.dim();
        if i == self.inner.constraints.len() {
            let mut g = DVector::zeros(n);
            g[n - 1] = -1.0;
            return (-1.0 - x[n - 1], g);
        }
        // Inner indices coincide with the leading block, so the Hessian lands in place.
        let (v, gi) = self.inner.constraints[i].1.eval_into(&x[..n - 1], hess);
        let mut g = DVector::zeros(n);
        g.rows_mut(0, n - 1).copy_from(&gi);
        g[n - 1] = -1.0;
        (v - x[n - 1], g)
    }

    fn constraint_value(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.dim();
        if i == self.inner.constraints.len() {
            -1.0 - x[n - 1]
        } else {
            self.inner.constraints[i].1.value(&x[..n - 1]) - x[n - 1]
        }
    }

    fn eq(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.eq_matrix, &self.inner.eq_rhs)
    }
}

struct IpmState {
    x: Vec<f64>,
    lambda: Vec<f64>,
    iterations: usize,
    converged: bool,
    residuals: KktResiduals,
}

/// Solves `[H A^T; A 0] [dx; dnu] = [rx; rp]`, regularizing `H` if needed.
fn solve_kkt(h: &DMatrix<f64>, a: &DMatrix<f64>, rx: &DVector<f64>, rp: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = h.nrows();
    let p = a.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(1.0, f64::max);
    for ridge in [1e-13, 1e-10, 1e-7] {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge * scale;
        }
        if p == 0 {
            if let Some(ch) = hr.clone().cholesky() {
                return Some((ch.solve(rx), DVector::zeros(0)));
            }
            continue;
        }
        let mut k = DMatrix::zeros(n + p, n + p);
        k.view_mut((0, 0), (n, n)).copy_from(&hr);
        k.view_mut((n, 0), (p, n)).copy_from(a);
        k.view_mut((0, n), (n, p)).copy_from(&a.transpose());
        for i in 0..p {
            k[(n + i, n + i)] -= ridge;
        }
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(rx);
        rhs.rows_mut(n, p).copy_from(rp);
        if let Some(sol) = k.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                return Some((sol.rows(0, n).into_owned(), sol.rows(n, p).into_owned()));
            }
        }
    }
    None
}

struct Residual {
    dual: DVector<f64>,
    cent: Vec<f64>,
    pri: DVector<f64>,
}

impl Residual {
    fn norm(&self) -> f64 {
        (self.dual.norm_squared() + self.cent.iter().map(|v| v * v).sum::<f64>() + self.pri.norm_squared()).sqrt()
    }
}

fn residual(prob: &dyn Smooth, x: &[f64], lambda: &[f64], nu: &DVector<f64>, tau: f64) -> Option<(Residual, Vec<f64>)> {
    let (a, b) = prob.eq();
    let (_, g0) = prob.objective(x, None);
    let mut dual = g0 + a.transpose() * nu;
    let mut fvals = Vec::with_capacity(lambda.len());
    let mut cent = Vec::with_capacity(lambda.len());
    for (i, &l) in lambda.iter().enumerate() {
        let (f, g) = prob.constraint(i, x, None);
        if !(f < 0.0) {
            return None;
        }
        dual.axpy(l, &g, 1.0);
        cent.push(-l * f - 1.0 / tau);
        fvals.push(f);
    }
    let pri = a * DVector::from_column_slice(x) - b;
    Some((Residual { dual, cent, pri }, fvals))
}

fn kkt_residuals(prob: &dyn Smooth, x: &[f64], lambda: &[f64], nu: &DVector<f64>) -> KktResiduals {
    let (a, b) = prob.eq();
    let (_, g0) = prob.objective(x, None);
    let mut dual = g0 + a.transpose() * nu;
    let mut comp: f64 = 0.0;
    let mut excess: f64 = 0.0;
    for (i, &l) in lambda.iter().enumerate() {
        let (f, g) = prob.constraint(i, x, None);
        dual.axpy(l, &g, 1.0);
        comp = comp.max((l * f).abs());
        excess = excess.max(f);
    }
    let pri = (a * DVector::from_column_slice(x) - b).amax();
    KktResiduals { stationarity: dual.amax(), complementarity: comp, primal: pri.max(excess) }
}

/// Newton's method with equality constraints and no inequalities.
fn newton(prob: &dyn Smooth, x0: Vec<f64>, opts: &SolverOptions) -> IpmState {
    let (a, b) = prob.eq();
    let p = a.nrows();
    let mut x = x0;
    let mut nu = DVector::zeros(p);
    let mut converged = false;
    let mut iterations = 0;
    let res_norm = |x: &[f64], nu: &DVector<f64>| {
        let (_, g) = prob.objective(x, None);
        let rd = g + a.transpose() * nu;
        let rp = a * DVector::from_column_slice(x) - b;
        (rd.norm_squared() + rp.norm_squared()).sqrt()
    };
    while iterations < opts.max_iterations {
        let mut h = DMatrix::zeros(x.len(), x.len());
        let (_, g) = prob.objective(&x, Some((1.0, &mut h)));
        let rp = a * DVector::from_column_slice(&x) - b;
        let rd = &g + a.transpose() * &nu;
        if rd.amax() <= opts.feasibility_tol && rp.amax() <= opts.feasibility_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let Some((dx, nu_plus)) = solve_kkt(&h, a, &(-&g), &(-&rp)) else {
            break;
        };
        let dnu = nu_plus - &nu;
        let r0 = res_norm(&x, &nu);
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, di)| xi + s * di).collect();
            let nun = &nu + s * &dnu;
            let rn = res_norm(&xn, &nun);
            if rn.is_finite() && rn <= (1.0 - 0.01 * s) * r0 {
                x = xn;
                nu = nun;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residuals = kkt_residuals(prob, &x, &[], &nu);
    if residuals.stationarity <= opts.feasibility_tol * 100.0 && residuals.primal <= opts.feasibility_tol * 100.0 {
        converged = true;
    }
    IpmState { x, lambda: Vec::new(), iterations, converged, residuals }
}

/// Primal-dual interior-point iterations from a strictly feasible `x0`.
fn primal_dual(prob: &dyn Smooth, x0: Vec<f64>, opts: &SolverOptions, stop: &dyn Fn(&[f64]) -> bool) -> IpmState {
    let m = prob.ineqs();
    if m == 0 {
        return newton(prob, x0, opts);
    }
    let (a, b) = prob.eq();
    let n = prob.dim();
    let mut x = x0;
    let mut lambda: Vec<f64> = (0..m).map(|i| (1.0 / -prob.constraint_value(i, &x)).min(1e8)).collect();
    let mut nu = DVector::zeros(a.nrows());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut hpd = DMatrix::zeros(n, n);
        let (_, g0) = prob.objective(&x, Some((1.0, &mut hpd)));
        let mut fvals = Vec::with_capacity(m);
        let mut grads = Vec::with_capacity(m);
        let mut weighted = DVector::zeros(n);
        let mut eta = 0.0;
        for i in 0..m {
            let (f, g) = prob.constraint(i, &x, Some((lambda[i], &mut hpd)));
            eta -= f * lambda[i];
            let nz: Vec<usize> = (0..n).filter(|&k| g[k] != 0.0).collect();
            let c = lambda[i] / -f;
            for &r in &nz {
                for &k in &nz {
                    hpd[(r, k)] += c * g[r] * g[k];
                }
            }
            weighted.axpy(lambda[i], &g, 1.0);
            fvals.push(f);
            grads.push(g);
        }
        let r_dual = &g0 + &weighted + a.transpose() * &nu;
        let r_pri = a * DVector::from_column_slice(&x) - b;
        let dual_tol = opts.feasibility_tol * (1.0 + g0.norm());
        if r_dual.norm() <= dual_tol && r_pri.norm() <= opts.feasibility_tol && eta <= opts.gap_tol {
            converged = true;
            break;
        }
        if stop(&x) {
            break;
        }
        iterations += 1;
        let tau = opts.mu * m as f64 / eta;
        let mut rx = -(&g0 + a.transpose() * &nu);
        for (f, g) in fvals.iter().zip(&grads) {
            rx.axpy(-1.0 / (tau * -f), g, 1.0);
        }
        let Some((dx, dnu)) = solve_kkt(&hpd, a, &rx, &(-&r_pri)) else {
            break;
        };
        let dlambda: Vec<f64> = (0..m)
            .map(|i| {
                let cent = -lambda[i] * fvals[i] - 1.0 / tau;
                (cent - lambda[i] * grads[i].dot(&dx)) / fvals[i]
            })
            .collect();
        let mut s_max: f64 = 1.0;
        for (l, dl) in lambda.iter().zip(&dlambda) {
            if *dl < 0.0 {
                s_max = s_max.min(-l / dl);
            }
        }
        let mut s = 0.99 * s_max;
        let Some((r0, _)) = residual(prob, &x, &lambda, &nu, tau) else {
            break;
        };
        let r0 = r0.norm();
        let mut accepted = false;
        let step_len = dx.amax();
        for _ in 0..80 {
            let xn: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, di)| xi + s * di).collect();
            let ln: Vec<f64> = lambda.iter().zip(&dlambda).map(|(l, dl)| l + s * dl).collect();
            let nun = &nu + s * &dnu;
            if let Some((rn, _)) = residual(prob, &xn, &ln, &nun, tau) {
                if rn.norm() <= (1.0 - 0.01 * s) * r0 {
                    x = xn;
                    lambda = ln;
                    nu = nun;
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        // Steps this short mean the residual has hit its rounding floor.
        if !accepted || s * step_len < 1e-12 {
            converged = r_dual.norm() <= 1e3 * dual_tol && r_pri.norm() <= 1e3 * opts.feasibility_tol && eta <= 1e3 * opts.gap_tol;
            break;
        }
    }
    let residuals = kkt_residuals(prob, &x, &lambda, &nu);
    IpmState { x, lambda, iterations, converged, residuals }
}

/// Minimizes the convex form from a positive starting assignment `start` (z-space).
///
/// An infeasible start triggers a feasibility phase first.
pub fn solve_convex(problem: &ConvexProblem, start: &[f64], opts: &SolverOptions) -> Result<Solution, GpError> {
    if start.len() != problem.dim {
        return Err(GpError::MissingVariable(start.len().min(problem.dim)));
    }
    if let Some((i, &v)) = start.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(GpError::NonPositive { var: i, value: v });
    }
    let mut t: Vec<f64> = start.iter().map(|v| v.ln()).collect();
    let mut iterations = 0;
    let worst = problem.constraint_values(&t).into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !problem.constraints.is_empty() && !(worst < -1e-7) {
        let phase = PhaseOne::new(problem);
        let mut x0 = t.clone();
        x0.push(worst.max(-0.5) + 1.0);
        let opts1 = SolverOptions { gap_tol: 1e-8, ..opts.clone() };
        let n = problem.dim;
        let state = primal_dual(&phase, x0, &opts1, &|x: &[f64]| x[n] <= -0.25);
        iterations += state.iterations;
        let slack = state.x[n];
        let (a, b) = problem.eq();
        let eq_ok = (a * DVector::from_column_slice(&state.x[..n]) - b).amax() <= 1e-7;
        if !(slack < -1e-10) || !eq_ok {
            return Err(GpError::Infeasible);
        }
        t = state.x[..n].to_vec();
    }
    let state = primal_dual(problem, t, opts, &|_| false);
    let t = state.x;
    let z = t.iter().map(|v| v.exp()).collect();
    Ok(Solution {
        log_objective: problem.objective_value(&t),
        t,
        z,
        converged: state.converged,
        iterations: iterations + state.iterations,
        residuals: state.residuals,
        multipliers: state.lambda,
    })
}

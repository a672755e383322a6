//! Log-space form of a geometric program: `t = log z`.

use nalgebra::{DMatrix, DVector};

use super::{GpError, GpProblem, Monomial, Posynomial};

/// `log sum_k exp(b_k + a_k . t)` with sparse rows `a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSumExp {
    rows: Vec<Vec<(usize, f64)>>,
    offsets: Vec<f64>,
}

impl LogSumExp {
    /// Terms with a zero coefficient are dropped; `None` if nothing remains.
    pub fn from_posynomial(p: &Posynomial) -> Option<Self> {
        let (rows, offsets) = p
            .terms()
            .iter()
            .filter(|m| m.coeff() > 0.0)
            .map(|m| (m.exponents().to_vec(), m.coeff().ln()))
            .unzip::<_, _, Vec<_>, Vec<_>>();
        if rows.is_empty() {
            None
        } else {
            Some(LogSumExp { rows, offsets })
        }
    }

    pub fn from_monomial(m: &Monomial) -> Option<Self> {
        Self::from_posynomial(&Posynomial::from(m.clone()))
    }

    pub fn terms(&self) -> usize {
        self.rows.len()
    }

    pub fn is_affine(&self) -> bool {
        self.rows.len() == 1
    }

    fn exponents(&self, t: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.offsets)
            .map(|(row, &b)| b + row.iter().map(|&(i, c)| c * t[i]).sum::<f64>())
            .collect()
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        super::posynomial::log_sum_exp(&self.exponents(t))
    }

    /// Value and softmax weights of the terms.
    fn weights(&self, t: &[f64]) -> (f64, Vec<f64>) {
        let e = self.exponents(t);
        let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = e.iter().map(|v| (v - max).exp()).collect();
        let s: f64 = w.iter().sum();
        (max + s.ln(), w.into_iter().map(|x| x / s).collect())
    }

    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; t.len()];
        let (_, w) = self.weights(t);
        for (row, wk) in self.rows.iter().zip(&w) {
            for &(i, c) in row {
                g[i] += wk * c;
            }
        }
        g
    }

    /// Value, gradient and (if requested) Hessian `sum_k w_k (a_k - g)(a_k - g)^T`.
    pub fn eval_full(&self, t: &[f64], hessian: bool) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let mut h = hessian.then(|| DMatrix::zeros(t.len(), t.len()));
        let (value, g) = self.eval_into(t, h.as_mut().map(|h| (1.0, h)));
        (value, g, h)
    }

    /// Value and gradient; adds `weight` times the Hessian into `h` when given.
    pub fn eval_into(&self, t: &[f64], h: Option<(f64, &mut DMatrix<f64>)>) -> (f64, DVector<f64>) {
        let n = t.len();
        let (value, w) = self.weights(t);
        let mut g = DVector::zeros(n);
        for (row, wk) in self.rows.iter().zip(&w) {
            for &(i, c) in row {
                g[i] += wk * c;
            }
        }
        let Some((weight, h)) = h else {
            return (value, g);
        };
        if self.rows.len() == 1 || weight == 0.0 {
            return (value, g);
        }
        // sum_k w_k a_k a_k^T - g g^T, with the rank-one part restricted to the support of g.
        for (row, wk) in self.rows.iter().zip(&w) {
            let scale = weight * wk;
            if scale == 0.0 {
                continue;
            }
            for &(i, ci) in row {
                for &(j, cj) in row {
                    h[(i, j)] += scale * ci * cj;
                }
            }
        }
        let support: Vec<usize> = (0..n).filter(|&i| g[i] != 0.0).collect();
        for &i in &support {
            let gi = weight * g[i];
            for &j in &support {
                h[(i, j)] -= gi * g[j];
            }
        }
        (value, g)
    }
}

/// Convex problem: minimize `sum_j F_j(t)` subject to `G_i(t) <= 0` and `A t = b`.
#[derive(Debug, Clone)]
pub struct ConvexProblem {
    pub dim: usize,
    pub objective: Vec<LogSumExp>,
    /// Constant part of the log objective from dropped constant factors.
    pub objective_constant: f64,
    pub constraints: Vec<(String, LogSumExp)>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
}

impl ConvexProblem {
    pub fn objective_value(&self, t: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|f| f.value(t)).sum::<f64>()
    }

    pub fn objective_gradient(&self, t: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for f in &self.objective {
            for (gi, v) in g.iter_mut().zip(f.gradient(t)) {
                *gi += v;
            }
        }
        g
    }

    pub fn constraint_values(&self, t: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|(_, c)| c.value(t)).collect()
    }
}

/// Takes logarithms of the objective, constraints and variables.
///
/// Constraints that reduce to a constant are dropped when satisfied and make
/// the problem infeasible otherwise. Bounds become single-term constraints.
pub fn to_convex_form(gp: &GpProblem) -> Result<ConvexProblem, GpError> {
    gp.validate()?;
    let dim = gp.num_vars();
    let mut objective = Vec::new();
    let mut objective_constant = 0.0;
    for factor in &gp.objective {
        let f = LogSumExp::from_posynomial(factor).ok_or(GpError::ZeroObjective)?;
        if f.rows.len() == 1 && f.rows[0].is_empty() {
            objective_constant += f.offsets[0];
        } else {
            objective.push(f);
        }
    }
    let mut constraints = Vec::new();
    let mut push = |label: String, p: &Posynomial| -> Result<(), GpError> {
        let Some(c) = LogSumExp::from_posynomial(p) else {
            return Ok(());
        };
        if c.rows.iter().all(Vec::is_empty) {
            if c.value(&[]) > 0.0 {
                return Err(GpError::ConstantInfeasible(label));
            }
            return Ok(());
        }
        constraints.push((label, c));
        Ok(())
    };
    for c in &gp.constraints {
        push(c.label.clone(), &c.lhs)?;
    }
    for b in &gp.bounds {
        let name = &gp.var_names[b.var];
        if let Some(lo) = b.lower.filter(|&v| v > 0.0) {
            push(format!("{name} >= {lo:e}"), &Posynomial::from(Monomial::new(lo, [(b.var, -1.0)])))?;
        }
        if let Some(hi) = b.upper.filter(|v| v.is_finite()) {
            push(format!("{name} <= {hi:e}"), &Posynomial::from(Monomial::new(1.0 / hi, [(b.var, 1.0)])))?;
        }
    }
    let p = gp.equalities.len();
    let mut eq_matrix = DMatrix::zeros(p, dim);
    let mut eq_rhs = DVector::zeros(p);
    for (r, (label, m)) in gp.equalities.iter().enumerate() {
        if !(m.coeff() > 0.0) {
            return Err(GpError::ConstantInfeasible(label.clone()));
        }
        for &(i, c) in m.exponents() {
            eq_matrix[(r, i)] = c;
        }
        eq_rhs[r] = -m.coeff().ln();
    }
    Ok(ConvexProblem { dim, objective, objective_constant, constraints, eq_matrix, eq_rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn monomial_becomes_affine() {
        let m = Monomial::new(3.0, [(0, 2.0), (1, -1.0)]);
        let f = LogSumExp::from_monomial(&m).unwrap();
        assert!(f.is_affine());
        let t = [0.3, -1.2];
        assert!((f.value(&t) - (3f64.ln() + 0.6 + 1.2)).abs() < 1e-14);
        assert_eq!(f.gradient(&t), vec![2.0, -1.0]);
    }

    #[test]
    fn constant_constraints_are_screened() {
        let mut gp = GpProblem::new(vec!["x".into()]);
        gp.minimize(Posynomial::from(Monomial::var(0)));
        gp.subject_to("slack", Posynomial::from(Monomial::constant(0.5)));
        assert!(to_convex_form(&gp).unwrap().constraints.is_empty());
        gp.subject_to("broken", Posynomial::from(Monomial::constant(2.0)));
        assert!(matches!(to_convex_form(&gp), Err(GpError::ConstantInfeasible(l)) if l == "broken"));
    }

    fn instance() -> impl Strategy<Value = (Posynomial, Vec<f64>)> {
        let n = 4usize;
        let term = (0.01f64..10.0, proptest::collection::vec(-2.0f64..2.0, n));
        (proptest::collection::vec(term, 1..7), proptest::collection::vec(-2.0f64..2.0, n)).prop_map(|(terms, t)| {
            let p = Posynomial::from_terms(
                terms.into_iter().map(|(d, c)| Monomial::new(d, c.into_iter().enumerate())).collect(),
            )
            .unwrap();
            (p, t)
        })
    }

    proptest! {
        #[test]
        fn round_trip_value((p, t) in instance()) {
            let f = LogSumExp::from_posynomial(&p).unwrap();
            let z: Vec<f64> = t.iter().map(|v| v.exp()).collect();
            prop_assert!((f.value(&t).exp() / p.eval(&z) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn gradient_and_hessian_match_finite_differences((p, t) in instance()) {
            let f = LogSumExp::from_posynomial(&p).unwrap();
            let (_, g, h) = f.eval_full(&t, true);
            let h = h.unwrap();
            let step = 1e-5;
            for i in 0..t.len() {
                let mut up = t.clone();
                let mut dn = t.clone();
                up[i] += step;
                dn[i] -= step;
                let fd = (f.value(&up) - f.value(&dn)) / (2.0 * step);
                prop_assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()));
                let (gu, gd) = (f.gradient(&up), f.gradient(&dn));
                for j in 0..t.len() {
                    let fd2 = (gu[j] - gd[j]) / (2.0 * step);
                    prop_assert!((fd2 - h[(i, j)]).abs() <= 1e-5 * (1.0 + h[(i, j)].abs()));
                }
            }
        }
    }
}

use std::fmt;
use std::ops::Mul;

use super::GpError;

/// `coeff * prod_i z_i^{c_i}` with exponents stored sparsely, sorted by variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    coeff: f64,
    exps: Vec<(usize, f64)>,
}

impl Monomial {
    /// Builds a monomial; repeated variables are merged and zero exponents dropped.
    pub fn new(coeff: f64, exps: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut v: Vec<(usize, f64)> = exps.into_iter().collect();
        v.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(v.len());
        for (i, c) in v {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        Monomial { coeff, exps: merged }
    }

    pub fn constant(coeff: f64) -> Self {
        Monomial { coeff, exps: Vec::new() }
    }

    /// The single variable `z_i`.
    pub fn var(i: usize) -> Self {
        Monomial { coeff: 1.0, exps: vec![(i, 1.0)] }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponents(&self) -> &[(usize, f64)] {
        &self.exps
    }

    pub fn exponent(&self, var: usize) -> f64 {
        self.exps.binary_search_by_key(&var, |&(i, _)| i).map_or(0.0, |k| self.exps[k].1)
    }

    pub fn is_constant(&self) -> bool {
        self.exps.is_empty()
    }

    /// Evaluates without checking the assignment.
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.exps.iter().fold(self.coeff, |acc, &(i, c)| acc * z[i].powf(c))
    }

    /// `log` of the value, computed from `log z` to avoid overflow.
    pub fn log_eval(&self, log_z: &[f64]) -> f64 {
        self.coeff.ln() + self.exps.iter().map(|&(i, c)| c * log_z[i]).sum::<f64>()
    }

    pub fn scale(&self, k: f64) -> Monomial {
        Monomial { coeff: self.coeff * k, exps: self.exps.clone() }
    }

    pub fn powf(&self, p: f64) -> Monomial {
        Monomial::new(self.coeff.powf(p), self.exps.iter().map(|&(i, c)| (i, c * p)))
    }

    pub fn recip(&self) -> Monomial {
        Monomial::new(1.0 / self.coeff, self.exps.iter().map(|&(i, c)| (i, -c)))
    }

    pub fn max_var(&self) -> Option<usize> {
        self.exps.last().map(|&(i, _)| i)
    }
}

impl Mul for &Monomial {
    type Output = Monomial;

    fn mul(self, rhs: &Monomial) -> Monomial {
        Monomial::new(self.coeff * rhs.coeff, self.exps.iter().chain(rhs.exps.iter()).copied())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.coeff)?;
        for &(i, c) in &self.exps {
            write!(f, " z{i}:{c}")?;
        }
        Ok(())
    }
}

/// Nonempty sum of monomials with nonnegative coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn from_terms(terms: Vec<Monomial>) -> Result<Self, GpError> {
        if terms.is_empty() {
            return Err(GpError::EmptyPosynomial);
        }
        if let Some(m) = terms.iter().find(|m| !(m.coeff >= 0.0 && m.coeff.is_finite())) {
            return Err(GpError::BadCoefficient(m.coeff));
        }
        Ok(Posynomial { terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|m| m.eval(z)).sum()
    }

    /// Evaluates after checking that every variable is assigned a positive value.
    pub fn evaluate(&self, z: &[f64]) -> Result<f64, GpError> {
        for m in &self.terms {
            for &(i, _) in m.exponents() {
                match z.get(i) {
                    None => return Err(GpError::MissingVariable(i)),
                    Some(&v) if !(v > 0.0) => return Err(GpError::NonPositive { var: i, value: v }),
                    _ => {}
                }
            }
        }
        Ok(self.eval(z))
    }

    /// `log` of the value via a shifted log-sum-exp.
    pub fn log_eval(&self, log_z: &[f64]) -> f64 {
        let logs: Vec<f64> = self.terms.iter().filter(|m| m.coeff > 0.0).map(|m| m.log_eval(log_z)).collect();
        log_sum_exp(&logs)
    }

    pub fn scale(&self, k: f64) -> Posynomial {
        Posynomial { terms: self.terms.iter().map(|m| m.scale(k)).collect() }
    }

    /// Division by a monomial keeps the result a posynomial.
    pub fn div_monomial(&self, m: &Monomial) -> Posynomial {
        let r = m.recip();
        Posynomial { terms: self.terms.iter().map(|t| t * &r).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Posynomial {
        Posynomial { terms: self.terms.iter().map(|t| t * m).collect() }
    }

    pub fn add(&self, other: &Posynomial) -> Posynomial {
        Posynomial { terms: self.terms.iter().chain(other.terms.iter()).cloned().collect() }
    }

    /// Expanded product, merging terms with identical exponents.
    pub fn mul(&self, other: &Posynomial) -> Posynomial {
        let mut out: Vec<Monomial> = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                let t = a * b;
                match out.iter_mut().find(|m| m.exps == t.exps) {
                    Some(m) => m.coeff += t.coeff,
                    None => out.push(t),
                }
            }
        }
        Posynomial { terms: out }
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().filter_map(Monomial::max_var).max()
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Posynomial { terms: vec![m] }
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Single condensation of `g` at `z0`: the monomial `prod_k (mu_k / w_k)^{w_k}`
/// with `w_k = mu_k(z0) / g(z0)`. It never exceeds `g` and touches it at `z0`.
/// Terms vanishing at `z0` get weight zero and are dropped.
pub fn condense(g: &Posynomial, z0: &[f64]) -> Result<Monomial, GpError> {
    g.evaluate(z0)?;
    let log_z: Vec<f64> = z0.iter().map(|v| v.ln()).collect();
    let logs: Vec<f64> = g
        .terms
        .iter()
        .map(|m| if m.coeff > 0.0 { m.log_eval(&log_z) } else { f64::NEG_INFINITY })
        .collect();
    let total = log_sum_exp(&logs);
    if !total.is_finite() {
        return Err(GpError::ZeroCondensation);
    }
    let mut log_coeff = 0.0;
    let mut exps: Vec<(usize, f64)> = Vec::new();
    for (m, &lm) in g.terms.iter().zip(&logs) {
        if lm == f64::NEG_INFINITY {
            continue;
        }
        let log_w = lm - total;
        let w = log_w.exp();
        if w == 0.0 {
            continue;
        }
        log_coeff += w * (m.coeff.ln() - log_w);
        exps.extend(m.exps.iter().map(|&(i, c)| (i, w * c)));
    }
    Ok(Monomial::new(log_coeff.exp(), exps))
}

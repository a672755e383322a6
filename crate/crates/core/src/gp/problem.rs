use std::fmt;

use super::{GpError, Monomial, Posynomial};

/// Inequality `lhs(z) <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub lhs: Posynomial,
}

/// `lower <= z_var <= upper`; either side may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct VarBound {
    pub var: usize,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Geometric program in standard form.
///
/// The objective is the product of its factors; keeping the factors apart
/// avoids expanding products of many posynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct GpProblem {
    pub var_names: Vec<String>,
    pub objective: Vec<Posynomial>,
    pub constraints: Vec<Constraint>,
    pub equalities: Vec<(String, Monomial)>,
    pub bounds: Vec<VarBound>,
}

impl GpProblem {
    pub fn new(var_names: Vec<String>) -> Self {
        GpProblem { var_names, objective: Vec::new(), constraints: Vec::new(), equalities: Vec::new(), bounds: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn minimize(&mut self, factor: Posynomial) -> &mut Self {
        self.objective.push(factor);
        self
    }

    pub fn subject_to(&mut self, label: impl Into<String>, lhs: Posynomial) -> &mut Self {
        self.constraints.push(Constraint { label: label.into(), lhs });
        self
    }

    pub fn equal_one(&mut self, label: impl Into<String>, m: Monomial) -> &mut Self {
        self.equalities.push((label.into(), m));
        self
    }

    pub fn bound(&mut self, var: usize, lower: Option<f64>, upper: Option<f64>) -> &mut Self {
        self.bounds.push(VarBound { var, lower, upper });
        self
    }

    /// Checks that every referenced variable exists and bounds are consistent.
    pub fn validate(&self) -> Result<(), GpError> {
        let n = self.num_vars();
        let posys = self.objective.iter().chain(self.constraints.iter().map(|c| &c.lhs));
        for p in posys {
            if let Some(v) = p.max_var().filter(|&v| v >= n) {
                return Err(GpError::MissingVariable(v));
            }
        }
        for (_, m) in &self.equalities {
            if let Some(v) = m.max_var().filter(|&v| v >= n) {
                return Err(GpError::MissingVariable(v));
            }
        }
        for b in &self.bounds {
            if b.var >= n {
                return Err(GpError::MissingVariable(b.var));
            }
            let lo = b.lower.unwrap_or(0.0);
            let hi = b.upper.unwrap_or(f64::INFINITY);
            if !(lo >= 0.0 && hi > 0.0 && lo <= hi) {
                return Err(GpError::BadBound { var: b.var });
            }
        }
        Ok(())
    }

    /// Product of the objective factors at `z`.
    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective.iter().map(|p| p.eval(z)).product()
    }

    /// `log` of the objective, summed factor by factor.
    pub fn log_objective(&self, z: &[f64]) -> f64 {
        let lz: Vec<f64> = z.iter().map(|v| v.ln()).collect();
        self.objective.iter().map(|p| p.log_eval(&lz)).sum()
    }

    /// Largest constraint value at `z` together with its label.
    pub fn worst_constraint(&self, z: &[f64]) -> Option<(&str, f64)> {
        self.constraints
            .iter()
            .map(|c| (c.label.as_str(), c.lhs.eval(z)))
            .fold(None, |acc: Option<(&str, f64)>, (l, v)| match acc {
                Some((_, best)) if best >= v => acc,
                _ => Some((l, v)),
            })
    }
}

impl fmt::Display for GpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "variables")?;
        for (i, name) in self.var_names.iter().enumerate() {
            writeln!(f, "  z{i} {name}")?;
        }
        for (k, p) in self.objective.iter().enumerate() {
            writeln!(f, "minimize factor {k}")?;
            for m in p.terms() {
                writeln!(f, "  {m}")?;
            }
        }
        for c in &self.constraints {
            writeln!(f, "subject to {} <= 1", c.label)?;
            for m in c.lhs.terms() {
                writeln!(f, "  {m}")?;
            }
        }
        for (label, m) in &self.equalities {
            writeln!(f, "equal {label} = 1")?;
            writeln!(f, "  {m}")?;
        }
        for b in &self.bounds {
            writeln!(f, "bound z{} in [{:e}, {:e}]", b.var, b.lower.unwrap_or(0.0), b.upper.unwrap_or(f64::INFINITY))?;
        }
        Ok(())
    }
}

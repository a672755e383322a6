//! Search over relay selection matrices.

mod bb;
mod bpso;
mod exhaustive;

pub use bb::{bb_optimize, selection_bound, BbSettings};
pub use bpso::{bpso_optimize, sigmoid, BpsoSettings};
pub use exhaustive::{exhaustive_optimize, EXHAUSTIVE_MAX_ENTRIES};

use crate::model::SelectionMatrix;
use crate::subproblem::{Evaluation, Evaluator};
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("no feasible selection matrix was found")]
    AllInfeasible,
    #[error("{solver} refuses {entries} selection entries (limit {limit})")]
    GuardExceeded { solver: &'static str, entries: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Evaluation,
    /// Best utility found so far, one entry per iteration (BPSO) or per improvement (BB).
    pub trace: Vec<f64>,
    /// Distinct selection matrices scored.
    pub evaluations: usize,
    pub iterations: usize,
    /// Tree nodes visited (BB only).
    pub nodes: usize,
    /// Convex solves summed over all evaluations.
    pub gp_solves: usize,
}

/// Scores each selection matrix at most once.
pub(crate) struct Memo<'e, 'a> {
    evaluator: &'e Evaluator<'a>,
    seen: HashMap<SelectionMatrix, Option<Evaluation>>,
    pub gp_solves: usize,
}

impl<'e, 'a> Memo<'e, 'a> {
    pub fn new(evaluator: &'e Evaluator<'a>) -> Self {
        Memo { evaluator, seen: HashMap::new(), gp_solves: 0 }
    }

    pub fn evaluator(&self) -> &'e Evaluator<'a> {
        self.evaluator
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    /// Evaluates the unseen matrices of `batch` concurrently.
    pub fn fill(&mut self, batch: &[SelectionMatrix]) {
        let mut fresh: Vec<&SelectionMatrix> = Vec::new();
        for eps in batch {
            if !self.seen.contains_key(eps) && !fresh.contains(&eps) {
                fresh.push(eps);
            }
        }
        let scored: Vec<Option<Evaluation>> = fresh.par_iter().map(|eps| self.evaluator.evaluate(eps)).collect();
        for (eps, e) in fresh.into_iter().zip(scored) {
            self.gp_solves += e.as_ref().map_or(0, |e| e.gp_solves);
            self.seen.insert(eps.clone(), e);
        }
    }

    pub fn get(&mut self, eps: &SelectionMatrix) -> Option<&Evaluation> {
        if !self.seen.contains_key(eps) {
            self.fill(std::slice::from_ref(eps));
        }
        self.seen[eps].as_ref()
    }

    pub fn score(&mut self, eps: &SelectionMatrix) -> f64 {
        self.get(eps).map_or(f64::NEG_INFINITY, |e| e.utility)
    }
}

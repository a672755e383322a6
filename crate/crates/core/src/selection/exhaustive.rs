use super::{Memo, SearchResult, SelectionError};
use crate::model::SelectionMatrix;
use crate::subproblem::Evaluator;

pub const EXHAUSTIVE_MAX_ENTRIES: usize = 16;

/// Scores all `2^(L B)` selection matrices; ties go to the smallest encoding.
pub fn exhaustive_optimize(evaluator: &Evaluator<'_>) -> Result<SearchResult, SelectionError> {
    let p = &evaluator.scenario.params;
    let entries = p.relays * p.slots;
    if entries > EXHAUSTIVE_MAX_ENTRIES {
        return Err(SelectionError::GuardExceeded { solver: "exhaustive", entries, limit: EXHAUSTIVE_MAX_ENTRIES });
    }
    let all: Vec<SelectionMatrix> =
        (0..1u64 << entries).map(|code| SelectionMatrix::from_encoding(code, p.relays, p.slots)).collect();
    let mut memo = Memo::new(evaluator);
    memo.fill(&all);
    let mut best: Option<f64> = None;
    let mut best_eps = None;
    let mut trace = Vec::new();
    for eps in &all {
        let u = memo.score(eps);
        if u > f64::NEG_INFINITY && best.is_none_or(|b| u > b) {
            best = Some(u);
            best_eps = Some(eps);
            trace.push(u);
        }
    }
    let best_eps = best_eps.ok_or(SelectionError::AllInfeasible)?.clone();
    Ok(SearchResult {
        best: memo.get(&best_eps).cloned().expect("scored"),
        trace,
        evaluations: all.len(),
        iterations: all.len(),
        nodes: 0,
        gp_solves: memo.gp_solves,
    })
}

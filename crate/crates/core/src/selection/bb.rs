use super::{Memo, SearchResult, SelectionError};
use crate::model::{ChannelSet, SelectionMatrix, SystemParams, UtilityKind};
use crate::subproblem::Evaluator;

#[derive(Debug, Clone, PartialEq)]
pub struct BbSettings {
    pub max_entries: usize,
}

impl Default for BbSettings {
    fn default() -> Self {
        BbSettings { max_entries: 24 }
    }
}

/// Energy-relaxed upper bound on the utility of any completion whose slot-`b`
/// selection lies inside `candidates(l, b)`.
///
/// Per (slot, terminal) the SNR is capped both by
/// `(P_qbar / N0) sum_l |h_qbar,l|^2` and by
/// `P_qbar P_max (sum_l |h_q,l h_qbar,l| / sqrt(S_l + N0))^2 / N0`.
pub fn selection_bound(
    candidates: impl Fn(usize, usize) -> bool,
    ch: &ChannelSet,
    params: &SystemParams,
    kind: UtilityKind,
) -> f64 {
    let n0 = params.noise_power;
    let mut rates = Vec::with_capacity(2 * params.slots);
    for b in 0..params.slots {
        for q in 0..2 {
            let other = 1 - q;
            let (mut collect, mut amp) = (0.0, 0.0);
            for l in (0..params.relays).filter(|&l| candidates(l, b)) {
                collect += ch.terminal_gain(other, l, b);
                let s = ch.received_power(l, b, params);
                amp += ch.terminal(q, l, b).norm() * ch.terminal(other, l, b).norm() / (s + n0).sqrt();
            }
            let ps = params.source_power[other];
            let gamma = (ps / n0 * collect).min(ps * params.relay_power_max * amp * amp / n0);
            rates.push(params.bits_per_log2() * (1.0 + gamma).log2());
        }
    }
    crate::model::utility_of(&rates, kind)
}

struct Search<'m, 'e, 'a> {
    memo: &'m mut Memo<'e, 'a>,
    order: Vec<(usize, usize)>,
    /// Depth at which entry `l * slots + b` is branched.
    depth_of: Vec<usize>,
    slots: usize,
    fixed: Vec<Option<bool>>,
    incumbent: f64,
    best: Option<SelectionMatrix>,
    nodes: usize,
    trace: Vec<f64>,
    kind: UtilityKind,
}

impl Search<'_, '_, '_> {
    fn candidate(&self, l: usize, b: usize) -> bool {
        self.fixed[self.depth_of[l * self.slots + b]] != Some(false)
    }

    fn visit(&mut self, depth: usize) {
        self.nodes += 1;
        let sc = self.memo.evaluator().scenario;
        if depth == self.order.len() {
            let eps = SelectionMatrix::from_fn(sc.params.relays, sc.params.slots, |l, b| self.candidate(l, b));
            let u = self.memo.score(&eps);
            if u > self.incumbent || (u == self.incumbent && self.best.as_ref().is_some_and(|e| eps.encoding() < e.encoding())) {
                if u > self.incumbent {
                    self.trace.push(u);
                }
                self.incumbent = u;
                self.best = Some(eps);
            }
            return;
        }
        let bound = selection_bound(|l, b| self.candidate(l, b), &sc.channels, &sc.params, self.kind);
        if bound <= self.incumbent {
            return;
        }
        for choice in [true, false] {
            self.fixed[depth] = Some(choice);
            self.visit(depth + 1);
        }
        self.fixed[depth] = None;
    }
}

/// Depth-first branch and bound over the selection entries.
///
/// Subtrees whose energy-relaxed bound does not exceed the incumbent are pruned.
/// Entries are branched in order of how far the all-selected solution's
/// normalized power sits from the box edges.
pub fn bb_optimize(evaluator: &Evaluator<'_>, settings: &BbSettings) -> Result<SearchResult, SelectionError> {
    let sc = evaluator.scenario;
    let p = &sc.params;
    let entries = p.relays * p.slots;
    if entries > settings.max_entries {
        return Err(SelectionError::GuardExceeded { solver: "bb", entries, limit: settings.max_entries });
    }
    let mut memo = Memo::new(evaluator);
    let all = SelectionMatrix::all(p.relays, p.slots);
    let none = SelectionMatrix::none(p.relays, p.slots);
    memo.fill(&[all.clone(), none.clone()]);

    let mut order: Vec<(usize, usize)> = (0..p.relays).flat_map(|l| (0..p.slots).map(move |b| (l, b))).collect();
    if let Some(root) = memo.get(&all) {
        let frac = |&(l, b): &(usize, usize)| {
            let x = root.decision.p_r[(l, b)] / p.relay_power_max;
            (x - 0.5).abs()
        };
        order.sort_by(|a, b| frac(a).total_cmp(&frac(b)));
    }

    let (mut incumbent, mut best) = (f64::NEG_INFINITY, None);
    for eps in [&none, &all] {
        let u = memo.score(eps);
        if u > incumbent {
            incumbent = u;
            best = Some(eps.clone());
        }
    }
    let root_bound = selection_bound(|_, _| true, &sc.channels, p, evaluator.kind);
    let mut trace = vec![incumbent];
    let mut nodes = 1;
    if incumbent < root_bound {
        let mut depth_of = vec![0; entries];
        for (k, &(l, b)) in order.iter().enumerate() {
            depth_of[l * p.slots + b] = k;
        }
        let mut search = Search {
            memo: &mut memo,
            order,
            depth_of,
            slots: p.slots,
            fixed: vec![None; entries],
            incumbent,
            best,
            nodes: 0,
            trace: Vec::new(),
            kind: evaluator.kind,
        };
        search.visit(0);
        nodes = search.nodes;
        trace.extend(search.trace);
        incumbent = search.incumbent;
        best = search.best;
    }
    if incumbent == f64::NEG_INFINITY {
        return Err(SelectionError::AllInfeasible);
    }
    let best = best.expect("incumbent has a matrix");
    Ok(SearchResult {
        best: memo.get(&best).cloned().expect("scored"),
        trace,
        evaluations: memo.len(),
        iterations: nodes,
        nodes,
        gp_solves: memo.gp_solves,
    })
}

//! Local consistency: removes clause members that cannot occur in any
//! solution by looking at small connected groups of clauses.
//!
//! The filter is sound but incomplete; an unsatisfiable GCSP may survive it.

use crate::stacks::RefinementStack;
use crate::types::{Blocking, Gcsp, Substitution, Substlet};

/// `c ∼ c'` when the clauses share a variable or contain variables that
/// occur together in a blocking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectivityGraph {
    pub adj: Vec<Vec<usize>>,
}

impl ConnectivityGraph {
    pub fn new(g: &Gcsp) -> Self {
        let n = g.positive.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&g.positive[i], &g.positive[j]);
                let linked = a
                    .domain()
                    .iter()
                    .any(|&v| b.contains_var(v) || b.domain().iter().any(|&w| g.connected(v, w)));
                if linked {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        ConnectivityGraph { adj }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }
}

/// Circles of `size ≥ 2` whose smallest element is `start`, each listed
/// once: for three or more elements the second must be below the last.
pub fn enumerate_circles(graph: &ConnectivityGraph, start: usize, size: usize) -> Vec<Vec<usize>> {
    assert!(size >= 2, "circles have at least two elements");
    let mut out = Vec::new();
    let mut path = vec![start];
    extend(graph, size, &mut path, &mut out);
    out
}

fn extend(graph: &ConnectivityGraph, size: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let last = *path.last().expect("non-empty path");
    if path.len() == size {
        if size == 2 || (graph.adjacent(last, path[0]) && path[1] < last) {
            out.push(path.clone());
        }
        return;
    }
    for &n in &graph.adj[last] {
        if n > path[0] && !path.contains(&n) {
            path.push(n);
            extend(graph, size, path, out);
            path.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FilterStats {
    /// Members removed from clauses.
    pub removed: usize,
    /// Subsets handed to `refine_subset`.
    pub circles: usize,
    /// Assignments added to the substitution.
    pub assigned: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterOutcome {
    Refined,
    /// No extension of the substitution solves the GCSP.
    Refuted,
}

fn implies_blocking(negative: &[Blocking], t: &Substitution, s: &Substlet) -> bool {
    negative.iter().any(|b| t.with_makes_true(s, b.substlet()))
}

/// Keeps in each clause of `set` only the members that take part in some
/// joint selection: one member per clause, consistent with `theta`, pairwise
/// compatible and implying no blocking.
pub fn refine_subset(
    g: &Gcsp,
    set: &[usize],
    theta: &Substitution,
    stack: &mut RefinementStack,
    stats: &mut FilterStats,
) -> FilterOutcome {
    let mut order: Vec<usize> = set.to_vec();
    order.sort_by_key(|&ci| (stack.current_len(ci), ci));
    let cand: Vec<Vec<u32>> = order.iter().map(|&ci| stack.current_indices(ci).to_vec()).collect();
    let mut used: Vec<Vec<bool>> = order.iter().map(|&ci| vec![false; stack.original(ci).len()]).collect();
    let mut pick = Vec::with_capacity(order.len());
    let mut t = theta.clone();
    select(g, stack, &order, &cand, 0, &mut t, &mut pick, &mut used);
    for (k, &ci) in order.iter().enumerate() {
        let keep: Vec<u32> = cand[k].iter().copied().filter(|&j| used[k][j as usize]).collect();
        if keep.is_empty() {
            return FilterOutcome::Refuted;
        }
        if keep.len() < cand[k].len() {
            stats.removed += cand[k].len() - keep.len();
            stack.refine(ci, &keep).expect("strict non-empty subset");
        }
    }
    FilterOutcome::Refined
}

#[allow(clippy::too_many_arguments)]
fn select(
    g: &Gcsp,
    stack: &RefinementStack,
    order: &[usize],
    cand: &[Vec<u32>],
    k: usize,
    t: &mut Substitution,
    pick: &mut Vec<u32>,
    used: &mut [Vec<bool>],
) {
    if k == order.len() {
        for (i, &j) in pick.iter().enumerate() {
            used[i][j as usize] = true;
        }
        return;
    }
    let c = stack.original(order[k]);
    for &j in &cand[k] {
        let s = &c.members()[j as usize];
        if t.conflicts(s) || implies_blocking(&g.negative, t, s) {
            continue;
        }
        let len = t.len();
        for (v, x) in s.iter() {
            if !t.is_assigned(v) {
                t.assign(v, x).expect("unassigned");
            }
        }
        pick.push(j);
        select(g, stack, order, cand, k + 1, t, pick, used);
        pick.pop();
        t.truncate(len);
    }
}

/// Filters `stack` (and extends `theta` with forced values) using circles of
/// up to `size + 1` clauses. The caller may mark both beforehand to undo.
pub fn local_consistency(
    g: &Gcsp,
    stack: &mut RefinementStack,
    theta: &mut Substitution,
    size: usize,
    stats: &mut FilterStats,
) -> FilterOutcome {
    assert!(size >= 1, "filter size must be at least 1");
    let graph = ConnectivityGraph::new(g);
    let n = g.positive.len();
    let mut dirty = vec![true; n];
    let mut seen = 0;
    loop {
        // SUBST
        if g.negative.iter().any(|b| theta.makes_true(b.substlet())) {
            return FilterOutcome::Refuted;
        }
        if seen < theta.len() || seen == 0 {
            for (ci, flag) in dirty.iter_mut().enumerate() {
                let before = stack.current_len(ci);
                let kept = stack.refine_where(ci, |s| !theta.conflicts(s) && !implies_blocking(&g.negative, theta, s));
                if kept == 0 {
                    return FilterOutcome::Refuted;
                }
                if kept < before {
                    stats.removed += before - kept;
                    *flag = true;
                }
            }
            seen = theta.len();
        }
        // CLAUSES1
        let before = theta.len();
        for ci in 0..n {
            let c = stack.original(ci);
            let cur = stack.current_indices(ci);
            for (p, &v) in c.domain().iter().enumerate() {
                let x = c.members()[cur[0] as usize].vals()[p];
                if !theta.is_assigned(v) && cur.iter().all(|&j| c.members()[j as usize].vals()[p] == x) {
                    theta.assign(v, x).expect("unassigned");
                }
            }
        }
        if theta.len() > before {
            stats.assigned += theta.len() - before;
            continue;
        }
        // CLAUSESN
        let grown = stack.len();
        let check = dirty.clone();
        'sizes: for i in 2..=size + 1 {
            for start in 0..n {
                for circle in enumerate_circles(&graph, start, i) {
                    if !circle.iter().any(|&c| check[c]) {
                        continue;
                    }
                    stats.circles += 1;
                    let len = stack.len();
                    if refine_subset(g, &circle, theta, stack, stats) == FilterOutcome::Refuted {
                        return FilterOutcome::Refuted;
                    }
                    if stack.len() > len {
                        for k in len..stack.len() {
                            dirty[stack.entry_clause(k)] = true;
                        }
                        break 'sizes;
                    }
                }
            }
        }
        if stack.len() == grown {
            return FilterOutcome::Refined;
        }
    }
}

/// Runs the filter from scratch and returns the GCSP with every clause
/// replaced by its filtered refinement, or `None` when refuted.
pub fn filter_gcsp(g: &Gcsp, size: usize) -> (Option<Gcsp>, FilterStats) {
    let mut stack = RefinementStack::new(g.positive.clone());
    let mut theta = Substitution::new();
    let mut stats = FilterStats::default();
    match local_consistency(g, &mut stack, &mut theta, size, &mut stats) {
        FilterOutcome::Refuted => (None, stats),
        FilterOutcome::Refined => {
            let mut out = g.clone();
            for (ci, c) in out.positive.iter_mut().enumerate() {
                let keep: Vec<bool> = (0..c.len() as u32).map(|j| stack.is_active(ci, j)).collect();
                let mut it = keep.into_iter();
                c.retain(|_| it.next().expect("one flag per member"));
            }
            (Some(out), stats)
        }
    }
}

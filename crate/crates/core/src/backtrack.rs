//! Clause-based backtracking over a refinement stack with flat-lemma
//! learning.
//!
//! The substitution is a trail. Every assignment belongs to a batch: either
//! the unassigned variables of a picked substlet (a decision) or the values
//! a filtered clause agreed on (a propagation). Conflicts produce lemmas that
//! are false under the current trail; walking back over propagation batches
//! turns them into lemmas over older assignments, which is what makes
//! backjumping possible.

use crate::lemma::{sigma_resolvent_smallest, FlatLemma};
use crate::solver::{SolveOutput, SolveResult, SolveStats, SolverConfig};
use crate::stacks::RefinementStack;
use crate::translate::{preprocess, Preprocessed};
use crate::types::{is_solution, Const, Gcsp, Substitution, Substlet, Var};

#[derive(Clone, Copy, Debug)]
struct Batch {
    start: usize,
    clause: usize,
    /// Trail length when the clause was filtered.
    q: usize,
    decision: bool,
}

struct Search<'a> {
    g: &'a Gcsp,
    cfg: &'a SolverConfig,
    clauses: RefinementStack,
    theta: Substitution,
    pos: Vec<usize>,
    batches: Vec<Batch>,
    /// Clauses containing the variable or a variable connected to it.
    affected: Vec<Vec<usize>>,
    /// Blockings sharing a variable with the clause.
    clause_blockings: Vec<Vec<usize>>,
    sigma_res: Vec<FlatLemma>,
    store: Vec<FlatLemma>,
    store_by_var: Vec<Vec<usize>>,
    stats: SolveStats,
}

/// Solves `gcsp` (preprocessing it first).
pub fn solve(gcsp: &Gcsp, cfg: &SolverConfig) -> SolveOutput {
    let g = match preprocess(gcsp) {
        Preprocessed::TriviallyUnsat(r) => {
            return SolveOutput { result: SolveResult::TriviallyUnsat(r), stats: SolveStats::default(), learned: vec![] }
        }
        Preprocessed::Simplified(g) => g,
    };
    let mut s = Search::new(&g, cfg);
    let result = match s.run() {
        Ok(()) => {
            let theta = Substitution::from_pairs(s.theta.sorted_pairs()).expect("trail has no repeats");
            assert!(is_solution(gcsp, &theta), "backtracking produced a non-solution");
            SolveResult::Sat(theta)
        }
        Err(l) => SolveResult::Unsat(l),
    };
    SolveOutput { result, stats: s.stats, learned: s.store }
}

impl<'a> Search<'a> {
    fn new(g: &'a Gcsp, cfg: &'a SolverConfig) -> Self {
        let nv = g.num_vars();
        let mut affected = vec![Vec::new(); nv];
        for (ci, c) in g.positive.iter().enumerate() {
            let mut touched: Vec<Var> = c.domain().to_vec();
            for b in &g.negative {
                if b.vars().iter().any(|v| c.contains_var(*v)) {
                    touched.extend_from_slice(b.vars());
                }
            }
            touched.sort();
            touched.dedup();
            for v in touched {
                affected[v.index()].push(ci);
            }
        }
        let clause_blockings = g
            .positive
            .iter()
            .map(|c| (0..g.negative.len()).filter(|&b| g.negative[b].vars().iter().any(|v| c.contains_var(*v))).collect())
            .collect();
        let sigma_res = g
            .negative
            .iter()
            .map(|b| sigma_resolvent_smallest(b, &g.positive).expect("range restricted"))
            .collect();
        Search {
            g,
            cfg,
            clauses: RefinementStack::new(g.positive.clone()),
            theta: Substitution::with_capacity(nv),
            pos: vec![usize::MAX; nv],
            batches: Vec::new(),
            affected,
            clause_blockings,
            sigma_res,
            store: Vec::new(),
            store_by_var: vec![Vec::new(); nv],
            stats: SolveStats::default(),
        }
    }

    fn run(&mut self) -> Result<(), FlatLemma> {
        let res = (|| {
            for ci in 0..self.g.positive.len() {
                self.filter(ci, true)?;
            }
            self.findmatch(0)
        })();
        res.map_err(|l| {
            let l = self.unwind(l, 0);
            debug_assert!(l.is_empty());
            self.remember(&l);
            l
        })
    }

    fn assign(&mut self, v: Var, x: Const) {
        self.pos[v.index()] = self.theta.len();
        self.theta.assign(v, x).expect("unassigned");
    }

    /// `vΘ_q`: the value of `v` among the first `q` assignments.
    fn get_q(&self, v: Var, q: usize) -> Option<Const> {
        self.theta.get(v).filter(|_| self.pos[v.index()] < q)
    }

    fn implies_blocking(&self, ci: usize, s: &Substlet) -> bool {
        self.clause_blockings[ci].iter().any(|&b| self.theta.with_makes_true(s, self.g.negative[b].substlet()))
    }

    /// Drops members conflicting with `Θ` or implying a blocking together
    /// with it, then assigns the values the survivors agree on.
    fn filter(&mut self, ci: usize, force_propagate: bool) -> Result<(), FlatLemma> {
        let q = self.theta.len();
        let c = self.clauses.original(ci);
        let cur = self.clauses.current_indices(ci);
        let keep: Vec<u32> = cur
            .iter()
            .copied()
            .filter(|&j| {
                let s = &c.members()[j as usize];
                !self.theta.conflicts(s) && !self.implies_blocking(ci, s)
            })
            .collect();
        if keep.is_empty() {
            self.stats.conflicts += 1;
            return Err(self.derive(ci, q, &|_| None));
        }
        let shrunk = keep.len() < cur.len();
        if shrunk {
            self.clauses.refine(ci, &keep).expect("strict subset");
        }
        if shrunk || force_propagate {
            self.propagate(ci, q);
        }
        Ok(())
    }

    fn propagate(&mut self, ci: usize, q: usize) {
        let start = self.theta.len();
        let c = self.clauses.original(ci);
        let cur = self.clauses.current_indices(ci);
        let first = &c.members()[cur[0] as usize];
        let mut agreed = Vec::new();
        for (p, &v) in c.domain().iter().enumerate() {
            if self.theta.is_assigned(v) {
                continue;
            }
            let x = first.vals()[p];
            if cur.iter().all(|&j| c.members()[j as usize].vals()[p] == x) {
                agreed.push((v, x));
            }
        }
        if agreed.is_empty() {
            return;
        }
        self.stats.propagations += agreed.len() as u64;
        for (v, x) in agreed {
            self.assign(v, x);
        }
        self.batches.push(Batch { start, clause: ci, q, decision: false });
    }

    /// A lemma false under `Θ_q` built from the original clause `ci`: each
    /// member contributes a conflicting assignment, the σ-resolvent of a
    /// blocking it implies, or the lemma `case3` supplies for it. Variables
    /// of the clause unassigned in `Θ_q` are then dropped.
    fn derive(&self, ci: usize, q: usize, case3: &dyn Fn(u32) -> Option<FlatLemma>) -> FlatLemma {
        let c = self.clauses.original(ci);
        let mut out = FlatLemma::new();
        for (j, s) in c.members().iter().enumerate() {
            let conflict = s
                .iter()
                .filter(|&(v, x)| self.get_q(v, q).is_some_and(|y| y != x))
                .min_by_key(|(v, _)| self.pos[v.index()]);
            if let Some((v, x)) = conflict {
                out.add(v, x);
                continue;
            }
            let blocked = self.clause_blockings[ci].iter().find(|&&b| {
                self.g.negative[b].substlet().iter().all(|(v, x)| self.get_q(v, q) == Some(x) || s.get(v) == Some(x))
            });
            if let Some(&b) = blocked {
                out.union_with(&self.sigma_res[b]);
                continue;
            }
            let l = case3(j as u32).expect("member neither conflicts nor is blocked, so a branch lemma exists");
            out.union_with(&l);
        }
        for &v in c.domain() {
            if self.get_q(v, q).is_none() {
                out.remove_var(v);
            }
        }
        debug_assert!(out.is_false_under(&self.prefix(q)));
        out
    }

    fn prefix(&self, q: usize) -> Substitution {
        let mut t = Substitution::new();
        for &(v, x) in &self.theta.assignments()[..q] {
            t.assign(v, x).expect("no repeats");
        }
        t
    }

    /// Rewrites a lemma false under the trail into one false under its first
    /// `target` assignments by resolving away propagation batches.
    fn unwind(&self, mut l: FlatLemma, target: usize) -> FlatLemma {
        loop {
            let Some(top) = l.vars().map(|v| self.pos[v.index()]).max() else {
                return l;
            };
            if top < target {
                return l;
            }
            let b = self.batches[self.batches.partition_point(|b| b.start <= top) - 1];
            debug_assert!(!b.decision, "decision batches lie below the target");
            let prev = l;
            l = self.derive(b.clause, b.q, &|_| Some(prev.clone()));
        }
    }

    fn remember(&mut self, l: &FlatLemma) {
        let idx = self.store.len();
        for v in l.vars() {
            self.store_by_var[v.index()].push(idx);
        }
        self.store.push(l.clone());
        self.stats.lemmas += 1;
    }

    fn findmatch(&mut self, mut s: usize) -> Result<(), FlatLemma> {
        while s < self.theta.len() {
            let (v, _) = self.theta.assignments()[s];
            if let Some(&li) = self.store_by_var[v.index()].iter().find(|&&li| self.store[li].is_false_under(&self.theta)) {
                self.stats.conflicts += 1;
                return Err(self.store[li].clone());
            }
            for k in 0..self.affected[v.index()].len() {
                let ci = self.affected[v.index()][k];
                self.filter(ci, false)?;
            }
            s += 1;
        }
        let pick = (0..self.clauses.num_clauses())
            .filter(|&ci| self.clauses.current_len(ci) > 1)
            .min_by_key(|&ci| (self.clauses.current_len(ci), ci));
        let Some(ci) = pick else {
            return Ok(());
        };
        let c = self.clauses.original(ci);
        let mut items: Vec<(u32, &Substlet)> =
            self.clauses.current_indices(ci).iter().map(|&j| (j, &c.members()[j as usize])).collect();
        self.cfg.branch_order.order_substlets(&mut items);
        let order: Vec<u32> = items.into_iter().map(|(j, _)| j).collect();

        let level = self.theta.len();
        let mark = self.clauses.mark();
        let nb = self.batches.len();
        let mut branch_lemmas: Vec<(u32, FlatLemma)> = Vec::with_capacity(order.len());
        for j in order {
            self.stats.decisions += 1;
            self.clauses.refine(ci, &[j]).expect("picked clause has several members");
            let start = self.theta.len();
            let s_j = self.clauses.original(ci).members()[j as usize].clone();
            for (v, x) in s_j.iter() {
                if !self.theta.is_assigned(v) {
                    self.assign(v, x);
                }
            }
            self.batches.push(Batch { start, clause: ci, q: start, decision: true });
            let target = self.theta.len();
            match self.findmatch(start) {
                Ok(()) => return Ok(()),
                Err(l) => {
                    let l = self.unwind(l, target);
                    self.theta.truncate(level);
                    self.clauses.restore(mark).expect("mark from this level");
                    self.batches.truncate(nb);
                    if l.is_false_under(&self.theta) {
                        self.remember(&l);
                        return Err(l);
                    }
                    branch_lemmas.push((j, l));
                }
            }
        }
        let l = self.derive(ci, level, &|j| branch_lemmas.iter().find(|(k, _)| *k == j).map(|(_, l)| l.clone()));
        self.remember(&l);
        Err(l)
    }
}

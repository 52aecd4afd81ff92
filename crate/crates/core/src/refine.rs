//! Solving by shrinking variable domains.
//!
//! Every variable starts with all constants of the clauses as its domain.
//! Domains shrink on a substitution stack, clauses on a refinement stack,
//! and every propagated domain entry records the lemma that justified it.
//! Branching splits a domain into parts.

use crate::lemma::{sigma_resolvent_smallest, v_resolvent, FlatLemma};
use crate::solver::{SolveOutput, SolveResult, SolveStats, SolverConfig, Split};
use crate::stacks::{RefinementStack, SubstitutionStack};
use crate::translate::{preprocess, Preprocessed};
use crate::types::{is_solution, Const, Gcsp, Substitution, Var};

/// Status of a lemma under a substitution stack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProductivityStatus {
    True,
    False,
    /// All variables but `w` are false; narrowing `w` to `W ∩ wΘ` is licensed.
    Productive { w: Var, narrowed: Vec<Const> },
    Inert,
}

/// Classifies `l` against the current domains of `dom`.
pub fn productivity(l: &FlatLemma, dom: &SubstitutionStack) -> ProductivityStatus {
    let mut open: Option<(Var, Vec<Const>)> = None;
    let mut several = false;
    for (v, set) in l.iter() {
        let meet: Vec<Const> = dom.domain(v).filter(|&x| set.contains(x)).collect();
        if meet.is_empty() {
            continue;
        }
        if meet.len() == dom.domain_len(v) {
            return ProductivityStatus::True;
        }
        if open.is_some() {
            several = true;
        } else {
            open = Some((v, meet));
        }
    }
    match open {
        None => ProductivityStatus::False,
        Some(_) if several => ProductivityStatus::Inert,
        Some((w, narrowed)) => ProductivityStatus::Productive { w, narrowed },
    }
}

fn is_false(l: &FlatLemma, dom: &SubstitutionStack) -> bool {
    l.iter().all(|(v, set)| !dom.domain(v).any(|x| set.contains(x)))
}

struct Search<'a> {
    g: &'a Gcsp,
    cfg: &'a SolverConfig,
    dom: SubstitutionStack,
    /// Parallel to `dom` entries: the lemma behind a propagated entry.
    reasons: Vec<Option<FlatLemma>>,
    clauses: RefinementStack,
    clauses_of: Vec<Vec<usize>>,
    blockings_of: Vec<Vec<usize>>,
    sigma_res: Vec<FlatLemma>,
    store: Vec<FlatLemma>,
    store_by_var: Vec<Vec<usize>>,
    stats: SolveStats,
}

/// Solves `gcsp` (preprocessing it first).
pub fn solve_refining(gcsp: &Gcsp, cfg: &SolverConfig) -> SolveOutput {
    let g = match preprocess(gcsp) {
        Preprocessed::TriviallyUnsat(r) => {
            return SolveOutput { result: SolveResult::TriviallyUnsat(r), stats: SolveStats::default(), learned: vec![] }
        }
        Preprocessed::Simplified(g) => g,
    };
    let mut s = Search::new(&g, cfg);
    let base = s.dom.base();
    let seeded = match s.store.iter().find(|l| l.is_empty()) {
        Some(l) => Err(l.clone()),
        None => s.findmatch(0, 0),
    };
    let result = match seeded {
        Ok(()) => {
            let theta = s.point();
            assert!(is_solution(gcsp, &theta), "refining produced a non-solution");
            SolveResult::Sat(theta)
        }
        Err(l) => {
            let l = s.unwind(l, base);
            debug_assert!(l.is_empty());
            s.remember(&l);
            SolveResult::Unsat(l)
        }
    };
    SolveOutput { result, stats: s.stats, learned: s.store }
}

impl<'a> Search<'a> {
    fn new(g: &'a Gcsp, cfg: &'a SolverConfig) -> Self {
        let nv = g.num_vars();
        let dom = SubstitutionStack::new(&g.clause_vars(), &g.clause_consts());
        let mut clauses_of = vec![Vec::new(); nv];
        for (ci, c) in g.positive.iter().enumerate() {
            for v in c.domain() {
                clauses_of[v.index()].push(ci);
            }
        }
        let mut blockings_of = vec![Vec::new(); nv];
        for (bi, b) in g.negative.iter().enumerate() {
            for v in b.vars() {
                blockings_of[v.index()].push(bi);
            }
        }
        let sigma_res: Vec<FlatLemma> = g
            .negative
            .iter()
            .map(|b| sigma_resolvent_smallest(b, &g.positive).expect("range restricted"))
            .collect();
        let mut s = Search {
            g,
            cfg,
            reasons: vec![None; dom.len()],
            dom,
            clauses: RefinementStack::new(g.positive.clone()),
            clauses_of,
            blockings_of,
            sigma_res,
            store: Vec::new(),
            store_by_var: vec![Vec::new(); nv],
            stats: SolveStats::default(),
        };
        if cfg.precompute_sigma {
            for l in s.sigma_res.clone() {
                s.remember(&l);
            }
        }
        s
    }

    fn point(&self) -> Substitution {
        let mut t = Substitution::new();
        for &v in self.dom.vars() {
            let x = self.dom.domain(v).next().expect("non-empty domain");
            t.assign(v, x).expect("distinct variables");
        }
        t
    }

    fn remember(&mut self, l: &FlatLemma) {
        let idx = self.store.len();
        for v in l.vars() {
            self.store_by_var[v.index()].push(idx);
        }
        self.store.push(l.clone());
        self.stats.lemmas += 1;
    }

    /// Narrows `w` to `reason(w) ∩ wΘ`, or returns the reason when that is
    /// empty.
    fn narrow(&mut self, w: Var, reason: FlatLemma) -> Result<(), FlatLemma> {
        let kept: Vec<Const> = match reason.get(w) {
            Some(set) => self.dom.domain(w).filter(|&x| set.contains(x)).collect(),
            None => Vec::new(),
        };
        if kept.is_empty() {
            self.stats.conflicts += 1;
            return Err(reason);
        }
        if kept.len() == self.dom.domain_len(w) {
            return Ok(());
        }
        self.dom.domain_refine(w, &kept).expect("strict subset");
        self.reasons.push(Some(reason));
        self.stats.propagations += 1;
        Ok(())
    }

    /// One assignment per member of the original clause outside the current
    /// refinement, each excluded by the current domains.
    fn dropped_projection(&self, ci: usize, all: bool) -> FlatLemma {
        let c = self.clauses.original(ci);
        let mut out = FlatLemma::new();
        for (j, s) in c.members().iter().enumerate() {
            if !all && self.clauses.is_active(ci, j as u32) {
                continue;
            }
            let (v, x) = s.iter().find(|&(v, x)| !self.dom.contains(v, x)).expect("dropped members conflict with the domains");
            out.add(v, x);
        }
        out
    }

    fn subst_step(&mut self, k: usize) -> Result<(), FlatLemma> {
        let v = self.dom.entry_var(k);
        for i in 0..self.store_by_var[v.index()].len() {
            let li = self.store_by_var[v.index()][i];
            match productivity(&self.store[li], &self.dom) {
                ProductivityStatus::False => {
                    self.stats.conflicts += 1;
                    return Err(self.store[li].clone());
                }
                ProductivityStatus::Productive { w, .. } => {
                    let l = self.store[li].clone();
                    self.narrow(w, l)?;
                }
                _ => {}
            }
        }
        if self.dom.domain_len(v) == 1 && !self.cfg.precompute_sigma {
            for &bi in &self.blockings_of[v.index()] {
                let hit = self.g.negative[bi].substlet().iter().all(|(u, x)| self.dom.domain_len(u) == 1 && self.dom.contains(u, x));
                if hit {
                    self.stats.conflicts += 1;
                    return Err(self.sigma_res[bi].clone());
                }
            }
        }
        for i in 0..self.clauses_of[v.index()].len() {
            let ci = self.clauses_of[v.index()][i];
            let dom = &self.dom;
            if self.clauses.refine_where(ci, |s| s.iter().all(|(u, x)| dom.contains(u, x))) == 0 {
                self.stats.conflicts += 1;
                return Err(self.dropped_projection(ci, true));
            }
        }
        Ok(())
    }

    fn clauses_step(&mut self, ci: usize) -> Result<(), FlatLemma> {
        let c = self.clauses.original(ci).clone();
        for (p, &v) in c.domain().iter().enumerate() {
            let mut vals: Vec<Const> = self.clauses.current_indices(ci).iter().map(|&j| c.members()[j as usize].vals()[p]).collect();
            vals.sort();
            vals.dedup();
            if self.dom.domain(v).all(|x| vals.binary_search(&x).is_ok()) {
                continue;
            }
            let mut reason = self.dropped_projection(ci, false);
            for &x in &vals {
                reason.add(v, x);
            }
            self.narrow(v, reason)?;
        }
        Ok(())
    }

    /// Runs SUBST over domain entries from `s` and CLAUSES over clause
    /// entries from `k` until neither has pending work.
    fn forward(&mut self, mut s: usize, mut k: usize) -> Result<(), FlatLemma> {
        loop {
            if s < self.dom.len() {
                if self.dom.is_current(s) {
                    self.subst_step(s)?;
                }
                s += 1;
            } else if k < self.clauses.len() {
                if self.clauses.is_current(k) {
                    self.clauses_step(self.clauses.entry_clause(k))?;
                }
                k += 1;
            } else {
                return Ok(());
            }
        }
    }

    /// Position of the entry on which the falsehood of `l` depends last.
    fn dependency(&self, l: &FlatLemma) -> Option<usize> {
        l.iter()
            .map(|(v, set)| {
                let mut e = self.dom.current_entry(v);
                while let Some(p) = self.dom.entry_prev(e) {
                    if self.dom.entry_domain(p).any(|x| set.contains(x)) {
                        break;
                    }
                    e = p;
                }
                e
            })
            .max()
    }

    fn unwind(&self, mut l: FlatLemma, target: usize) -> FlatLemma {
        while let Some(e) = self.dependency(&l) {
            if e < target {
                break;
            }
            let w = self.dom.entry_var(e);
            let rho = self.reasons[e].as_ref().expect("propagated entries above the target have reasons");
            l = v_resolvent(w, [&l, rho]);
        }
        l
    }

    fn parts(&self, v: Var) -> Vec<Vec<Const>> {
        let vals: Vec<Const> = self.dom.domain(v).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let mut parts = match self.cfg.split {
            Split::Singletons => vals.iter().map(|&x| vec![x]).collect(),
            Split::Halves => {
                let mid = vals.len().div_ceil(2);
                vec![vals[..mid].to_vec(), vals[mid..].to_vec()]
            }
        };
        self.cfg.branch_order.order_parts(v, &mut parts);
        parts
    }

    fn findmatch(&mut self, s: usize, k: usize) -> Result<(), FlatLemma> {
        self.forward(s, k)?;
        let pick = self
            .dom
            .vars()
            .iter()
            .copied()
            .filter(|&v| self.dom.domain_len(v) > 1)
            .min_by_key(|&v| (self.dom.domain_len(v), v));
        let Some(v) = pick else {
            return Ok(());
        };
        let dmark = self.dom.mark();
        let cmark = self.clauses.mark();
        let mut lemmas = Vec::new();
        for part in self.parts(v) {
            self.stats.decisions += 1;
            let k = self.clauses.len();
            self.dom.domain_refine(v, &part).expect("proper part");
            self.reasons.push(None);
            let target = self.dom.len();
            match self.findmatch(target - 1, k) {
                Ok(()) => return Ok(()),
                Err(l) => {
                    let l = self.unwind(l, target);
                    self.dom.restore(dmark).expect("mark from this level");
                    self.reasons.truncate(self.dom.len());
                    self.clauses.restore(cmark).expect("mark from this level");
                    if is_false(&l, &self.dom) {
                        self.remember(&l);
                        return Err(l);
                    }
                    lemmas.push(l);
                }
            }
        }
        let l = v_resolvent(v, &lemmas);
        debug_assert!(is_false(&l, &self.dom));
        self.remember(&l);
        Err(l)
    }
}

//! Flat lemmas `{v1/V1, ..., vn/Vn}` and the three derivation rules.

use std::collections::BTreeMap;
use std::fmt;

use crate::types::{Blocking, Clause, Const, ConstSet, Substitution, Substlet, Symbols, Var};

/// A lemma read as "some `v` takes a value in `λ(v)`". Variables mapped to
/// the empty set are omitted.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct FlatLemma {
    entries: BTreeMap<Var, ConstSet>,
}

impl FlatLemma {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Var, Vec<Const>)>) -> Self {
        let mut l = FlatLemma::new();
        for (v, cs) in entries {
            for c in cs {
                l.add(v, c);
            }
        }
        l
    }

    /// `λ(v)`, empty when absent.
    pub fn get(&self, v: Var) -> Option<&ConstSet> {
        self.entries.get(&v)
    }

    pub fn contains(&self, v: Var, c: Const) -> bool {
        self.entries.get(&v).is_some_and(|s| s.contains(c))
    }

    pub fn add(&mut self, v: Var, c: Const) {
        self.entries.entry(v).or_default().insert(c);
    }

    pub fn add_set(&mut self, v: Var, cs: &ConstSet) {
        if !cs.is_empty() {
            self.entries.entry(v).or_default().union_with(cs);
        }
    }

    pub fn remove_var(&mut self, v: Var) {
        self.entries.remove(&v);
    }

    pub fn union_with(&mut self, other: &FlatLemma) {
        for (&v, cs) in &other.entries {
            self.add_set(v, cs);
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &ConstSet)> + '_ {
        self.entries.iter().map(|(&v, s)| (v, s))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// The empty lemma, false under every substitution.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Some assigned `v` has `vΘ ∈ λ(v)`.
    pub fn is_true_under(&self, theta: &Substitution) -> bool {
        self.entries.iter().any(|(&v, s)| theta.get(v).is_some_and(|x| s.contains(x)))
    }

    /// Every `v` of the lemma is assigned with `vΘ ∉ λ(v)`.
    pub fn is_false_under(&self, theta: &Substitution) -> bool {
        self.entries.iter().all(|(&v, s)| theta.get(v).is_some_and(|x| !s.contains(x)))
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> LemmaDisplay<'a> {
        LemmaDisplay { l: self, symbols }
    }
}

impl fmt::Debug for FlatLemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter().map(|(v, s)| (v.0, s))).finish()
    }
}

pub struct LemmaDisplay<'a> {
    l: &'a FlatLemma,
    symbols: &'a Symbols,
}

impl fmt::Display for LemmaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .l
            .iter()
            .map(|(v, s)| {
                let cs: Vec<String> = s.iter().map(|c| self.symbols.const_name(c)).collect();
                format!("{}/{{{}}}", self.symbols.var_name(v), cs.join(","))
            })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `{v/∩λj(v)} ∪ {v'/∪λj(v') | v' ≠ v}`.
pub fn v_resolvent<'a>(v: Var, lemmas: impl IntoIterator<Item = &'a FlatLemma>) -> FlatLemma {
    let mut out = FlatLemma::new();
    let mut pivot: Option<ConstSet> = None;
    for l in lemmas {
        let here = l.get(v).cloned().unwrap_or_default();
        match &mut pivot {
            None => pivot = Some(here),
            Some(p) => p.intersect_with(&here),
        }
        for (w, s) in l.iter() {
            if w != v {
                out.add_set(w, s);
            }
        }
    }
    if let Some(p) = pivot {
        out.add_set(v, &p);
    }
    out
}

/// A projection of `c`: for every member, `choose` picks one of its
/// assignments to include.
pub fn projection(c: &Clause, mut choose: impl FnMut(&Substlet) -> (Var, Const)) -> FlatLemma {
    let mut out = FlatLemma::new();
    for s in c.members() {
        let (v, x) = choose(s);
        debug_assert_eq!(s.get(v), Some(x));
        out.add(v, x);
    }
    out
}

/// True iff every member of `c` has an assignment `v/x` with `x ∈ λ(v)`.
pub fn is_projection(lemma: &FlatLemma, c: &Clause) -> bool {
    c.members().iter().all(|s| s.iter().any(|(v, x)| lemma.contains(v, x)))
}

/// σ-resolvent: for each blocking variable `vi` with chosen clause `ci`,
/// `Vi` collects the values `≠ xi` that members of `ci` give `vi`.
pub fn sigma_resolvent(sigma: &Blocking, chosen: &[&Clause]) -> FlatLemma {
    debug_assert_eq!(sigma.vars().len(), chosen.len());
    let mut out = FlatLemma::new();
    for ((v, x), c) in sigma.substlet().iter().zip(chosen) {
        let pos = c.var_position(v).expect("chosen clause covers the variable");
        for s in c.members() {
            let y = s.vals()[pos];
            if y != x {
                out.add(v, y);
            }
        }
    }
    out
}

/// σ-resolvent choosing, per blocking variable, the covering clause with
/// the fewest distinct values for it (ties by lowest index). `None` when
/// some variable is covered by no clause.
pub fn sigma_resolvent_smallest(sigma: &Blocking, clauses: &[Clause]) -> Option<FlatLemma> {
    let mut chosen = Vec::with_capacity(sigma.vars().len());
    for &v in sigma.vars() {
        let best = clauses
            .iter()
            .filter_map(|c| {
                let p = c.var_position(v)?;
                let vals: ConstSet = c.members().iter().map(|s| s.vals()[p]).collect();
                Some((vals.len(), c))
            })
            .min_by_key(|(n, _)| *n)?;
        chosen.push(best.1);
    }
    Some(sigma_resolvent(sigma, &chosen))
}

/// True iff the substitution `{s}` merged with `theta` satisfies the blocking.
pub fn implies_with(theta: &Substitution, s: &Substlet, sigma: &Blocking) -> bool {
    theta.with_makes_true(s, sigma.substlet())
}

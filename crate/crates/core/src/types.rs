//! Core vocabulary: variables, constants, substlets, clauses, blockings,
//! substitutions and the conflict/truth relations between them.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// An interned variable. Ids are dense per instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

/// An interned constant. Ids are dense per instance and totally ordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Const(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Const {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bidirectional name table for one kind of symbol.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Names for the variables and constants of an instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    pub vars: Interner,
    pub consts: Interner,
}

impl Symbols {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: &str) -> Var {
        Var(self.vars.intern(name))
    }

    pub fn constant(&mut self, name: &str) -> Const {
        Const(self.consts.intern(name))
    }

    pub fn var_name(&self, v: Var) -> String {
        if v.index() < self.vars.len() {
            self.vars.name(v.0).to_string()
        } else {
            format!("V{}", v.0)
        }
    }

    pub fn const_name(&self, c: Const) -> String {
        if c.index() < self.consts.len() {
            self.consts.name(c.0).to_string()
        } else {
            format!("c{}", c.0)
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubstletError {
    #[error("domain and image lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("variable {0:?} repeated in substlet domain")]
    RepeatedVariable(Var),
}

/// A small substitution `(v1,...,vn) / (x1,...,xn)`.
///
/// The domain is kept sorted by variable id, so two substlets are equal
/// exactly when their assignment sets are equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substlet {
    vars: Vec<Var>,
    vals: Vec<Const>,
}

impl Substlet {
    pub fn new(vars: Vec<Var>, vals: Vec<Const>) -> Result<Self, SubstletError> {
        if vars.len() != vals.len() {
            return Err(SubstletError::LengthMismatch(vars.len(), vals.len()));
        }
        let mut pairs: Vec<(Var, Const)> = vars.into_iter().zip(vals).collect();
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SubstletError::RepeatedVariable(w[0].0));
            }
        }
        Ok(Self::from_sorted_pairs(pairs))
    }

    /// Builds a substlet from `(var, const)` pairs in any order.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Const)>) -> Result<Self, SubstletError> {
        let (vars, vals) = pairs.into_iter().unzip();
        Self::new(vars, vals)
    }

    fn from_sorted_pairs(pairs: Vec<(Var, Const)>) -> Self {
        let (vars, vals) = pairs.into_iter().unzip();
        Substlet { vars, vals }
    }

    pub fn empty() -> Self {
        Substlet { vars: Vec::new(), vals: Vec::new() }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn vals(&self) -> &[Const] {
        &self.vals
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, Const)> + '_ {
        self.vars.iter().copied().zip(self.vals.iter().copied())
    }

    /// Value assigned to `v`, if `v` is in the domain.
    pub fn get(&self, v: Var) -> Option<Const> {
        self.vars.binary_search(&v).ok().map(|i| self.vals[i])
    }

    /// True iff some shared variable is mapped to different constants.
    pub fn conflicts(&self, other: &Substlet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() && j < other.vars.len() {
            match self.vars[i].cmp(&other.vars[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if self.vals[i] != other.vals[j] {
                        return true;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        false
    }

    /// True iff every assignment of `other` also occurs in `self`.
    pub fn implies(&self, other: &Substlet) -> bool {
        other.iter().all(|(v, x)| self.get(v) == Some(x))
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> SubstletDisplay<'a> {
        SubstletDisplay { s: self, symbols }
    }
}

pub struct SubstletDisplay<'a> {
    s: &'a Substlet,
    symbols: &'a Symbols,
}

impl fmt::Display for SubstletDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self.s.vars.iter().map(|&v| self.symbols.var_name(v)).collect();
        let vals: Vec<String> = self.s.vals.iter().map(|&c| self.symbols.const_name(c)).collect();
        write!(f, "({})/({})", vars.join(","), vals.join(","))
    }
}

/// True iff `a` and `b` assign some shared variable differently.
pub fn substlets_conflict(a: &Substlet, b: &Substlet) -> bool {
    a.conflicts(b)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClauseError {
    #[error("substlet {index} does not have the clause domain")]
    DomainMismatch { index: usize },
}

/// A set of substlets over one shared domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    domain: Vec<Var>,
    members: Vec<Substlet>,
}

impl Clause {
    /// Builds a clause over `domain`, removing duplicate members.
    /// The domain is sorted; members keep their first-occurrence order.
    pub fn new(domain: Vec<Var>, members: Vec<Substlet>) -> Result<Self, ClauseError> {
        let mut domain = domain;
        domain.sort();
        domain.dedup();
        let mut out: Vec<Substlet> = Vec::with_capacity(members.len());
        for (index, s) in members.into_iter().enumerate() {
            if s.vars() != domain.as_slice() {
                return Err(ClauseError::DomainMismatch { index });
            }
            if !out.contains(&s) {
                out.push(s);
            }
        }
        Ok(Clause { domain, members: out })
    }

    /// Clause from value rows over `domain` (rows given in domain order).
    pub fn from_rows(domain: &[Var], rows: &[Vec<Const>]) -> Result<Self, SubstletError> {
        let mut members = Vec::with_capacity(rows.len());
        for row in rows {
            members.push(Substlet::new(domain.to_vec(), row.clone())?);
        }
        let domain = members.first().map(|s| s.vars().to_vec()).unwrap_or_else(|| {
            let mut d = domain.to_vec();
            d.sort();
            d
        });
        Ok(Clause::new(domain, members).expect("rows share the domain"))
    }

    pub fn domain(&self) -> &[Var] {
        &self.domain
    }

    pub fn members(&self) -> &[Substlet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.domain.binary_search(&v).is_ok()
    }

    /// Position of `v` inside the domain.
    pub fn var_position(&self, v: Var) -> Option<usize> {
        self.domain.binary_search(&v).ok()
    }

    /// Keeps the members satisfying `keep`.
    pub fn retain(&mut self, keep: impl FnMut(&Substlet) -> bool) {
        self.members.retain(keep);
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> ClauseDisplay<'a> {
        ClauseDisplay { c: self, symbols }
    }
}

pub struct ClauseDisplay<'a> {
    c: &'a Clause,
    symbols: &'a Symbols,
}

impl fmt::Display for ClauseDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self.c.domain.iter().map(|&v| self.symbols.var_name(v)).collect();
        write!(f, "({}) /", vars.join(","))?;
        for (i, s) in self.c.members.iter().enumerate() {
            let vals: Vec<String> = s.vals().iter().map(|&c| self.symbols.const_name(c)).collect();
            if i > 0 {
                write!(f, " |")?;
            }
            write!(f, " ({})", vals.join(","))?;
        }
        Ok(())
    }
}

/// A negative constraint: no solution may make the substlet true.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Blocking(pub Substlet);

impl Blocking {
    pub fn substlet(&self) -> &Substlet {
        &self.0
    }

    pub fn vars(&self) -> &[Var] {
        self.0.vars()
    }
}

/// Three-valued truth status of a clause under a partial substitution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClauseStatus {
    True,
    False,
    Undecided,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("substlets {first} and {second} are in conflict")]
pub struct ConflictError {
    pub first: usize,
    pub second: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("variable {0:?} is already assigned")]
pub struct AlreadyAssigned(pub Var);

/// A partial assignment kept as a stack, with an id-indexed lookup table.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    trail: Vec<(Var, Const)>,
    index: Vec<Option<Const>>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(num_vars: usize) -> Self {
        Substitution { trail: Vec::with_capacity(num_vars), index: vec![None; num_vars] }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Const)>) -> Result<Self, AlreadyAssigned> {
        let mut theta = Substitution::new();
        for (v, x) in pairs {
            theta.assign(v, x)?;
        }
        Ok(theta)
    }

    #[inline]
    pub fn get(&self, v: Var) -> Option<Const> {
        self.index.get(v.index()).copied().flatten()
    }

    #[inline]
    pub fn is_assigned(&self, v: Var) -> bool {
        self.get(v).is_some()
    }

    pub fn assign(&mut self, v: Var, x: Const) -> Result<(), AlreadyAssigned> {
        if self.is_assigned(v) {
            return Err(AlreadyAssigned(v));
        }
        if v.index() >= self.index.len() {
            self.index.resize(v.index() + 1, None);
        }
        self.index[v.index()] = Some(x);
        self.trail.push((v, x));
        Ok(())
    }

    /// Number of assignments.
    pub fn len(&self) -> usize {
        self.trail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trail.is_empty()
    }

    /// Assignments in the order they were made.
    pub fn assignments(&self) -> &[(Var, Const)] {
        &self.trail
    }

    /// Drops every assignment after the first `len`.
    pub fn truncate(&mut self, len: usize) {
        while self.trail.len() > len {
            let (v, _) = self.trail.pop().expect("non-empty");
            self.index[v.index()] = None;
        }
    }

    /// Assignments sorted by variable id.
    pub fn sorted_pairs(&self) -> Vec<(Var, Const)> {
        let mut p = self.trail.clone();
        p.sort();
        p
    }

    /// True iff every assignment of `s` is present.
    pub fn makes_true(&self, s: &Substlet) -> bool {
        s.iter().all(|(v, x)| self.get(v) == Some(x))
    }

    /// True iff some variable of `s` is assigned to a different value.
    pub fn conflicts(&self, s: &Substlet) -> bool {
        s.iter().any(|(v, x)| matches!(self.get(v), Some(y) if y != x))
    }

    /// True iff `self ∪ s` makes `target` true (assumes `s` does not
    /// conflict with `self`).
    pub fn with_makes_true(&self, s: &Substlet, target: &Substlet) -> bool {
        target.iter().all(|(v, x)| self.get(v) == Some(x) || s.get(v) == Some(x))
    }

    pub fn clause_status(&self, c: &Clause) -> ClauseStatus {
        clause_status(self, c)
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> SubstitutionDisplay<'a> {
        SubstitutionDisplay { theta: self, symbols }
    }
}

impl PartialEq for Substitution {
    fn eq(&self, other: &Self) -> bool {
        self.sorted_pairs() == other.sorted_pairs()
    }
}

impl Eq for Substitution {}

pub struct SubstitutionDisplay<'a> {
    theta: &'a Substitution,
    symbols: &'a Symbols,
}

impl fmt::Display for SubstitutionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .theta
            .sorted_pairs()
            .into_iter()
            .map(|(v, x)| format!("{}:={}", self.symbols.var_name(v), self.symbols.const_name(x)))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Merges pairwise non-conflicting substlets into one substitution.
pub fn merge(substlets: &[Substlet]) -> Result<Substitution, ConflictError> {
    for i in 0..substlets.len() {
        for j in i + 1..substlets.len() {
            if substlets[i].conflicts(&substlets[j]) {
                return Err(ConflictError { first: i, second: j });
            }
        }
    }
    let mut theta = Substitution::new();
    for s in substlets {
        for (v, x) in s.iter() {
            if !theta.is_assigned(v) {
                theta.assign(v, x).expect("unassigned");
            }
        }
    }
    Ok(theta)
}

pub fn subst_makes_substlet_true(theta: &Substitution, s: &Substlet) -> bool {
    theta.makes_true(s)
}

pub fn subst_conflicts_substlet(theta: &Substitution, s: &Substlet) -> bool {
    theta.conflicts(s)
}

pub fn clause_status(theta: &Substitution, c: &Clause) -> ClauseStatus {
    let mut all_conflict = true;
    for s in c.members() {
        if theta.makes_true(s) {
            return ClauseStatus::True;
        }
        if !theta.conflicts(s) {
            all_conflict = false;
        }
    }
    if all_conflict {
        ClauseStatus::False
    } else {
        ClauseStatus::Undecided
    }
}

/// A generalized constraint satisfaction problem `(Σ⁺, Σ⁻)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Gcsp {
    pub positive: Vec<Clause>,
    pub negative: Vec<Blocking>,
    pub symbols: Symbols,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("blocking {blocking} uses variable {var:?} which is the domain of no clause")]
pub struct NotRangeRestricted {
    pub blocking: usize,
    pub var: Var,
}

impl Gcsp {
    pub fn new(positive: Vec<Clause>, negative: Vec<Blocking>, symbols: Symbols) -> Self {
        Gcsp { positive, negative, symbols }
    }

    /// One more than the largest variable id in use (or the symbol count).
    pub fn num_vars(&self) -> usize {
        let used = self
            .positive
            .iter()
            .flat_map(|c| c.domain().iter())
            .chain(self.negative.iter().flat_map(|b| b.vars().iter()))
            .map(|v| v.index() + 1)
            .max()
            .unwrap_or(0);
        used.max(self.symbols.vars.len())
    }

    /// One more than the largest constant id in use (or the symbol count).
    pub fn num_consts(&self) -> usize {
        let used = self
            .positive
            .iter()
            .flat_map(|c| c.members().iter().flat_map(|s| s.vals().iter()))
            .chain(self.negative.iter().flat_map(|b| b.substlet().vals().iter()))
            .map(|c| c.index() + 1)
            .max()
            .unwrap_or(0);
        used.max(self.symbols.consts.len())
    }

    /// Variables occurring in some clause domain, sorted.
    pub fn clause_vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.positive.iter().flat_map(|c| c.domain().iter().copied()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Constants occurring in some clause member, sorted.
    pub fn clause_consts(&self) -> Vec<Const> {
        let mut cs: Vec<Const> = self
            .positive
            .iter()
            .flat_map(|c| c.members().iter().flat_map(|s| s.vals().iter().copied()))
            .collect();
        cs.sort();
        cs.dedup();
        cs
    }

    pub fn check_range_restricted(&self) -> Result<(), NotRangeRestricted> {
        for (i, b) in self.negative.iter().enumerate() {
            for &v in b.vars() {
                if !self.positive.iter().any(|c| c.contains_var(v)) {
                    return Err(NotRangeRestricted { blocking: i, var: v });
                }
            }
        }
        Ok(())
    }

    /// Pairs of variables occurring together in some blocking.
    pub fn connected(&self, a: Var, b: Var) -> bool {
        self.negative.iter().any(|s| s.vars().contains(&a) && s.vars().contains(&b))
    }

    pub fn display(&self) -> GcspDisplay<'_> {
        GcspDisplay { g: self }
    }
}

pub struct GcspDisplay<'a> {
    g: &'a Gcsp,
}

impl fmt::Display for GcspDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.g.positive {
            writeln!(f, "{}", c.display(&self.g.symbols))?;
        }
        writeln!(f, "----")?;
        for b in &self.g.negative {
            writeln!(f, "{}", b.substlet().display(&self.g.symbols))?;
        }
        Ok(())
    }
}

/// Definition-level solution check.
pub fn is_solution(gcsp: &Gcsp, theta: &Substitution) -> bool {
    gcsp.positive.iter().all(|c| c.members().iter().any(|s| theta.makes_true(s)))
        && !gcsp.negative.iter().any(|b| theta.makes_true(b.substlet()))
}

/// A set of constants stored as a bitset over constant ids.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ConstSet {
    words: Vec<u64>,
}

impl ConstSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(c: Const) -> Self {
        let mut s = ConstSet::new();
        s.insert(c);
        s
    }

    pub fn insert(&mut self, c: Const) {
        let (w, b) = (c.index() / 64, c.index() % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    pub fn remove(&mut self, c: Const) {
        let (w, b) = (c.index() / 64, c.index() % 64);
        if w < self.words.len() {
            self.words[w] &= !(1 << b);
            self.trim();
        }
    }

    #[inline]
    pub fn contains(&self, c: Const) -> bool {
        let (w, b) = (c.index() / 64, c.index() % 64);
        w < self.words.len() && self.words[w] & (1 << b) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn union_with(&mut self, other: &ConstSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &ConstSet) {
        for (i, a) in self.words.iter_mut().enumerate() {
            *a &= other.words.get(i).copied().unwrap_or(0);
        }
        self.trim();
    }

    pub fn intersects(&self, other: &ConstSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &ConstSet) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, &a)| a & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = Const> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w & (1u64 << b) != 0).map(move |b| Const((i * 64 + b) as u32))
        })
    }

    pub fn first(&self) -> Option<Const> {
        self.iter().next()
    }
}

impl FromIterator<Const> for ConstSet {
    fn from_iter<I: IntoIterator<Item = Const>>(iter: I) -> Self {
        let mut s = ConstSet::new();
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl fmt::Debug for ConstSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c.0)).finish()
    }
}

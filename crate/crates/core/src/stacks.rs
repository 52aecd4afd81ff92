//! Undoable refinement histories.
//!
//! Both stacks keep, per key, a permutation of the key's items whose prefix
//! is the active set. Refining moves the kept items to the front and pushes
//! the new prefix length; restoring pops lengths. Active order is
//! unspecified.

use thiserror::Error;

use crate::types::{Clause, Const, Substlet, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StackError {
    #[error("refinement must keep a strict subset of the current members")]
    NotStrictSubset,
    #[error("refinement of a clause must keep at least one member")]
    EmptyRefinement,
    #[error("item {0} is not active")]
    NotActive(u32),
    #[error("key {0} has no entry in this stack")]
    UnknownKey(usize),
    #[error("mark does not belong to the current history of this stack")]
    InvalidMark,
}

/// A position in a stack's history, captured by `mark`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mark {
    len: usize,
    serial: u64,
}

impl Mark {
    /// Number of entries at mark time.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug, Default)]
struct Intervals {
    perm: Vec<Vec<u32>>,
    pos: Vec<Vec<u32>>,
    lens: Vec<Vec<usize>>,
}

impl Intervals {
    fn add_key(&mut self, items: Vec<u32>, pos_size: usize) {
        let mut pos = vec![ABSENT; pos_size];
        for (i, &it) in items.iter().enumerate() {
            pos[it as usize] = i as u32;
        }
        self.lens.push(vec![items.len()]);
        self.perm.push(items);
        self.pos.push(pos);
    }

    fn active_len(&self, key: usize) -> usize {
        *self.lens[key].last().expect("every key has an interval")
    }

    fn active(&self, key: usize) -> &[u32] {
        &self.perm[key][..self.active_len(key)]
    }

    fn is_active(&self, key: usize, item: u32) -> bool {
        match self.pos[key].get(item as usize) {
            Some(&p) => p != ABSENT && (p as usize) < self.active_len(key),
            None => false,
        }
    }

    fn check(&self, key: usize, kept: &[u32]) -> Result<(), StackError> {
        for (i, &it) in kept.iter().enumerate() {
            if !self.is_active(key, it) || kept[..i].contains(&it) {
                return Err(StackError::NotActive(it));
            }
        }
        if kept.len() >= self.active_len(key) {
            return Err(StackError::NotStrictSubset);
        }
        Ok(())
    }

    fn push(&mut self, key: usize, kept: &[u32]) {
        let perm = &mut self.perm[key];
        let pos = &mut self.pos[key];
        for (i, &it) in kept.iter().enumerate() {
            let p = pos[it as usize] as usize;
            let other = perm[i];
            perm.swap(i, p);
            pos[it as usize] = i as u32;
            pos[other as usize] = p as u32;
        }
        self.lens[key].push(kept.len());
    }

    fn pop(&mut self, key: usize) {
        self.lens[key].pop();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Entry {
    key: usize,
    prev: Option<usize>,
    len: usize,
    serial: u64,
}

#[derive(Clone, Debug, Default)]
struct History {
    iv: Intervals,
    entries: Vec<Entry>,
    current: Vec<Option<usize>>,
    base: usize,
    next_serial: u64,
}

impl History {
    fn add_key(&mut self, items: Vec<u32>, pos_size: usize) {
        let key = self.iv.perm.len();
        let len = items.len();
        self.iv.add_key(items, pos_size);
        let idx = self.entries.len();
        self.entries.push(Entry { key, prev: None, len, serial: self.next_serial });
        self.next_serial += 1;
        self.current.push(Some(idx));
        self.base = self.entries.len();
    }

    fn push(&mut self, key: usize, kept: &[u32]) -> usize {
        self.iv.push(key, kept);
        let idx = self.entries.len();
        self.entries.push(Entry { key, prev: self.current[key], len: kept.len(), serial: self.next_serial });
        self.next_serial += 1;
        self.current[key] = Some(idx);
        idx
    }

    fn mark(&self) -> Mark {
        Mark { len: self.entries.len(), serial: self.entries.last().map_or(u64::MAX, |e| e.serial) }
    }

    fn restore(&mut self, m: Mark) -> Result<(), StackError> {
        if m.len < self.base || m.len > self.entries.len() {
            return Err(StackError::InvalidMark);
        }
        let serial = if m.len == 0 { u64::MAX } else { self.entries[m.len - 1].serial };
        if serial != m.serial {
            return Err(StackError::InvalidMark);
        }
        while self.entries.len() > m.len {
            let e = self.entries.pop().expect("non-empty");
            self.iv.pop(e.key);
            self.current[e.key] = e.prev;
        }
        Ok(())
    }

    fn is_current(&self, k: usize) -> bool {
        self.entries.get(k).is_some_and(|e| self.current[e.key] == Some(k))
    }

    fn entry_items(&self, k: usize) -> &[u32] {
        let e = &self.entries[k];
        &self.iv.perm[e.key][..e.len]
    }
}

/// Cursor over the pending entries `k..len` of a stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pending {
    /// Entry index.
    pub index: usize,
    /// Clause or variable key of the entry.
    pub key: usize,
    /// Whether the entry is the last one for its key.
    pub current: bool,
}

/// History of clause refinements `c ⇒ d`.
#[derive(Clone, Debug)]
pub struct RefinementStack {
    clauses: Vec<Clause>,
    h: History,
}

impl RefinementStack {
    /// Pushes the initial refinement `c ⇒ c` for every clause.
    pub fn new(clauses: Vec<Clause>) -> Self {
        let mut h = History::default();
        for c in &clauses {
            h.add_key((0..c.len() as u32).collect(), c.len());
        }
        RefinementStack { clauses, h }
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Number of entries (‖C̄‖).
    pub fn len(&self) -> usize {
        self.h.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.entries.is_empty()
    }

    pub fn original(&self, ci: usize) -> &Clause {
        &self.clauses[ci]
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clause refined by entry `k`.
    pub fn entry_clause(&self, k: usize) -> usize {
        self.h.entries[k].key
    }

    /// Currency flag of entry `k`.
    pub fn is_current(&self, k: usize) -> bool {
        self.h.is_current(k)
    }

    /// Index of the current entry of clause `ci`.
    pub fn current_entry(&self, ci: usize) -> usize {
        self.h.current[ci].expect("clause has an entry")
    }

    /// Member indices (into the original clause) of the current refinement.
    pub fn current_indices(&self, ci: usize) -> &[u32] {
        self.h.iv.active(ci)
    }

    pub fn current_len(&self, ci: usize) -> usize {
        self.h.iv.active_len(ci)
    }

    pub fn current_members(&self, ci: usize) -> impl Iterator<Item = &Substlet> + '_ {
        let c = &self.clauses[ci];
        self.current_indices(ci).iter().map(move |&j| &c.members()[j as usize])
    }

    pub fn is_active(&self, ci: usize, member: u32) -> bool {
        self.h.iv.is_active(ci, member)
    }

    /// Member indices of the refinement recorded by entry `k`.
    pub fn entry_indices(&self, k: usize) -> &[u32] {
        self.h.entry_items(k)
    }

    /// Appends `c ⇒ kept`; `kept` must be a non-empty strict subset of the
    /// current refinement.
    pub fn refine(&mut self, ci: usize, kept: &[u32]) -> Result<usize, StackError> {
        if ci >= self.clauses.len() {
            return Err(StackError::UnknownKey(ci));
        }
        if kept.is_empty() {
            return Err(StackError::EmptyRefinement);
        }
        self.h.iv.check(ci, kept)?;
        Ok(self.h.push(ci, kept))
    }

    /// Keeps the current members satisfying `keep`. Returns the kept count,
    /// refining only when something was dropped. An empty result leaves the
    /// stack unchanged.
    pub fn refine_where(&mut self, ci: usize, mut keep: impl FnMut(&Substlet) -> bool) -> usize {
        let c = &self.clauses[ci];
        let kept: Vec<u32> =
            self.h.iv.active(ci).iter().copied().filter(|&j| keep(&c.members()[j as usize])).collect();
        if !kept.is_empty() && kept.len() < self.current_len(ci) {
            self.h.push(ci, &kept);
        }
        kept.len()
    }

    pub fn mark(&self) -> Mark {
        self.h.mark()
    }

    pub fn restore(&mut self, m: Mark) -> Result<(), StackError> {
        self.h.restore(m)
    }

    /// Entries `k..len` in order.
    pub fn pending(&self, k: usize) -> impl Iterator<Item = Pending> + '_ {
        (k..self.len()).map(move |i| Pending { index: i, key: self.h.entries[i].key, current: self.h.is_current(i) })
    }
}

/// History of variable domains `v/V`.
#[derive(Clone, Debug)]
pub struct SubstitutionStack {
    key_of: Vec<Option<usize>>,
    vars: Vec<Var>,
    h: History,
}

impl SubstitutionStack {
    /// One initial entry `v/universe` per listed variable.
    pub fn new(vars: &[Var], universe: &[Const]) -> Self {
        let num_consts = universe.iter().map(|c| c.index() + 1).max().unwrap_or(0);
        let num_vars = vars.iter().map(|v| v.index() + 1).max().unwrap_or(0);
        let mut key_of = vec![None; num_vars];
        let mut h = History::default();
        let mut uni: Vec<u32> = universe.iter().map(|c| c.0).collect();
        uni.sort();
        uni.dedup();
        let mut order = Vec::new();
        for &v in vars {
            if key_of[v.index()].is_none() {
                key_of[v.index()] = Some(order.len());
                order.push(v);
                h.add_key(uni.clone(), num_consts);
            }
        }
        SubstitutionStack { key_of, vars: order, h }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn has_var(&self, v: Var) -> bool {
        self.key(v).is_some()
    }

    fn key(&self, v: Var) -> Option<usize> {
        self.key_of.get(v.index()).copied().flatten()
    }

    fn key_or_err(&self, v: Var) -> Result<usize, StackError> {
        self.key(v).ok_or(StackError::UnknownKey(v.index()))
    }

    pub fn len(&self) -> usize {
        self.h.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.entries.is_empty()
    }

    /// Number of initial entries.
    pub fn base(&self) -> usize {
        self.h.base
    }

    pub fn entry_var(&self, k: usize) -> Var {
        self.vars[self.h.entries[k].key]
    }

    pub fn is_current(&self, k: usize) -> bool {
        self.h.is_current(k)
    }

    pub fn current_entry(&self, v: Var) -> usize {
        self.h.current[self.key(v).expect("known variable")].expect("entry")
    }

    /// Previous entry for the same variable.
    pub fn entry_prev(&self, k: usize) -> Option<usize> {
        self.h.entries[k].prev
    }

    /// Current value `vΘ`.
    pub fn domain(&self, v: Var) -> impl Iterator<Item = Const> + '_ {
        let key = self.key(v).expect("known variable");
        self.h.iv.active(key).iter().map(|&c| Const(c))
    }

    pub fn domain_len(&self, v: Var) -> usize {
        self.h.iv.active_len(self.key(v).expect("known variable"))
    }

    pub fn contains(&self, v: Var, c: Const) -> bool {
        self.key(v).is_some_and(|k| self.h.iv.is_active(k, c.0))
    }

    /// Domain recorded by entry `k`.
    pub fn entry_domain(&self, k: usize) -> impl Iterator<Item = Const> + '_ {
        self.h.entry_items(k).iter().map(|&c| Const(c))
    }

    /// True iff `c` is in the domain recorded by entry `k`.
    pub fn entry_contains(&self, k: usize, c: Const) -> bool {
        let e = &self.h.entries[k];
        match self.h.iv.pos[e.key].get(c.index()) {
            Some(&p) => p != ABSENT && (p as usize) < e.len,
            None => false,
        }
    }

    pub fn is_unary(&self) -> bool {
        (0..self.vars.len()).all(|k| self.h.iv.active_len(k) == 1)
    }

    /// Appends `v/kept`; `kept` must be a strict subset of `vΘ` (possibly
    /// empty).
    pub fn domain_refine(&mut self, v: Var, kept: &[Const]) -> Result<usize, StackError> {
        let key = self.key_or_err(v)?;
        let kept: Vec<u32> = kept.iter().map(|c| c.0).collect();
        self.h.iv.check(key, &kept)?;
        Ok(self.h.push(key, &kept))
    }

    pub fn mark(&self) -> Mark {
        self.h.mark()
    }

    pub fn restore(&mut self, m: Mark) -> Result<(), StackError> {
        self.h.restore(m)
    }

    pub fn pending(&self, k: usize) -> impl Iterator<Item = Pending> + '_ {
        (k..self.len()).map(move |i| Pending { index: i, key: self.h.entries[i].key, current: self.h.is_current(i) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Clause;
    use proptest::prelude::*;

    fn clause(n: u32) -> Clause {
        Clause::from_rows(&[Var(0)], &(0..n).map(|i| vec![Const(i)]).collect::<Vec<_>>()).unwrap()
    }

    fn sorted(xs: &[u32]) -> Vec<u32> {
        let mut v = xs.to_vec();
        v.sort();
        v
    }

    #[test]
    fn refine_and_restore() {
        let mut st = RefinementStack::new(vec![clause(4)]);
        let m = st.mark();
        st.refine(0, &[3, 1]).unwrap();
        assert_eq!(st.len(), 2);
        assert_eq!(sorted(st.current_indices(0)), vec![1, 3]);
        st.restore(m).unwrap();
        assert_eq!(sorted(st.current_indices(0)), vec![0, 1, 2, 3]);
    }

    #[test]
    fn currency_follows_last_entry() {
        let mut st = RefinementStack::new(vec![clause(4)]);
        st.refine(0, &[0, 2]).unwrap();
        st.refine(0, &[2]).unwrap();
        let flags: Vec<bool> = (0..st.len()).map(|k| st.is_current(k)).collect();
        assert_eq!(flags, vec![false, false, true]);
    }

    #[test]
    fn rejects_non_strict_and_inactive() {
        let mut st = RefinementStack::new(vec![clause(3)]);
        assert_eq!(st.refine(0, &[0, 1, 2]), Err(StackError::NotStrictSubset));
        assert_eq!(st.refine(0, &[]), Err(StackError::EmptyRefinement));
        st.refine(0, &[1]).unwrap();
        assert_eq!(st.refine(0, &[0]), Err(StackError::NotActive(0)));
        assert_eq!(st.refine(0, &[1]), Err(StackError::NotStrictSubset));
    }

    #[test]
    fn stale_mark_is_rejected() {
        let mut st = RefinementStack::new(vec![clause(4)]);
        let m0 = st.mark();
        st.refine(0, &[0, 1, 2]).unwrap();
        let m = st.mark();
        st.restore(m0).unwrap();
        st.refine(0, &[0, 1]).unwrap();
        assert_eq!(st.restore(m), Err(StackError::InvalidMark));
    }

    #[test]
    fn pending_cursor() {
        let mut st = RefinementStack::new(vec![clause(3), clause(2)]);
        assert_eq!(st.pending(0).count(), 2);
        st.refine(0, &[0]).unwrap();
        let p: Vec<Pending> = st.pending(0).collect();
        assert_eq!(p.len(), 3);
        assert!(!p[0].current);
        assert!(p[2].current);
        assert_eq!(st.pending(10).count(), 0);
    }

    #[test]
    fn substitution_stack_allows_empty() {
        let mut st = SubstitutionStack::new(&[Var(0), Var(1)], &[Const(0), Const(1), Const(2)]);
        assert!(!st.is_unary());
        let e = st.domain_refine(Var(0), &[Const(2)]).unwrap();
        assert!(st.entry_contains(e, Const(2)));
        assert!(!st.contains(Var(0), Const(0)));
        assert!(st.entry_contains(0, Const(0)));
        st.domain_refine(Var(1), &[Const(1)]).unwrap();
        assert!(st.is_unary());
        st.domain_refine(Var(1), &[]).unwrap();
        assert_eq!(st.domain_len(Var(1)), 0);
        assert_eq!(st.domain_refine(Var(0), &[Const(2)]), Err(StackError::NotStrictSubset));
    }

    #[derive(Clone, Debug)]
    enum Op {
        Refine(usize, Vec<bool>),
        Mark,
        Restore,
    }

    fn arb_op() -> impl Strategy<Value = Op> {
        prop_oneof![
            3 => (0usize..3, proptest::collection::vec(any::<bool>(), 6)).prop_map(|(k, m)| Op::Refine(k, m)),
            1 => Just(Op::Mark),
            1 => Just(Op::Restore),
        ]
    }

    type Snapshot = Vec<(Vec<u32>, Vec<bool>)>;

    fn snapshot(st: &SubstitutionStack) -> Snapshot {
        st.vars()
            .iter()
            .map(|&v| {
                let mut d: Vec<u32> = st.domain(v).map(|c| c.0).collect();
                d.sort();
                (d, (0..st.len()).map(|k| st.is_current(k)).collect())
            })
            .collect()
    }

    proptest! {
        #[test]
        fn mark_restore_is_exact(ops in proptest::collection::vec(arb_op(), 0..60)) {
            let vars = [Var(0), Var(1), Var(2)];
            let uni: Vec<Const> = (0..6).map(Const).collect();
            let mut st = SubstitutionStack::new(&vars, &uni);
            let mut marks: Vec<(Mark, Snapshot)> = Vec::new();
            for op in ops {
                match op {
                    Op::Refine(k, mask) => {
                        let v = vars[k];
                        let kept: Vec<Const> = st.domain(v).filter(|c| mask[c.index()]).collect();
                        let before = st.domain_len(v);
                        let r = st.domain_refine(v, &kept);
                        prop_assert_eq!(r.is_ok(), kept.len() < before);
                    }
                    Op::Mark => marks.push((st.mark(), snapshot(&st))),
                    Op::Restore => {
                        if let Some((m, snap)) = marks.pop() {
                            st.restore(m).unwrap();
                            prop_assert_eq!(snapshot(&st), snap);
                        }
                    }
                }
                for &v in &vars {
                    let cur = st.current_entry(v);
                    prop_assert!(st.is_current(cur));
                    prop_assert!(st.pending(cur + 1).all(|p| p.key != st.pending(cur).next().unwrap().key));
                }
            }
        }
    }
}

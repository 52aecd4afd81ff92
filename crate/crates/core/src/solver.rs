//! Result and statistics types shared by the native solvers.

use crate::lemma::FlatLemma;
use crate::translate::UnsatReason;
use crate::types::{Const, Substitution, Substlet, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Substitution),
    /// No solution; the lemma is valid and false under the initial state.
    Unsat(FlatLemma),
    TriviallyUnsat(UnsatReason),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn solution(&self) -> Option<&Substitution> {
        match self {
            SolveResult::Sat(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub decisions: u64,
    pub propagations: u64,
    /// Lemmas placed in the lemma store.
    pub lemmas: u64,
    pub conflicts: u64,
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub result: SolveResult,
    pub stats: SolveStats,
    /// Every stored lemma, in learning order.
    pub learned: Vec<FlatLemma>,
}

/// Order in which branches are tried.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum BranchOrder {
    #[default]
    Ascending,
    Descending,
    /// Branches agreeing with this substitution first, then ascending.
    Prefer(Substitution),
}

impl BranchOrder {
    pub(crate) fn order_substlets(&self, items: &mut [(u32, &Substlet)]) {
        items.sort_by_key(|(j, _)| *j);
        match self {
            BranchOrder::Ascending => {}
            BranchOrder::Descending => items.reverse(),
            BranchOrder::Prefer(t) => items.sort_by_key(|(j, s)| (t.conflicts(s), *j)),
        }
    }


    pub(crate) fn order_parts(&self, v: Var, parts: &mut [Vec<Const>]) {
        match self {
            BranchOrder::Ascending => {}
            BranchOrder::Descending => parts.reverse(),
            BranchOrder::Prefer(t) => {
                if let Some(x) = t.get(v) {
                    parts.sort_by_key(|p| !p.contains(&x));
                }
            }
        }
    }
}

/// How the refining solver partitions a domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Split {
    #[default]
    Halves,
    Singletons,
}

#[derive(Clone, Debug, Default)]
pub struct SolverConfig {
    pub branch_order: BranchOrder,
    pub split: Split,
    /// Refining solver: seed the lemma store with a σ-resolvent per blocking.
    pub precompute_sigma: bool,
}

//! Brute-force ground truth: plain enumeration over all total substitutions.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::geometric::{is_matching, GeometricError, MatchInstance};
use crate::lemma::FlatLemma;
use crate::optimal::{matching_weight, multiset_cmp, OptimalError, WeightFn};
use crate::types::{is_solution, Const, Gcsp, Substitution, Var};

/// Caps on the enumeration size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeBudget {
    pub max_vars: usize,
    pub max_consts: usize,
    pub max_candidates: u64,
}

impl Default for SizeBudget {
    fn default() -> Self {
        SizeBudget { max_vars: 64, max_consts: 1 << 16, max_candidates: 10_000_000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration needs {needed} candidates, over the budget")]
    BudgetExceeded { needed: String },
    #[error(transparent)]
    Geometric(#[from] GeometricError),
    #[error(transparent)]
    Optimal(#[from] OptimalError),
}

fn candidates(vars: &[Var], consts: &[Const], budget: &SizeBudget) -> Result<(), OracleError> {
    let over = || OracleError::BudgetExceeded { needed: format!("{}^{}", consts.len(), vars.len()) };
    if vars.len() > budget.max_vars || consts.len() > budget.max_consts {
        return Err(over());
    }
    let mut n: u64 = 1;
    for _ in vars {
        n = n.checked_mul(consts.len() as u64).ok_or_else(over)?;
        if n > budget.max_candidates {
            return Err(over());
        }
    }
    Ok(())
}

/// Calls `f` on every total substitution of `vars` over `consts`, in
/// lexicographic order. Stops early when `f` returns false.
fn for_each_total(vars: &[Var], consts: &[Const], mut f: impl FnMut(&Substitution) -> bool) {
    if consts.is_empty() && !vars.is_empty() {
        return;
    }
    let mut digits = vec![0usize; vars.len()];
    loop {
        let theta = Substitution::from_pairs(vars.iter().zip(&digits).map(|(&v, &d)| (v, consts[d])))
            .expect("distinct variables");
        if !f(&theta) {
            return;
        }
        let mut i = vars.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < consts.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Every solution over the clause variables and clause constants.
pub fn enumerate_solutions(gcsp: &Gcsp, budget: &SizeBudget) -> Result<Vec<Substitution>, OracleError> {
    let vars = gcsp.clause_vars();
    let consts = gcsp.clause_consts();
    candidates(&vars, &consts, budget)?;
    let mut out = Vec::new();
    for_each_total(&vars, &consts, |t| {
        if is_solution(gcsp, t) {
            out.push(t.clone());
        }
        true
    });
    Ok(out)
}

pub fn is_satisfiable(gcsp: &Gcsp, budget: &SizeBudget) -> Result<bool, OracleError> {
    let vars = gcsp.clause_vars();
    let consts = gcsp.clause_consts();
    candidates(&vars, &consts, budget)?;
    let mut found = false;
    for_each_total(&vars, &consts, |t| {
        found = is_solution(gcsp, t);
        !found
    });
    Ok(found)
}

/// Every solution makes the lemma true.
pub fn check_lemma_valid(gcsp: &Gcsp, lemma: &FlatLemma, budget: &SizeBudget) -> Result<bool, OracleError> {
    Ok(enumerate_solutions(gcsp, budget)?.iter().all(|t| lemma.is_true_under(t)))
}

/// Every matching over the premise variables and interpretation constants.
pub fn enumerate_matchings(inst: &MatchInstance, budget: &SizeBudget) -> Result<Vec<Substitution>, OracleError> {
    let vars = inst.formula.premise_vars();
    let consts = inst.interp.constants().to_vec();
    candidates(&vars, &consts, budget)?;
    let mut out = Vec::new();
    let mut err = None;
    for_each_total(&vars, &consts, |t| match is_matching(inst, t) {
        Ok(true) => {
            out.push(t.clone());
            true
        }
        Ok(false) => true,
        Err(e) => {
            err = Some(e);
            false
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(out),
    }
}

/// The multiset-minimal matching weight, `None` when there is no matching.
pub fn minimal_weight(inst: &MatchInstance, w: &WeightFn, budget: &SizeBudget) -> Result<Option<BTreeSet<u32>>, OracleError> {
    let mut best: Option<BTreeSet<u32>> = None;
    for t in enumerate_matchings(inst, budget)? {
        let wt = matching_weight(inst, &t, w)?;
        if best.as_ref().is_none_or(|b| multiset_cmp(&wt, b).is_lt()) {
            best = Some(wt);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_gcsp;

    #[test]
    fn lexicographic_order() {
        let g = parse_gcsp("clause (X,Y): (0,0) (0,1) (1,0) (1,1)\n").unwrap();
        let sols = enumerate_solutions(&g, &SizeBudget::default()).unwrap();
        let pairs: Vec<Vec<u32>> = sols.iter().map(|t| t.sorted_pairs().iter().map(|p| p.1 .0).collect()).collect();
        assert_eq!(pairs, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn budget_is_enforced() {
        let g = parse_gcsp("clause (A,B,C): (0,1,2) (2,1,0)\n").unwrap();
        let tight = SizeBudget { max_candidates: 26, ..SizeBudget::default() };
        assert!(matches!(enumerate_solutions(&g, &tight), Err(OracleError::BudgetExceeded { .. })));
        assert_eq!(enumerate_solutions(&g, &SizeBudget { max_candidates: 27, ..tight }).unwrap().len(), 2);
    }

    #[test]
    fn lemma_validity() {
        let sat = parse_gcsp("clause (X): (0) (1)\n").unwrap();
        let unsat = parse_gcsp("clause (X): (0)\nclause (X): (1)\n").unwrap();
        let b = SizeBudget::default();
        assert!(check_lemma_valid(&unsat, &FlatLemma::new(), &b).unwrap());
        assert!(!check_lemma_valid(&sat, &FlatLemma::new(), &b).unwrap());
        let l = FlatLemma::from_entries([(Var(0), vec![Const(0), Const(1)])]);
        assert!(check_lemma_valid(&sat, &l, &b).unwrap());
    }

    #[test]
    fn empty_gcsp_has_the_empty_solution() {
        let g = Gcsp::default();
        assert_eq!(enumerate_solutions(&g, &SizeBudget::default()).unwrap(), vec![Substitution::new()]);
    }
}

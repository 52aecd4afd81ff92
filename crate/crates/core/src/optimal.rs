//! Weighted matching: weights, multiset order and the optimal-matching loop.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::geometric::{
    clashing_atom, extension_set, is_matching, literal_conflicts, literal_true, GeometricError, GeometricLiteral, GroundAtom,
    Interpretation, MatchInstance,
};
use crate::translate::{preprocess, translate, translate_restricted, Alpha, Preprocessed, UnsatReason};
use crate::types::{is_solution, Gcsp, Substitution};

/// Weight function `W`: maps interpretation atoms to finite sets of naturals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightFn {
    map: HashMap<GroundAtom, BTreeSet<u32>>,
}

static EMPTY: BTreeSet<u32> = BTreeSet::new();

impl WeightFn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, atom: GroundAtom, w: BTreeSet<u32>) {
        if w.is_empty() {
            self.map.remove(&atom);
        } else {
            self.map.insert(atom, w);
        }
    }

    /// `W(a)`, empty for unweighted atoms.
    pub fn get(&self, atom: &GroundAtom) -> &BTreeSet<u32> {
        self.map.get(atom).unwrap_or(&EMPTY)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OptimalError {
    #[error("the literal does not conflict with the interpretation")]
    PreconditionViolated,
    #[error("the substitution is not a matching")]
    NotAMatching,
    #[error("the solver returned a substitution that is not a matching")]
    Unverified,
    #[error(transparent)]
    Geometric(#[from] GeometricError),
}

/// Weight of the conflict between `lit` under `theta` and the interpretation.
pub fn literal_conflict_weight(
    interp: &Interpretation,
    lit: &GeometricLiteral,
    theta: &Substitution,
    w: &WeightFn,
) -> Result<BTreeSet<u32>, OptimalError> {
    if !literal_conflicts(interp, lit, theta)? {
        return Err(OptimalError::PreconditionViolated);
    }
    Ok(match clashing_atom(interp, lit, theta)? {
        Some(a) => w.get(a).clone(),
        None => BTreeSet::new(),
    })
}

/// The weight of a matching: premise conflicts plus every conflicting
/// member of the conclusions' extension sets.
pub fn matching_weight(inst: &MatchInstance, theta: &Substitution, w: &WeightFn) -> Result<BTreeSet<u32>, OptimalError> {
    if !is_matching(inst, theta)? {
        return Err(OptimalError::NotAMatching);
    }
    let mut out = BTreeSet::new();
    for a in inst.formula.premises() {
        out.extend(literal_conflict_weight(&inst.interp, a, theta, w)?);
    }
    for b in inst.formula.conclusions() {
        debug_assert!(!literal_true(&inst.interp, b, theta)?);
        for c in extension_set(&inst.interp, b, theta)? {
            if let Some(a) = inst.interp.clash(&c) {
                out.extend(w.get(a).iter().copied());
            }
        }
    }
    Ok(out)
}

/// Multiset order on finite sets: the set holding the largest element of
/// the symmetric difference is the greater one.
pub fn multiset_cmp(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> Ordering {
    let top_a = a.difference(b).last();
    let top_b = b.difference(a).last();
    match (top_a, top_b) {
        (None, None) => Ordering::Equal,
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y),
    }
}

/// What one restricted call of the loop did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// The restricted translation was trivially unsatisfiable.
    Skipped(UnsatReason),
    NoSolution,
    Improved(BTreeSet<u32>),
}

#[derive(Clone, Debug)]
pub struct OptimalStep {
    pub k: u32,
    pub alpha: BTreeSet<u32>,
    /// The restricted translation before preprocessing.
    pub translation: Gcsp,
    pub outcome: StepOutcome,
}

#[derive(Clone, Debug)]
pub struct OptimalResult {
    /// The optimal matching and its weight, if any matching exists.
    pub best: Option<(Substitution, BTreeSet<u32>)>,
    /// The first matching found, before any improvement.
    pub first: Option<(Substitution, BTreeSet<u32>)>,
    pub steps: Vec<OptimalStep>,
    pub solver_calls: usize,
}

/// The improvement loop: solve unrestricted, then for every `k` of the
/// current weight from the top down try to find a matching whose weight
/// avoids `k` and anything above it that is not already present.
///
/// `solve` receives preprocessed GCSPs and must be sound and complete.
pub fn optimal_match(
    inst: &MatchInstance,
    w: &WeightFn,
    mut solve: impl FnMut(&Gcsp) -> Option<Substitution>,
) -> Result<OptimalResult, OptimalError> {
    let mut result = OptimalResult { best: None, first: None, steps: Vec::new(), solver_calls: 0 };
    let full = translate(inst).gcsp;
    let Preprocessed::Simplified(g) = preprocess(&full) else {
        return Ok(result);
    };
    result.solver_calls += 1;
    let Some(mut theta) = solve(&g) else {
        return Ok(result);
    };
    let check = |theta: &Substitution, g: &Gcsp| -> Result<BTreeSet<u32>, OptimalError> {
        if !is_solution(g, theta) {
            return Err(OptimalError::Unverified);
        }
        matching_weight(inst, theta, w).map_err(|e| match e {
            OptimalError::NotAMatching => OptimalError::Unverified,
            e => e,
        })
    };
    let mut alpha = check(&theta, &g)?;
    result.first = Some((theta.clone(), alpha.clone()));
    // one past the largest element
    let mut k = alpha.iter().next_back().map_or(0, |m| m + 1);
    while k != 0 {
        k -= 1;
        if !alpha.contains(&k) {
            continue;
        }
        let mut restricted: BTreeSet<u32> = alpha.iter().copied().filter(|&x| x != k).collect();
        restricted.extend(0..k);
        let translation = translate_restricted(inst, w, &Alpha::Set(restricted.clone())).gcsp;
        let outcome = match preprocess(&translation) {
            Preprocessed::TriviallyUnsat(r) => StepOutcome::Skipped(r),
            Preprocessed::Simplified(g) => {
                result.solver_calls += 1;
                match solve(&g) {
                    None => StepOutcome::NoSolution,
                    Some(t) => {
                        let weight = check(&t, &g)?;
                        theta = t;
                        alpha = weight.clone();
                        StepOutcome::Improved(weight)
                    }
                }
            }
        };
        result.steps.push(OptimalStep { k, alpha: restricted, translation, outcome });
    }
    result.best = Some((theta, alpha));
    Ok(result)
}

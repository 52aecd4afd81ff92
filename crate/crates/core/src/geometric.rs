//! Interpretations, geometric formulas and the matching problem.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::types::{Const, Interner, Substitution, Symbols, Var};

/// Three-valued truth label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TruthLabel {
    F,
    E,
    T,
}

impl TruthLabel {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "f" => Some(TruthLabel::F),
            "e" => Some(TruthLabel::E),
            "t" => Some(TruthLabel::T),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TruthLabel::F => "f",
            TruthLabel::E => "e",
            TruthLabel::T => "t",
        }
    }
}

impl fmt::Display for TruthLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An interned predicate symbol. The domain predicate `#` is one of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pred(pub u32);

pub const DOMAIN_PRED: &str = "#";

/// A ground atom `p_λ(c1,...,cn)`; domain atoms use the `#` predicate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: Pred,
    pub label: TruthLabel,
    pub args: Vec<Const>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometricError {
    #[error("variable {0:?} is not bound by the substitution")]
    UnboundVariable(Var),
    #[error("literal is true under the substitution; its extension set is undefined")]
    PreconditionViolated,
    #[error("atom on the same arguments appears with two labels")]
    ConflictingLabels,
    #[error("constant {0:?} occurs without a domain atom")]
    NotRangeRestricted(Const),
    #[error("conclusion variable {0:?} occurs in no premise")]
    FormulaNotRangeRestricted(Var),
    #[error("equality between identical variables")]
    ReflexiveEquality,
    #[error("premises must be simple or #f literals")]
    BadPremise,
    #[error("existential variable does not occur in its atom")]
    UnusedBoundVariable,
}

/// A finite, range-restricted set of ground atoms.
#[derive(Clone, Debug, Default)]
pub struct Interpretation {
    atoms: Vec<GroundAtom>,
    index: HashMap<(Pred, Vec<Const>), usize>,
    by_pred: HashMap<Pred, Vec<usize>>,
    constants: Vec<Const>,
    domain_pred: Option<Pred>,
}

impl Interpretation {
    /// Builds an interpretation; `domain_pred` is the id of `#`.
    pub fn new(atoms: Vec<GroundAtom>, domain_pred: Pred) -> Result<Self, GeometricError> {
        let mut interp = Interpretation { domain_pred: Some(domain_pred), ..Default::default() };
        for a in atoms {
            let key = (a.pred, a.args.clone());
            if let Some(&i) = interp.index.get(&key) {
                if interp.atoms[i].label != a.label {
                    return Err(GeometricError::ConflictingLabels);
                }
                continue;
            }
            let i = interp.atoms.len();
            interp.index.insert(key, i);
            interp.by_pred.entry(a.pred).or_default().push(i);
            interp.atoms.push(a);
        }
        let mut cs: Vec<Const> = interp.atoms.iter().flat_map(|a| a.args.iter().copied()).collect();
        cs.sort();
        cs.dedup();
        for &c in &cs {
            if interp.label_of(domain_pred, &[c]) != Some(TruthLabel::T) {
                return Err(GeometricError::NotRangeRestricted(c));
            }
        }
        interp.constants = cs;
        Ok(interp)
    }

    pub fn atoms(&self) -> &[GroundAtom] {
        &self.atoms
    }

    pub fn domain_pred(&self) -> Pred {
        self.domain_pred.expect("constructed with a domain predicate")
    }

    /// Constants occurring in the interpretation, sorted by id.
    pub fn constants(&self) -> &[Const] {
        &self.constants
    }

    /// `ĉ`: one past the largest constant id of the interpretation.
    pub fn fresh_constant(&self) -> Const {
        Const(self.constants.last().map_or(0, |c| c.0 + 1))
    }

    pub fn label_of(&self, pred: Pred, args: &[Const]) -> Option<TruthLabel> {
        self.atom(pred, args).map(|a| a.label)
    }

    pub fn atom(&self, pred: Pred, args: &[Const]) -> Option<&GroundAtom> {
        self.index.get(&(pred, args.to_vec())).map(|&i| &self.atoms[i])
    }

    pub fn atoms_of(&self, pred: Pred) -> impl Iterator<Item = &GroundAtom> + '_ {
        self.by_pred.get(&pred).into_iter().flatten().map(|&i| &self.atoms[i])
    }

    /// True iff `atom` clashes with an interpretation atom on the same
    /// arguments.
    pub fn conflicts(&self, atom: &GroundAtom) -> bool {
        self.clash(atom).is_some()
    }

    /// The interpretation atom `p_μ(args)` with `μ ≠ λ`, if any.
    pub fn clash(&self, atom: &GroundAtom) -> Option<&GroundAtom> {
        self.atom(atom.pred, &atom.args).filter(|a| a.label != atom.label)
    }
}

/// A geometric literal over variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GeometricLiteral {
    Simple { pred: Pred, label: TruthLabel, args: Vec<Var> },
    Equality(Var, Var),
    DomainF(Var),
    DomainT(Var),
    /// `∃ bound p_λ(args)`; `bound` occurs in `args`.
    Exists { bound: Var, pred: Pred, label: TruthLabel, args: Vec<Var> },
}

impl GeometricLiteral {
    /// Free variables, sorted by id.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = match self {
            GeometricLiteral::Simple { args, .. } => args.clone(),
            GeometricLiteral::Equality(a, b) => vec![*a, *b],
            GeometricLiteral::DomainF(v) | GeometricLiteral::DomainT(v) => vec![*v],
            GeometricLiteral::Exists { bound, args, .. } => args.iter().copied().filter(|v| v != bound).collect(),
        };
        vs.sort();
        vs.dedup();
        vs
    }

    /// Predicate view: `#f X` and `#t X` are atoms of the domain predicate.
    fn as_atom(&self, domain: Pred) -> Option<(Pred, TruthLabel, Vec<Var>)> {
        match self {
            GeometricLiteral::Simple { pred, label, args } => Some((*pred, *label, args.clone())),
            GeometricLiteral::DomainF(v) => Some((domain, TruthLabel::F, vec![*v])),
            GeometricLiteral::DomainT(v) => Some((domain, TruthLabel::T, vec![*v])),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), GeometricError> {
        match self {
            GeometricLiteral::Equality(a, b) if a == b => Err(GeometricError::ReflexiveEquality),
            GeometricLiteral::Exists { bound, args, .. } if !args.contains(bound) => {
                Err(GeometricError::UnusedBoundVariable)
            }
            _ => Ok(()),
        }
    }
}

fn bind(theta: &Substitution, args: &[Var]) -> Result<Vec<Const>, GeometricError> {
    args.iter().map(|&v| theta.get(v).ok_or(GeometricError::UnboundVariable(v))).collect()
}

/// Instantiates a literal that has an atom form.
pub fn ground(interp: &Interpretation, lit: &GeometricLiteral, theta: &Substitution) -> Result<Option<GroundAtom>, GeometricError> {
    match lit.as_atom(interp.domain_pred()) {
        Some((pred, label, args)) => Ok(Some(GroundAtom { pred, label, args: bind(theta, &args)? })),
        None => Ok(None),
    }
}

/// `AΘ` is in conflict with `I`.
pub fn literal_conflicts(interp: &Interpretation, lit: &GeometricLiteral, theta: &Substitution) -> Result<bool, GeometricError> {
    Ok(clashing_atom(interp, lit, theta)?.is_some() || equality_conflict(lit, theta)?)
}

fn equality_conflict(lit: &GeometricLiteral, theta: &Substitution) -> Result<bool, GeometricError> {
    if let GeometricLiteral::Equality(a, b) = lit {
        let v = bind(theta, &[*a, *b])?;
        return Ok(v[0] != v[1]);
    }
    Ok(false)
}

/// The interpretation atom responsible for a predicate-style conflict.
pub fn clashing_atom<'a>(
    interp: &'a Interpretation,
    lit: &GeometricLiteral,
    theta: &Substitution,
) -> Result<Option<&'a GroundAtom>, GeometricError> {
    match ground(interp, lit, theta)? {
        Some(a) => Ok(interp.clash(&a)),
        None => {
            bind(theta, &lit.free_vars())?;
            Ok(None)
        }
    }
}

/// `AΘ` is true in `I`.
pub fn literal_true(interp: &Interpretation, lit: &GeometricLiteral, theta: &Substitution) -> Result<bool, GeometricError> {
    match lit {
        GeometricLiteral::Equality(a, b) => {
            let v = bind(theta, &[*a, *b])?;
            Ok(v[0] == v[1])
        }
        GeometricLiteral::Exists { bound, pred, label, args } => {
            let pattern: Vec<Option<Const>> =
                args.iter().map(|&v| if v == *bound { Ok(None) } else { theta.get(v).map(Some).ok_or(GeometricError::UnboundVariable(v)) }).collect::<Result<_, _>>()?;
            Ok(interp.atoms_of(*pred).any(|a| a.label == *label && matches_pattern(&a.args, &pattern)))
        }
        _ => {
            let a = ground(interp, lit, theta)?.expect("atom form");
            Ok(interp.label_of(a.pred, &a.args) == Some(a.label))
        }
    }
}

fn matches_pattern(args: &[Const], pattern: &[Option<Const>]) -> bool {
    if args.len() != pattern.len() {
        return false;
    }
    let mut hole: Option<Const> = None;
    for (&a, p) in args.iter().zip(pattern) {
        match p {
            Some(c) if *c != a => return false,
            Some(_) => {}
            None => match hole {
                Some(h) if h != a => return false,
                _ => hole = Some(a),
            },
        }
    }
    true
}

/// `E(B, Θ)`.
pub fn extension_set(interp: &Interpretation, lit: &GeometricLiteral, theta: &Substitution) -> Result<Vec<GroundAtom>, GeometricError> {
    if literal_true(interp, lit, theta)? {
        return Err(GeometricError::PreconditionViolated);
    }
    match lit {
        GeometricLiteral::Equality(..) => Ok(Vec::new()),
        GeometricLiteral::Exists { bound, pred, label, args } => {
            let mut out = Vec::with_capacity(interp.constants().len() + 1);
            for c in interp.constants().iter().copied().chain(std::iter::once(interp.fresh_constant())) {
                let ground: Vec<Const> = args
                    .iter()
                    .map(|&v| if v == *bound { c } else { theta.get(v).expect("bound above") })
                    .collect();
                out.push(GroundAtom { pred: *pred, label: *label, args: ground });
            }
            Ok(out)
        }
        _ => Ok(vec![ground(interp, lit, theta)?.expect("atom form")]),
    }
}

/// `A1, ..., Ap | B1, ..., Bq`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricFormula {
    premises: Vec<GeometricLiteral>,
    conclusions: Vec<GeometricLiteral>,
}

impl GeometricFormula {
    pub fn new(premises: Vec<GeometricLiteral>, conclusions: Vec<GeometricLiteral>) -> Result<Self, GeometricError> {
        for p in &premises {
            if !matches!(p, GeometricLiteral::Simple { .. } | GeometricLiteral::DomainF(_)) {
                return Err(GeometricError::BadPremise);
            }
        }
        for l in premises.iter().chain(&conclusions) {
            l.validate()?;
        }
        let f = GeometricFormula { premises, conclusions };
        let pv = f.premise_vars();
        for b in &f.conclusions {
            for v in b.free_vars() {
                if pv.binary_search(&v).is_err() {
                    return Err(GeometricError::FormulaNotRangeRestricted(v));
                }
            }
        }
        Ok(f)
    }

    pub fn premises(&self) -> &[GeometricLiteral] {
        &self.premises
    }

    pub fn conclusions(&self) -> &[GeometricLiteral] {
        &self.conclusions
    }

    /// Variables of the premises, sorted.
    pub fn premise_vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.premises.iter().flat_map(|p| p.free_vars()).collect();
        vs.sort();
        vs.dedup();
        vs
    }
}

/// An interpretation plus a formula to match into it.
#[derive(Clone, Debug)]
pub struct MatchInstance {
    pub interp: Interpretation,
    pub formula: GeometricFormula,
    pub symbols: Symbols,
    pub preds: Interner,
}

impl MatchInstance {
    pub fn pred_name(&self, p: Pred) -> &str {
        self.preds.name(p.0)
    }
}

/// Every premise conflicts with `I` and no conclusion is true.
pub fn is_matching(inst: &MatchInstance, theta: &Substitution) -> Result<bool, GeometricError> {
    for a in inst.formula.premises() {
        if !literal_conflicts(&inst.interp, a, theta)? {
            return Ok(false);
        }
    }
    for b in inst.formula.conclusions() {
        if literal_true(&inst.interp, b, theta)? {
            return Ok(false);
        }
    }
    Ok(true)
}

//! Matching instance to GCSP translation, its weight-restricted variant,
//! and preprocessing.

use std::collections::{BTreeSet, HashSet};

use crate::geometric::{GeometricLiteral, GroundAtom, MatchInstance, Pred, TruthLabel};
use crate::optimal::WeightFn;
use crate::types::{Blocking, Clause, Const, Gcsp, Substlet, Var};

/// Which weights a restricted translation admits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Alpha {
    /// Every weight is allowed; the plain translation.
    All,
    Set(BTreeSet<u32>),
}

impl Alpha {
    pub fn admits(&self, w: &BTreeSet<u32>) -> bool {
        match self {
            Alpha::All => true,
            Alpha::Set(a) => w.is_subset(a),
        }
    }
}

/// Why a blocking was emitted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockingKind {
    /// The conclusion is true under the blocked substitution.
    True,
    /// A conflicting extension-set member (this interpretation atom) has a
    /// weight outside α.
    Excluded { atom: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockingOrigin {
    pub conclusion: usize,
    pub kind: BlockingKind,
}

/// Back-references from the GCSP to the instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    /// `clause_atoms[i][j]`: index into `interp.atoms()` of the atom that
    /// member `j` of clause `i` conflicts with.
    pub clause_atoms: Vec<Vec<usize>>,
    pub blockings: Vec<BlockingOrigin>,
}

#[derive(Clone, Debug)]
pub struct TranslationOutput {
    pub gcsp: Gcsp,
    pub provenance: Provenance,
}

/// Atom-form view of a simple or domain literal.
fn atom_form(inst: &MatchInstance, lit: &GeometricLiteral) -> Option<(Pred, TruthLabel, Vec<Var>)> {
    let domain = inst.interp.domain_pred();
    match lit {
        GeometricLiteral::Simple { pred, label, args } => Some((*pred, *label, args.clone())),
        GeometricLiteral::DomainF(v) => Some((domain, TruthLabel::F, vec![*v])),
        GeometricLiteral::DomainT(v) => Some((domain, TruthLabel::T, vec![*v])),
        _ => None,
    }
}

/// Binds `pattern` against `args`; `None` when a repeated variable would
/// receive two values.
fn bind(pattern: &[Var], args: &[Const]) -> Option<Vec<(Var, Const)>> {
    if pattern.len() != args.len() {
        return None;
    }
    let mut out: Vec<(Var, Const)> = Vec::with_capacity(pattern.len());
    for (&v, &c) in pattern.iter().zip(args) {
        match out.iter().find(|(w, _)| *w == v) {
            Some(&(_, d)) if d != c => return None,
            Some(_) => {}
            None => out.push((v, c)),
        }
    }
    Some(out)
}

fn substlet(pairs: impl IntoIterator<Item = (Var, Const)>) -> Substlet {
    Substlet::from_pairs(pairs).expect("bound pairs have distinct variables")
}

/// Atoms of `pred` matching `args` whose label passes `label_ok`, as
/// substlets over the free variables (the bound variable, if any, dropped).
fn matches<'a>(
    inst: &'a MatchInstance,
    pred: Pred,
    args: &'a [Var],
    bound: Option<Var>,
    mut label_ok: impl FnMut(TruthLabel) -> bool + 'a,
) -> impl Iterator<Item = (usize, Substlet)> + 'a {
    inst.interp.atoms().iter().enumerate().filter_map(move |(i, a)| {
        if a.pred != pred || !label_ok(a.label) {
            return None;
        }
        let b = bind(args, &a.args)?;
        Some((i, substlet(b.into_iter().filter(|(v, _)| Some(*v) != bound))))
    })
}

pub fn translate(inst: &MatchInstance) -> TranslationOutput {
    translate_restricted(inst, &WeightFn::new(), &Alpha::All)
}

pub fn translate_restricted(inst: &MatchInstance, weights: &WeightFn, alpha: &Alpha) -> TranslationOutput {
    let atoms = inst.interp.atoms();
    let ok = |i: usize| alpha.admits(weights.get(&atoms[i]));
    let mut positive = Vec::new();
    let mut clause_atoms = Vec::new();
    for a in inst.formula.premises() {
        let (pred, label, args) = atom_form(inst, a).expect("premises are simple or #f");
        let mut members: Vec<(Substlet, usize)> =
            matches(inst, pred, &args, None, move |l| l != label).filter(|(i, _)| ok(*i)).map(|(i, s)| (s, i)).collect();
        members.sort();
        members.dedup_by(|x, y| x.0 == y.0);
        clause_atoms.push(members.iter().map(|m| m.1).collect());
        positive.push(Clause::new(a.free_vars(), members.into_iter().map(|m| m.0).collect()).expect("shared domain"));
    }

    let mut negative: Vec<Blocking> = Vec::new();
    let mut origins = Vec::new();
    let mut seen: HashSet<Substlet> = HashSet::new();
    for (j, b) in inst.formula.conclusions().iter().enumerate() {
        let mut found: Vec<(Substlet, BlockingKind)> = Vec::new();
        let (pred, label, args, bound) = match b {
            GeometricLiteral::Equality(x, y) => {
                for &c in inst.interp.constants() {
                    found.push((substlet([(*x, c), (*y, c)]), BlockingKind::True));
                }
                found.sort_by(|p, q| p.0.cmp(&q.0));
                push_blockings(found, j, &mut seen, &mut negative, &mut origins);
                continue;
            }
            GeometricLiteral::Exists { bound, pred, label, args } => (*pred, *label, args.clone(), Some(*bound)),
            other => {
                let (p, l, a) = atom_form(inst, other).expect("atom form");
                (p, l, a, None)
            }
        };
        found.extend(matches(inst, pred, &args, bound, |l| l == label).map(|(_, s)| (s, BlockingKind::True)));
        if *alpha != Alpha::All {
            found.extend(
                matches(inst, pred, &args, bound, |l| l != label)
                    .filter(|(i, _)| !ok(*i))
                    .map(|(i, s)| (s, BlockingKind::Excluded { atom: i })),
            );
        }
        found.sort_by(|p, q| p.0.cmp(&q.0));
        push_blockings(found, j, &mut seen, &mut negative, &mut origins);
    }
    TranslationOutput {
        gcsp: Gcsp::new(positive, negative, inst.symbols.clone()),
        provenance: Provenance { clause_atoms, blockings: origins },
    }
}

fn push_blockings(
    found: Vec<(Substlet, BlockingKind)>,
    conclusion: usize,
    seen: &mut HashSet<Substlet>,
    negative: &mut Vec<Blocking>,
    origins: &mut Vec<BlockingOrigin>,
) {
    for (s, kind) in found {
        if seen.insert(s.clone()) {
            negative.push(Blocking(s));
            origins.push(BlockingOrigin { conclusion, kind });
        }
    }
}

/// Why preprocessing gave up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnsatReason {
    /// A clause with no members (index into the input clauses).
    EmptyClause(usize),
    /// A blocking without variables.
    PropositionalBlocking(usize),
    /// Removing the substlets that imply a unit blocking emptied a clause.
    EmptiedClause(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preprocessed {
    Simplified(Gcsp),
    TriviallyUnsat(UnsatReason),
}

impl Preprocessed {
    pub fn gcsp(&self) -> Option<&Gcsp> {
        match self {
            Preprocessed::Simplified(g) => Some(g),
            Preprocessed::TriviallyUnsat(_) => None,
        }
    }
}

/// Drops propositional clauses and blockings and removes unit blockings,
/// iterating until nothing changes. Clause indices in `UnsatReason` refer
/// to the input.
pub fn preprocess(gcsp: &Gcsp) -> Preprocessed {
    let mut clauses: Vec<(usize, Clause)> = gcsp.positive.iter().cloned().enumerate().collect();
    let mut blockings: Vec<Blocking> = gcsp.negative.clone();
    for (i, b) in blockings.iter().enumerate() {
        if b.vars().is_empty() {
            return Preprocessed::TriviallyUnsat(UnsatReason::PropositionalBlocking(i));
        }
    }
    loop {
        let mut changed = false;
        for (i, c) in &clauses {
            if c.is_empty() {
                return Preprocessed::TriviallyUnsat(UnsatReason::EmptyClause(*i));
            }
        }
        let before = clauses.len();
        clauses.retain(|(_, c)| !c.domain().is_empty());
        changed |= clauses.len() != before;

        let mut kept = Vec::with_capacity(blockings.len());
        for b in blockings {
            let covering: Vec<usize> = (0..clauses.len())
                .filter(|&k| b.vars().iter().all(|&v| clauses[k].1.contains_var(v)))
                .collect();
            if covering.is_empty() {
                kept.push(b);
                continue;
            }
            changed = true;
            for k in covering {
                let (orig, c) = &mut clauses[k];
                c.retain(|s| !b.substlet().iter().all(|(v, x)| s.get(v) == Some(x)));
                if c.is_empty() {
                    return Preprocessed::TriviallyUnsat(UnsatReason::EmptiedClause(*orig));
                }
            }
        }
        blockings = kept;
        if !changed {
            break;
        }
    }
    Preprocessed::Simplified(Gcsp::new(
        clauses.into_iter().map(|(_, c)| c).collect(),
        blockings,
        gcsp.symbols.clone(),
    ))
}

/// The weight-relevant atom behind a blocking, for diagnostics.
pub fn blocking_atom<'a>(inst: &'a MatchInstance, origin: &BlockingOrigin) -> Option<&'a GroundAtom> {
    match origin.kind {
        BlockingKind::Excluded { atom } => inst.interp.atoms().get(atom),
        BlockingKind::True => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_instance, InstanceFile};

    const INTERP: &str = "interp:\nP t x0 x0\nP e x0 x1\nP t x1 x1\nP e x1 x2\nQ t x2 x0\n# x0\n# x1\n# x2\n";

    fn inst(formula: &str) -> MatchInstance {
        match parse_instance(&format!("{INTERP}formula:\n{formula}\n")).unwrap() {
            InstanceFile::Matching { inst, .. } => inst,
            _ => panic!(),
        }
    }

    fn rows(g: &Gcsp) -> (Vec<String>, Vec<String>) {
        (
            g.positive.iter().map(|c| c.display(&g.symbols).to_string()).collect(),
            g.negative.iter().map(|b| b.substlet().display(&g.symbols).to_string()).collect(),
        )
    }

    #[test]
    fn propositional_premise_and_conclusion() {
        let m = match parse_instance("interp:\nR t\n# a\nformula:\nR f, #f X | R t\n").unwrap() {
            InstanceFile::Matching { inst, .. } => inst,
            _ => panic!(),
        };
        let out = translate(&m);
        assert_eq!(out.gcsp.positive[0].len(), 1);
        assert!(out.gcsp.positive[0].domain().is_empty());
        assert!(out.gcsp.negative[0].vars().is_empty());
        assert_eq!(preprocess(&out.gcsp), Preprocessed::TriviallyUnsat(UnsatReason::PropositionalBlocking(0)));
    }

    #[test]
    fn domain_premise_gives_all_constants() {
        let out = translate(&inst("#f X | P t X X"));
        assert_eq!(out.gcsp.positive[0].len(), 3);
        assert_eq!(out.gcsp.negative.len(), 2);
    }

    #[test]
    fn provenance_names_clashing_atoms() {
        let m = inst("P f X Y, P f Y Z | Q t Z X");
        let out = translate(&m);
        for (c, atoms) in out.gcsp.positive.iter().zip(&out.provenance.clause_atoms) {
            assert_eq!(c.len(), atoms.len());
            for &a in atoms {
                assert_ne!(m.interp.atoms()[a].label, TruthLabel::F);
            }
        }
        assert_eq!(out.provenance.blockings, vec![BlockingOrigin { conclusion: 0, kind: BlockingKind::True }]);
    }

    #[test]
    fn unit_blocking_applies_to_all_covering_clauses() {
        let g = crate::format::parse_gcsp(
            "clause (X,Y): (0,0) (0,1) (1,1)\nclause (X,Z): (0,2) (1,2)\nblocking (X): (0)\n",
        )
        .unwrap();
        let Preprocessed::Simplified(p) = preprocess(&g) else { panic!() };
        let (c, b) = rows(&p);
        assert_eq!(c, vec!["(X,Y) / (1,1)", "(X,Z) / (1,2)"]);
        assert!(b.is_empty());
    }

    #[test]
    fn empty_clause_is_unsat() {
        let g = crate::format::parse_gcsp("clause (X):\n").unwrap();
        assert_eq!(preprocess(&g), Preprocessed::TriviallyUnsat(UnsatReason::EmptyClause(0)));
    }
}

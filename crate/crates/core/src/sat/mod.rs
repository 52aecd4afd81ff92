//! Propositional encodings of a GCSP, DIMACS output and model decoding.

mod dpll;
mod external;

pub use dpll::{enumerate_models, solve_cnf, Model};
pub use external::{parse_output, run_external, ExternalOutcome, ExternalSolver, SatError};

use std::collections::HashMap;
use std::fmt::Write;

use thiserror::Error;

use crate::types::{merge, Const, Gcsp, Substitution, Substlet, Var};

/// A propositional clause set over variables `1..=num_vars`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    fn push(&mut self, c: Vec<i32>) {
        debug_assert!(c.iter().all(|l| *l != 0 && l.unsigned_abs() <= self.num_vars));
        debug_assert!(!c.iter().any(|l| c.contains(&-l)));
        self.clauses.push(c);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKey {
    /// Member `j` of clause `i`.
    Substlet(usize, usize),
    Assign(Var, Const),
}

/// Numbering of propositional variables, 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AtomMap {
    keys: Vec<AtomKey>,
    index: HashMap<AtomKey, u32>,
}

impl AtomMap {
    fn add(&mut self, k: AtomKey) -> u32 {
        *self.index.entry(k).or_insert_with(|| {
            self.keys.push(k);
            self.keys.len() as u32
        })
    }

    pub fn get(&self, k: &AtomKey) -> Option<u32> {
        self.index.get(k).copied()
    }

    pub fn key(&self, atom: u32) -> Option<AtomKey> {
        self.keys.get((atom as usize).checked_sub(1)?).copied()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Encoding {
    /// Substlet atoms only.
    #[default]
    V1,
    /// Substlet atoms plus assignment atoms.
    V2,
}

/// Clause counts per part, in emission order.
pub type PartSizes = Vec<usize>;

fn substlet_atoms(g: &Gcsp, map: &mut AtomMap) {
    for (i, c) in g.positive.iter().enumerate() {
        for j in 0..c.len() {
            map.add(AtomKey::Substlet(i, j));
        }
    }
}

fn lit(map: &AtomMap, k: AtomKey) -> i32 {
    map.get(&k).expect("numbered atom") as i32
}

/// Covering clauses for the blocking variables: per uncovered variable, the
/// covering clause with the fewest members (ties by index).
fn cover(g: &Gcsp, sigma: &Substlet) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for &v in sigma.vars() {
        if chosen.iter().any(|&i| g.positive[i].contains_var(v)) {
            continue;
        }
        let best = (0..g.positive.len())
            .filter(|&i| g.positive[i].contains_var(v))
            .min_by_key(|&i| (g.positive[i].len(), i))
            .expect("range restricted");
        chosen.push(best);
    }
    chosen.sort();
    chosen
}

/// Exactly one member per clause, pairwise compatibility between clauses
/// sharing a variable, and one covering clause per blocking.
pub fn translate_v1(g: &Gcsp) -> (Cnf, AtomMap, PartSizes) {
    let mut map = AtomMap::default();
    substlet_atoms(g, &mut map);
    let mut cnf = Cnf { num_vars: map.len() as u32, clauses: Vec::new() };
    let mut parts = Vec::new();
    let n = g.positive.len();
    for (i, c) in g.positive.iter().enumerate() {
        cnf.push((0..c.len()).map(|j| lit(&map, AtomKey::Substlet(i, j))).collect());
    }
    for (i, c) in g.positive.iter().enumerate() {
        for j1 in 0..c.len() {
            for j2 in j1 + 1..c.len() {
                cnf.push(vec![-lit(&map, AtomKey::Substlet(i, j1)), -lit(&map, AtomKey::Substlet(i, j2))]);
            }
        }
    }
    parts.push(cnf.clauses.len());
    for i1 in 0..n {
        for i2 in 0..n {
            let (c1, c2) = (&g.positive[i1], &g.positive[i2]);
            if i1 == i2 || !c1.domain().iter().any(|v| c2.contains_var(*v)) {
                continue;
            }
            for (j, s) in c1.members().iter().enumerate() {
                let mut cl = vec![-lit(&map, AtomKey::Substlet(i1, j))];
                for (j2, s2) in c2.members().iter().enumerate() {
                    if !s.conflicts(s2) {
                        cl.push(lit(&map, AtomKey::Substlet(i2, j2)));
                    }
                }
                cnf.push(cl);
            }
        }
    }
    parts.push(cnf.clauses.len() - parts.iter().sum::<usize>());
    let before = cnf.clauses.len();
    for b in &g.negative {
        let mut cl = Vec::new();
        for i in cover(g, b.substlet()) {
            for (j, s) in g.positive[i].members().iter().enumerate() {
                let l = lit(&map, AtomKey::Substlet(i, j));
                if s.conflicts(b.substlet()) && !cl.contains(&l) {
                    cl.push(l);
                }
            }
        }
        cnf.push(cl);
    }
    parts.push(cnf.clauses.len() - before);
    (cnf, map, parts)
}

/// At least one member per clause, members imply their assignments, at most
/// one value per variable, and blockings as negative assignment clauses.
pub fn translate_v2(g: &Gcsp) -> (Cnf, AtomMap, PartSizes) {
    let mut map = AtomMap::default();
    substlet_atoms(g, &mut map);
    let mut assigns: Vec<(Var, Const)> =
        g.positive.iter().flat_map(|c| c.members().iter().flat_map(|s| s.iter())).collect();
    assigns.sort();
    assigns.dedup();
    for &(v, x) in &assigns {
        map.add(AtomKey::Assign(v, x));
    }
    let mut cnf = Cnf { num_vars: map.len() as u32, clauses: Vec::new() };
    let mut parts = Vec::new();
    for (i, c) in g.positive.iter().enumerate() {
        cnf.push((0..c.len()).map(|j| lit(&map, AtomKey::Substlet(i, j))).collect());
    }
    parts.push(cnf.clauses.len());
    let mut before = cnf.clauses.len();
    for (i, c) in g.positive.iter().enumerate() {
        for (j, s) in c.members().iter().enumerate() {
            for (v, x) in s.iter() {
                cnf.push(vec![-lit(&map, AtomKey::Substlet(i, j)), lit(&map, AtomKey::Assign(v, x))]);
            }
        }
    }
    parts.push(cnf.clauses.len() - before);
    before = cnf.clauses.len();
    for (k, &(v, x1)) in assigns.iter().enumerate() {
        for &(w, x2) in &assigns[k + 1..] {
            if w == v {
                cnf.push(vec![-lit(&map, AtomKey::Assign(v, x1)), -lit(&map, AtomKey::Assign(v, x2))]);
            }
        }
    }
    parts.push(cnf.clauses.len() - before);
    before = cnf.clauses.len();
    for b in &g.negative {
        let atoms: Option<Vec<i32>> = b.substlet().iter().map(|(v, x)| map.get(&AtomKey::Assign(v, x)).map(|a| -(a as i32))).collect();
        if let Some(cl) = atoms {
            cnf.push(cl);
        }
    }
    parts.push(cnf.clauses.len() - before);
    (cnf, map, parts)
}

pub fn translate(g: &Gcsp, enc: Encoding) -> (Cnf, AtomMap, PartSizes) {
    match enc {
        Encoding::V1 => translate_v1(g),
        Encoding::V2 => translate_v2(g),
    }
}

/// `p cnf <vars> <clauses>` followed by one zero-terminated clause per line.
pub fn emit_dimacs(cnf: &Cnf) -> String {
    let mut out = format!("p cnf {} {}\n", cnf.num_vars, cnf.clauses.len());
    for c in &cnf.clauses {
        for l in c {
            write!(out, "{l} ").expect("write to string");
        }
        out.push_str("0\n");
    }
    out
}

/// Parses DIMACS text; comment lines start with `c`.
pub fn parse_dimacs(text: &str) -> Result<Cnf, SatError> {
    let mut cnf = Cnf::default();
    let mut header = None;
    let mut cur = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf") {
            let nums: Vec<usize> = rest.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| SatError::Dimacs(line.into()))?;
            if nums.len() != 2 {
                return Err(SatError::Dimacs(line.into()));
            }
            cnf.num_vars = nums[0] as u32;
            header = Some(nums[1]);
            continue;
        }
        for t in line.split_whitespace() {
            let l: i32 = t.parse().map_err(|_| SatError::Dimacs(line.into()))?;
            if l == 0 {
                cnf.clauses.push(std::mem::take(&mut cur));
            } else {
                cur.push(l);
            }
        }
    }
    match header {
        Some(n) if n == cnf.clauses.len() && cur.is_empty() => Ok(cnf),
        _ => Err(SatError::Dimacs("header does not match the clause list".into())),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("model decodes to conflicting assignments")]
pub struct InconsistentModel;

/// Reads a GCSP substitution off a model of `translate(g, enc)`.
pub fn decode_model(g: &Gcsp, enc: Encoding, map: &AtomMap, model: &Model) -> Result<Substitution, InconsistentModel> {
    match enc {
        Encoding::V1 => {
            let chosen: Vec<Substlet> = (1..=map.len() as u32)
                .filter(|&a| model.value(a))
                .filter_map(|a| match map.key(a) {
                    Some(AtomKey::Substlet(i, j)) => Some(g.positive[i].members()[j].clone()),
                    _ => None,
                })
                .collect();
            merge(&chosen).map_err(|_| InconsistentModel)
        }
        Encoding::V2 => {
            let mut t = Substitution::new();
            for a in (1..=map.len() as u32).filter(|&a| model.value(a)) {
                if let Some(AtomKey::Assign(v, x)) = map.key(a) {
                    t.assign(v, x).map_err(|_| InconsistentModel)?;
                }
            }
            Ok(t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_gcsp;

    const EX: &str = "clause (X,Y): (0,1) (1,0)\nclause (Y,Z): (0,0) (0,1) (1,0)\nblocking (X,Z): (0,0)\nblocking (X,Z): (1,1)\n";

    #[test]
    fn v1_parts() {
        let g = parse_gcsp(EX).unwrap();
        let (cnf, _, parts) = translate_v1(&g);
        assert_eq!(parts, vec![6, 5, 2]);
        assert_eq!(cnf.clauses[6..11], [vec![-1, 5], vec![-2, 3, 4], vec![-3, 2], vec![-4, 2], vec![-5, 1]]);
        assert_eq!(cnf.clauses[11..], [vec![2, 4], vec![1, 3, 5]]);
    }

    #[test]
    fn v2_skips_impossible_blocking() {
        let g = parse_gcsp("clause (X): (0)\nblocking (X): (1)\n").unwrap();
        let (cnf, _, parts) = translate_v2(&g);
        assert_eq!(parts, vec![1, 1, 0, 0]);
        assert_eq!(cnf.clauses, vec![vec![1], vec![-1, 2]]);
    }

    #[test]
    fn dimacs_round_trip() {
        assert_eq!(emit_dimacs(&Cnf::default()), "p cnf 0 0\n");
        let cnf = Cnf { num_vars: 2, clauses: vec![vec![1, -2]] };
        assert_eq!(emit_dimacs(&cnf), "p cnf 2 1\n1 -2 0\n");
        assert_eq!(parse_dimacs(&emit_dimacs(&cnf)).unwrap(), cnf);
        assert!(parse_dimacs("p cnf 2 2\n1 0\n").is_err());
    }

    #[test]
    fn empty_gcsp_decodes_to_empty_substitution() {
        let g = Gcsp::default();
        let (cnf, map, _) = translate_v1(&g);
        let m = solve_cnf(&cnf).unwrap();
        assert_eq!(decode_model(&g, Encoding::V1, &map, &m).unwrap(), Substitution::new());
    }
}

//! Seeded random instances and the parity-chain family.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::format::{parse_instance, InstanceFile};
use crate::geometric::MatchInstance;
use crate::optimal::WeightFn;
use crate::types::{Blocking, Clause, Const, Gcsp, Substlet, Symbols, Var};

/// Upper bounds for random GCSPs; actual sizes are drawn below them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GcspParams {
    pub vars: usize,
    pub consts: usize,
    pub clauses: usize,
    pub substlets: usize,
    pub blockings: usize,
    pub max_arity: usize,
}

impl Default for GcspParams {
    fn default() -> Self {
        GcspParams { vars: 6, consts: 4, clauses: 6, substlets: 8, blockings: 4, max_arity: 3 }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random range-restricted GCSP: blocking variables are drawn from clause
/// domains only.
pub fn random_gcsp(p: &GcspParams, rng: &mut impl Rng) -> Gcsp {
    let mut symbols = Symbols::new();
    let nv = rng.gen_range(1..=p.vars.max(1));
    let nc = rng.gen_range(1..=p.consts.max(1));
    let vars: Vec<Var> = (0..nv).map(|i| symbols.var(&format!("X{i}"))).collect();
    let consts: Vec<Const> = (0..nc).map(|i| symbols.constant(&format!("{i}"))).collect();
    let ncl = rng.gen_range(1..=p.clauses.max(1));
    let mut positive = Vec::with_capacity(ncl);
    for _ in 0..ncl {
        let arity = rng.gen_range(1..=p.max_arity.min(nv).max(1));
        let mut dom: Vec<Var> = vars.choose_multiple(rng, arity).copied().collect();
        dom.sort();
        let m = rng.gen_range(1..=p.substlets.max(1));
        let members = (0..m)
            .map(|_| {
                let vals = dom.iter().map(|_| *consts.choose(rng).expect("constants")).collect();
                Substlet::new(dom.clone(), vals).expect("distinct domain")
            })
            .collect();
        positive.push(Clause::new(dom, members).expect("members share the domain"));
    }
    let mut covered: Vec<Var> = positive.iter().flat_map(|c| c.domain().iter().copied()).collect();
    covered.sort();
    covered.dedup();
    let nb = rng.gen_range(0..=p.blockings);
    let mut negative = Vec::with_capacity(nb);
    for _ in 0..nb {
        let arity = rng.gen_range(1..=covered.len().min(3));
        let mut dom: Vec<Var> = covered.choose_multiple(rng, arity).copied().collect();
        dom.sort();
        let vals = dom.iter().map(|_| *consts.choose(rng).expect("constants")).collect();
        negative.push(Blocking(Substlet::new(dom, vals).expect("distinct domain")));
    }
    Gcsp::new(positive, negative, symbols)
}

/// `count` instances from consecutive seeds starting at `seed`.
pub fn corpus(p: &GcspParams, seed: u64, count: usize) -> Vec<Gcsp> {
    (0..count as u64).map(|i| random_gcsp(p, &mut rng(seed.wrapping_add(i)))).collect()
}

/// Parity chain with `n ≥ 2` XOR triples, unsatisfiable for every `n`.
///
/// Triple `i` owns variables `Xi_1, Xi_2, Xi_3` and a clause listing the
/// bit patterns of even parity (odd for the last triple). Equality clauses
/// link `Xi_2` to `X(i+1)_1` around a ring and pair the third variables
/// across it; with `n` odd the unpaired third variable is fixed to `0`.
/// Every variable is thereby counted twice overall, so the parities add up
/// to an odd number and no solution exists.
pub fn parity_chain(n: usize) -> Gcsp {
    assert!(n >= 2, "a parity chain needs at least two triples");
    let mut symbols = Symbols::new();
    let zero = symbols.constant("0");
    let one = symbols.constant("1");
    let bit = |b: u32| if b == 1 { one } else { zero };
    let x: Vec<[Var; 3]> = (1..=n)
        .map(|i| [1, 2, 3].map(|j| symbols.var(&format!("X{i}_{j}"))))
        .collect();
    let mut positive = Vec::new();
    for (i, t) in x.iter().enumerate() {
        let odd = u32::from(i + 1 == n);
        let rows: Vec<Vec<Const>> = (0..8u32)
            .filter(|b| b.count_ones() % 2 == odd)
            .map(|b| vec![bit(b >> 2 & 1), bit(b >> 1 & 1), bit(b & 1)])
            .collect();
        positive.push(Clause::from_rows(t, &rows).expect("valid rows"));
    }
    let eq = |a: Var, b: Var| Clause::from_rows(&[a, b], &[vec![zero, zero], vec![one, one]]).expect("valid rows");
    for i in 0..n {
        positive.push(eq(x[i][1], x[(i + 1) % n][0]));
    }
    let half = n / 2;
    for i in 0..half {
        positive.push(eq(x[i][2], x[i + n.div_ceil(2)][2]));
    }
    if n % 2 == 1 {
        positive.push(Clause::from_rows(&[x[half][2]], &[vec![zero]]).expect("valid rows"));
    }
    Gcsp::new(positive, Vec::new(), symbols)
}

/// Upper bounds for random matching instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchParams {
    pub consts: usize,
    pub premises: usize,
    pub conclusions: usize,
    /// Largest weight element.
    pub max_weight: u32,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams { consts: 3, premises: 3, conclusions: 2, max_weight: 4 }
    }
}

const LABELS: [&str; 3] = ["f", "e", "t"];

/// Text of a random weighted matching instance over predicates `P`, `Q`
/// (binary) and `R` (unary).
pub fn random_match_text(p: &MatchParams, rng: &mut impl Rng) -> String {
    let nc = rng.gen_range(1..=p.consts.max(1));
    let cs: Vec<String> = (0..nc).map(|i| format!("x{i}")).collect();
    let mut atoms = Vec::new();
    for pred in ["P", "Q"] {
        for a in &cs {
            for b in &cs {
                if rng.gen_bool(0.5) {
                    atoms.push(format!("{pred} {} {a} {b}", LABELS.choose(rng).unwrap()));
                }
            }
        }
    }
    for a in &cs {
        if rng.gen_bool(0.5) {
            atoms.push(format!("R {} {a}", LABELS.choose(rng).unwrap()));
        }
    }
    let vars = ["X", "Y", "Z"];
    let lit = |rng: &mut dyn rand::RngCore, pool: &[&str]| -> String {
        let label = LABELS.choose(rng).unwrap();
        match rng.gen_range(0..3) {
            0 => format!("R {label} {}", pool.choose(rng).unwrap()),
            k => format!("{} {label} {} {}", ["P", "Q"][k - 1], pool.choose(rng).unwrap(), pool.choose(rng).unwrap()),
        }
    };
    let np = rng.gen_range(1..=p.premises.max(1));
    let mut premises: Vec<String> = (0..np)
        .map(|_| if rng.gen_bool(0.1) { format!("#f {}", vars.choose(rng).unwrap()) } else { lit(rng, &vars) })
        .collect();
    premises.dedup();
    let mut used: Vec<&str> = vars.iter().copied().filter(|v| premises.iter().any(|l| l.split(' ').skip(1).any(|t| t == *v))).collect();
    used.dedup();
    let nq = rng.gen_range(0..=p.conclusions);
    let conclusions: Vec<String> = (0..nq)
        .map(|_| match rng.gen_range(0..4) {
            0 if used.len() >= 2 => {
                let two: Vec<&&str> = used.choose_multiple(rng, 2).collect();
                format!("{} = {}", two[0], two[1])
            }
            1 => format!("exists W P {} {} W", LABELS.choose(rng).unwrap(), used.choose(rng).unwrap()),
            _ => lit(rng, &used),
        })
        .collect();
    let mut out = String::from("interp:\n");
    for c in &cs {
        out.push_str(&format!("# {c}\n"));
    }
    for a in &atoms {
        out.push_str(a);
        out.push('\n');
    }
    out.push_str(&format!("formula:\n{} | {}\n", premises.join(", "), conclusions.join(", ")));
    out.push_str("weights:\n");
    let domain_atoms: Vec<String> = cs.iter().map(|c| format!("# {c}")).collect();
    for a in atoms.iter().chain(&domain_atoms) {
        if rng.gen_bool(0.7) {
            let k = rng.gen_range(1..=2);
            let mut w: Vec<u32> = (0..k).map(|_| rng.gen_range(0..=p.max_weight)).collect();
            w.sort();
            w.dedup();
            let w: Vec<String> = w.iter().map(u32::to_string).collect();
            out.push_str(&format!("{a} : {{{}}}\n", w.join(",")));
        }
    }
    out
}

/// A random weighted matching instance.
pub fn random_match(p: &MatchParams, rng: &mut impl Rng) -> (MatchInstance, WeightFn) {
    let text = random_match_text(p, rng);
    match parse_instance(&text) {
        Ok(InstanceFile::Matching { inst, weights }) => (inst, weights),
        other => panic!("generated instance does not parse: {other:?}\n{text}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::print_gcsp;
    use crate::oracle::{is_satisfiable, SizeBudget};

    #[test]
    fn same_seed_same_instance() {
        let p = GcspParams::default();
        assert_eq!(print_gcsp(&random_gcsp(&p, &mut rng(7))), print_gcsp(&random_gcsp(&p, &mut rng(7))));
        assert_eq!(random_match_text(&MatchParams::default(), &mut rng(3)), random_match_text(&MatchParams::default(), &mut rng(3)));
    }

    #[test]
    fn generated_gcsps_are_range_restricted() {
        for g in corpus(&GcspParams::default(), 0, 200) {
            g.check_range_restricted().unwrap();
        }
    }

    #[test]
    fn parity_chains_are_unsat() {
        for n in 2..=4 {
            assert!(!is_satisfiable(&parity_chain(n), &SizeBudget { max_vars: 16, ..SizeBudget::default() }).unwrap());
        }
    }

    #[test]
    fn matching_instances_parse() {
        for s in 0..300 {
            random_match(&MatchParams::default(), &mut rng(s));
        }
    }
}

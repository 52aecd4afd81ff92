//! Text formats for matching instances and raw GCSPs.
//!
//! ```text
//! % comment
//! interp:
//! P t x0 x0
//! # x0
//! formula:
//! P f X Y, #f Z | Q t Y X, X = Y, exists W Q t X W
//! weights:
//! P t x0 x0 : {1,2}
//! ```
//!
//! ```text
//! vars X Y Z
//! consts 0 1
//! clause (X,Y): (0,1) (1,0)
//! blocking (X,Z): (0,0)
//! ```
//!
//! The optional `vars` and `consts` lines fix the id order of names.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometric::{
    GeometricError, GeometricFormula, GeometricLiteral, GroundAtom, Interpretation, MatchInstance, Pred, TruthLabel,
    DOMAIN_PRED,
};
use crate::optimal::WeightFn;
use crate::types::{Blocking, Clause, Const, Gcsp, Interner, Substlet, Symbols, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: not range restricted: {message}")]
    RangeRestriction { line: usize, message: String },
}

fn perr(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// A parsed instance file.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum InstanceFile {
    Matching { inst: MatchInstance, weights: WeightFn },
    Gcsp(Gcsp),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Interp,
    Formula,
    Weights,
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
        .collect();
    let is_gcsp = lines.iter().any(|(_, l)| {
        l.starts_with("clause") || l.starts_with("blocking") || l.starts_with("vars") || l.starts_with("consts")
    });
    let is_matching = lines.iter().any(|(_, l)| matches!(*l, "interp:" | "formula:" | "weights:"));
    match (is_gcsp, is_matching) {
        (true, true) => Err(perr(lines[0].0, "file mixes GCSP lines and matching sections")),
        (true, false) => parse_gcsp_lines(&lines).map(InstanceFile::Gcsp),
        (false, _) => parse_matching_lines(&lines),
    }
}

/// Parses a raw GCSP file.
pub fn parse_gcsp(text: &str) -> Result<Gcsp, FormatError> {
    match parse_instance(text)? {
        InstanceFile::Gcsp(g) => Ok(g),
        InstanceFile::Matching { .. } => Err(perr(1, "expected a GCSP file")),
    }
}

fn parse_tuple(s: &str, line: usize) -> Result<(Vec<String>, &str), FormatError> {
    let s = s.trim_start();
    let rest = s.strip_prefix('(').ok_or_else(|| perr(line, format!("expected '(' at {s:?}")))?;
    let end = rest.find(')').ok_or_else(|| perr(line, "unclosed '('"))?;
    let inner = rest[..end].trim();
    let items = if inner.is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|t| t.trim().to_string()).collect::<Vec<_>>()
    };
    if items.iter().any(|t| t.is_empty() || t.contains(char::is_whitespace)) {
        return Err(perr(line, format!("bad tuple ({inner})")));
    }
    Ok((items, &rest[end + 1..]))
}

fn parse_gcsp_lines(lines: &[(usize, &str)]) -> Result<Gcsp, FormatError> {
    let mut symbols = Symbols::new();
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut blocking_lines = Vec::new();
    for &(ln, l) in lines {
        let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        match kw {
            "vars" => rest.split_whitespace().for_each(|n| {
                symbols.var(n);
            }),
            "consts" => rest.split_whitespace().for_each(|n| {
                symbols.constant(n);
            }),
            "clause" | "blocking" => {
                let (vars, after) = parse_tuple(rest, ln)?;
                let after = after.trim_start().strip_prefix(':').ok_or_else(|| perr(ln, "expected ':'"))?;
                let vars: Vec<Var> = vars.iter().map(|n| symbols.var(n)).collect();
                let mut rows = Vec::new();
                let mut cur = after.trim();
                while !cur.is_empty() {
                    let (vals, next) = parse_tuple(cur, ln)?;
                    if vals.len() != vars.len() {
                        return Err(perr(ln, "tuple length differs from the domain"));
                    }
                    rows.push(vals.iter().map(|n| symbols.constant(n)).collect::<Vec<Const>>());
                    cur = next.trim();
                }
                let mut members = Vec::with_capacity(rows.len());
                for r in rows {
                    members.push(Substlet::new(vars.clone(), r).map_err(|e| perr(ln, e.to_string()))?);
                }
                if kw == "clause" {
                    positive.push(Clause::new(vars, members).map_err(|e| perr(ln, e.to_string()))?);
                } else {
                    if members.len() != 1 {
                        return Err(perr(ln, "a blocking has exactly one tuple"));
                    }
                    negative.push(Blocking(members.pop().expect("one member")));
                    blocking_lines.push(ln);
                }
            }
            _ => return Err(perr(ln, format!("unknown line {l:?}"))),
        }
    }
    let g = Gcsp::new(positive, negative, symbols);
    if let Err(e) = g.check_range_restricted() {
        return Err(FormatError::RangeRestriction {
            line: blocking_lines[e.blocking],
            message: format!("variable {} occurs in no clause", g.symbols.var_name(e.var)),
        });
    }
    Ok(g)
}

fn parse_literal(
    text: &str,
    ln: usize,
    symbols: &mut Symbols,
    preds: &mut Interner,
) -> Result<GeometricLiteral, FormatError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let label = |s: &str| TruthLabel::parse(s).ok_or_else(|| perr(ln, format!("bad label {s:?}")));
    match toks.as_slice() {
        [] => Err(perr(ln, "empty literal")),
        ["exists", bound, p, lab, args @ ..] => {
            let bound = symbols.var(bound);
            Ok(GeometricLiteral::Exists {
                bound,
                pred: Pred(preds.intern(p)),
                label: label(lab)?,
                args: args.iter().map(|a| symbols.var(a)).collect(),
            })
        }
        [a, "=", b] => Ok(GeometricLiteral::Equality(symbols.var(a), symbols.var(b))),
        ["#f", x] | ["#", "f", x] => Ok(GeometricLiteral::DomainF(symbols.var(x))),
        ["#t", x] | ["#", "t", x] => Ok(GeometricLiteral::DomainT(symbols.var(x))),
        [p, lab, args @ ..] => Ok(GeometricLiteral::Simple {
            pred: Pred(preds.intern(p)),
            label: label(lab)?,
            args: args.iter().map(|a| symbols.var(a)).collect(),
        }),
        _ => Err(perr(ln, format!("bad literal {text:?}"))),
    }
}

fn parse_ground(toks: &[&str], ln: usize, symbols: &mut Symbols, preds: &mut Interner) -> Result<GroundAtom, FormatError> {
    match toks {
        ["#", c] => Ok(GroundAtom { pred: Pred(preds.intern(DOMAIN_PRED)), label: TruthLabel::T, args: vec![symbols.constant(c)] }),
        [p, lab, args @ ..] => Ok(GroundAtom {
            pred: Pred(preds.intern(p)),
            label: TruthLabel::parse(lab).ok_or_else(|| perr(ln, format!("bad label {lab:?}")))?,
            args: args.iter().map(|a| symbols.constant(a)).collect(),
        }),
        _ => Err(perr(ln, "bad atom")),
    }
}

fn parse_matching_lines(lines: &[(usize, &str)]) -> Result<InstanceFile, FormatError> {
    let mut symbols = Symbols::new();
    let mut preds = Interner::new();
    let domain = Pred(preds.intern(DOMAIN_PRED));
    let mut section = Section::None;
    let mut atoms: Vec<(usize, GroundAtom)> = Vec::new();
    let mut formula: Option<(usize, Vec<GeometricLiteral>, Vec<GeometricLiteral>)> = None;
    let mut weights_raw: Vec<(usize, GroundAtom, BTreeSet<u32>)> = Vec::new();
    for &(ln, l) in lines {
        match l {
            "interp:" => section = Section::Interp,
            "formula:" => section = Section::Formula,
            "weights:" => section = Section::Weights,
            _ => match section {
                Section::None => return Err(perr(ln, "content before any section")),
                Section::Interp => {
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    atoms.push((ln, parse_ground(&toks, ln, &mut symbols, &mut preds)?));
                }
                Section::Formula => {
                    if formula.is_some() {
                        return Err(perr(ln, "only one formula line is allowed"));
                    }
                    let (lhs, rhs) = l.split_once('|').ok_or_else(|| perr(ln, "formula needs '|'"))?;
                    let side = |s: &str, symbols: &mut Symbols, preds: &mut Interner| {
                        s.split(',')
                            .map(str::trim)
                            .filter(|t| !t.is_empty())
                            .map(|t| parse_literal(t, ln, symbols, preds))
                            .collect::<Result<Vec<_>, _>>()
                    };
                    let a = side(lhs, &mut symbols, &mut preds)?;
                    let b = side(rhs, &mut symbols, &mut preds)?;
                    formula = Some((ln, a, b));
                }
                Section::Weights => {
                    let (atom, set) = l.split_once(':').ok_or_else(|| perr(ln, "weight line needs ':'"))?;
                    let toks: Vec<&str> = atom.split_whitespace().collect();
                    let a = parse_ground(&toks, ln, &mut symbols, &mut preds)?;
                    let set = set.trim();
                    let inner = set
                        .strip_prefix('{')
                        .and_then(|s| s.strip_suffix('}'))
                        .ok_or_else(|| perr(ln, "weights are written {n1,n2,...}"))?;
                    let mut ws = BTreeSet::new();
                    for t in inner.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                        ws.insert(t.parse::<u32>().map_err(|_| perr(ln, format!("bad weight {t:?}")))?);
                    }
                    weights_raw.push((ln, a, ws));
                }
            },
        }
    }
    let interp = Interpretation::new(atoms.iter().map(|(_, a)| a.clone()).collect(), domain).map_err(|e| {
        let line = match &e {
            GeometricError::NotRangeRestricted(c) => {
                atoms.iter().find(|(_, a)| a.args.contains(c)).map_or(0, |(l, _)| *l)
            }
            _ => atoms.first().map_or(0, |(l, _)| *l),
        };
        match e {
            GeometricError::NotRangeRestricted(c) => FormatError::RangeRestriction {
                line,
                message: format!("constant {} has no # atom", symbols.const_name(c)),
            },
            e => perr(line, e.to_string()),
        }
    })?;
    let (fl, a, b) = formula.ok_or_else(|| perr(lines.last().map_or(0, |l| l.0), "missing formula"))?;
    let formula = GeometricFormula::new(a, b).map_err(|e| match e {
        GeometricError::FormulaNotRangeRestricted(v) => FormatError::RangeRestriction {
            line: fl,
            message: format!("variable {} occurs in no premise", symbols.var_name(v)),
        },
        e => perr(fl, e.to_string()),
    })?;
    let mut weights = WeightFn::new();
    for (ln, a, ws) in weights_raw {
        if interp.label_of(a.pred, &a.args) != Some(a.label) {
            return Err(perr(ln, "weight given for an atom outside the interpretation"));
        }
        weights.set(a, ws);
    }
    Ok(InstanceFile::Matching { inst: MatchInstance { interp, formula, symbols, preds }, weights })
}

pub fn print_gcsp(g: &Gcsp) -> String {
    let mut out = String::new();
    let vars: Vec<&str> = g.symbols.vars.names().collect();
    let consts: Vec<&str> = g.symbols.consts.names().collect();
    if !vars.is_empty() {
        writeln!(out, "vars {}", vars.join(" ")).unwrap();
    }
    if !consts.is_empty() {
        writeln!(out, "consts {}", consts.join(" ")).unwrap();
    }
    let names = |vs: &[Var]| vs.iter().map(|&v| g.symbols.var_name(v)).collect::<Vec<_>>().join(",");
    let vals = |s: &Substlet| s.vals().iter().map(|&c| g.symbols.const_name(c)).collect::<Vec<_>>().join(",");
    for c in &g.positive {
        write!(out, "clause ({}):", names(c.domain())).unwrap();
        for s in c.members() {
            write!(out, " ({})", vals(s)).unwrap();
        }
        out.push('\n');
    }
    for b in &g.negative {
        writeln!(out, "blocking ({}): ({})", names(b.vars()), vals(b.substlet())).unwrap();
    }
    out
}

fn print_atom(inst: &MatchInstance, a: &GroundAtom) -> String {
    let args: Vec<String> = a.args.iter().map(|&c| inst.symbols.const_name(c)).collect();
    if a.pred == inst.interp.domain_pred() && a.label == TruthLabel::T {
        format!("# {}", args.join(" "))
    } else {
        let mut s = format!("{} {}", inst.pred_name(a.pred), a.label);
        for x in args {
            s.push(' ');
            s.push_str(&x);
        }
        s
    }
}

pub fn print_literal(inst: &MatchInstance, lit: &GeometricLiteral) -> String {
    let v = |x: &Var| inst.symbols.var_name(*x);
    let args = |xs: &[Var]| xs.iter().map(v).collect::<Vec<_>>().join(" ");
    match lit {
        GeometricLiteral::Simple { pred, label, args: a } if a.is_empty() => format!("{} {}", inst.pred_name(*pred), label),
        GeometricLiteral::Simple { pred, label, args: a } => format!("{} {} {}", inst.pred_name(*pred), label, args(a)),
        GeometricLiteral::Equality(a, b) => format!("{} = {}", v(a), v(b)),
        GeometricLiteral::DomainF(x) => format!("#f {}", v(x)),
        GeometricLiteral::DomainT(x) => format!("#t {}", v(x)),
        GeometricLiteral::Exists { bound, pred, label, args: a } => {
            format!("exists {} {} {} {}", v(bound), inst.pred_name(*pred), label, args(a))
        }
    }
}

pub fn print_instance(inst: &MatchInstance, weights: &WeightFn) -> String {
    let mut out = String::from("interp:\n");
    for a in inst.interp.atoms() {
        writeln!(out, "{}", print_atom(inst, a)).unwrap();
    }
    out.push_str("formula:\n");
    let side = |ls: &[GeometricLiteral]| ls.iter().map(|l| print_literal(inst, l)).collect::<Vec<_>>().join(", ");
    writeln!(out, "{} | {}", side(inst.formula.premises()), side(inst.formula.conclusions())).unwrap();
    let weighted: Vec<&GroundAtom> = inst.interp.atoms().iter().filter(|a| !weights.get(a).is_empty()).collect();
    if !weighted.is_empty() {
        out.push_str("weights:\n");
        for a in weighted {
            let ws: Vec<String> = weights.get(a).iter().map(u32::to_string).collect();
            writeln!(out, "{} : {{{}}}", print_atom(inst, a), ws.join(",")).unwrap();
        }
    }
    out
}

//! A small DPLL solver for oracle-scale formulas.

use super::Cnf;

/// A total assignment; `values[a - 1]` is the value of atom `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub values: Vec<bool>,
}

impl Model {
    pub fn value(&self, atom: u32) -> bool {
        self.values[atom as usize - 1]
    }

    /// Signed literals, `±a` for every atom.
    pub fn literals(&self) -> Vec<i32> {
        self.values.iter().enumerate().map(|(i, &b)| if b { i as i32 + 1 } else { -(i as i32 + 1) }).collect()
    }

    pub fn from_literals(num_vars: u32, lits: &[i32]) -> Self {
        let mut values = vec![false; num_vars as usize];
        for &l in lits {
            if l > 0 && (l as u32) <= num_vars {
                values[l as usize - 1] = true;
            }
        }
        Model { values }
    }

    pub fn satisfies(&self, cnf: &Cnf) -> bool {
        cnf.clauses.iter().all(|c| c.iter().any(|&l| self.value(l.unsigned_abs()) == (l > 0)))
    }
}

struct Dpll<'a> {
    clauses: &'a [Vec<i32>],
    occurs: Vec<Vec<usize>>,
    val: Vec<i8>,
    trail: Vec<u32>,
}

impl<'a> Dpll<'a> {
    fn new(cnf: &'a Cnf) -> Self {
        let mut occurs = vec![Vec::new(); cnf.num_vars as usize + 1];
        for (i, c) in cnf.clauses.iter().enumerate() {
            for l in c {
                occurs[l.unsigned_abs() as usize].push(i);
            }
        }
        Dpll { clauses: &cnf.clauses, occurs, val: vec![0; cnf.num_vars as usize + 1], trail: Vec::new() }
    }

    fn lit_val(&self, l: i32) -> i8 {
        let v = self.val[l.unsigned_abs() as usize];
        if l > 0 {
            v
        } else {
            -v
        }
    }

    fn set(&mut self, l: i32) {
        self.val[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
        self.trail.push(l.unsigned_abs());
    }

    fn undo(&mut self, len: usize) {
        for a in self.trail.drain(len..) {
            self.val[a as usize] = 0;
        }
    }

    /// Unit propagation from trail position `from`; false on conflict.
    fn propagate(&mut self, mut from: usize) -> bool {
        while from < self.trail.len() {
            let a = self.trail[from] as usize;
            from += 1;
            for k in 0..self.occurs[a].len() {
                let c = &self.clauses[self.occurs[a][k]];
                let mut unassigned = None;
                let mut open = 0;
                let mut sat = false;
                for &l in c {
                    match self.lit_val(l) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            open += 1;
                            unassigned = Some(l);
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match open {
                    0 => return false,
                    1 => self.set(unassigned.expect("one open literal")),
                    _ => {}
                }
            }
        }
        true
    }

    fn initial(&mut self) -> bool {
        for c in self.clauses {
            if c.is_empty() {
                return false;
            }
        }
        for i in 0..self.clauses.len() {
            let c = &self.clauses[i];
            if c.len() == 1 {
                match self.lit_val(c[0]) {
                    -1 => return false,
                    0 => self.set(c[0]),
                    _ => {}
                }
            }
        }
        self.propagate(0)
    }

    fn search(&mut self, on_model: &mut dyn FnMut(&[i8]) -> bool) -> bool {
        let Some(a) = (1..self.val.len()).find(|&a| self.val[a] == 0) else {
            return on_model(&self.val[1..]);
        };
        for l in [a as i32, -(a as i32)] {
            let mark = self.trail.len();
            self.set(l);
            if self.propagate(mark) && self.search(on_model) {
                return true;
            }
            self.undo(mark);
        }
        false
    }
}

fn to_model(v: &[i8]) -> Model {
    Model { values: v.iter().map(|&x| x > 0).collect() }
}

/// Some model, or `None` when unsatisfiable.
pub fn solve_cnf(cnf: &Cnf) -> Option<Model> {
    let mut d = Dpll::new(cnf);
    if !d.initial() {
        return None;
    }
    let mut found = None;
    d.search(&mut |v| {
        found = Some(to_model(v));
        true
    });
    found
}

/// All models, in search order, up to `limit`.
pub fn enumerate_models(cnf: &Cnf, limit: usize) -> Vec<Model> {
    let mut d = Dpll::new(cnf);
    let mut out = Vec::new();
    if !d.initial() {
        return out;
    }
    d.search(&mut |v| {
        out.push(to_model(v));
        out.len() >= limit
    });
    out
}

//! Timing runs over a corpus, reported as CSV.

use std::fmt::Write;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use crate::backend::{run, Backend, BackendOptions, Verdict};
use crate::types::Gcsp;

pub const CSV_HEADER: &str = "instance,backend,result,wall_ms,decisions,propagations,lemmas,conflicts,filtered";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub backend: Backend,
    /// `sat`, `unsat`, `timeout` or `error`.
    pub result: &'static str,
    pub wall_ms: f64,
    pub decisions: u64,
    pub propagations: u64,
    pub lemmas: u64,
    pub conflicts: u64,
    pub filtered: usize,
}

impl BenchRow {
    /// `t(λ)`: seconds with the lemma count in parentheses.
    pub fn t_lambda(&self) -> String {
        format!("{:.3}({})", self.wall_ms / 1000.0, self.lemmas)
    }
}

/// Runs every backend on every instance. A run exceeding `timeout` is
/// reported as such; its thread is left to finish in the background.
pub fn bench(instances: &[(String, Gcsp)], backends: &[Backend], template: &BackendOptions, timeout: Duration) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for (name, g) in instances {
        for &backend in backends {
            let opts = BackendOptions { backend, ..template.clone() };
            let (tx, rx) = mpsc::channel();
            let g2 = g.clone();
            thread::spawn(move || {
                let _ = tx.send(run(&g2, &opts));
            });
            let mut row = BenchRow {
                instance: name.clone(),
                backend,
                result: "timeout",
                wall_ms: timeout.as_secs_f64() * 1000.0,
                decisions: 0,
                propagations: 0,
                lemmas: 0,
                conflicts: 0,
                filtered: 0,
            };
            match rx.recv_timeout(timeout) {
                Ok(Ok(r)) => {
                    row.result = if let Verdict::Sat(_) = r.verdict { "sat" } else { "unsat" };
                    row.wall_ms = r.stats.wall.as_secs_f64() * 1000.0;
                    row.decisions = r.stats.decisions;
                    row.propagations = r.stats.propagations;
                    row.lemmas = r.stats.lemmas;
                    row.conflicts = r.stats.conflicts;
                    row.filtered = r.stats.filtered;
                }
                Ok(Err(_)) => row.result = "error",
                Err(_) => {}
            }
            rows.push(row);
        }
    }
    rows
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.3},{},{},{},{},{}",
            r.instance, r.backend, r.result, r.wall_ms, r.decisions, r.propagations, r.lemmas, r.conflicts, r.filtered
        )
        .expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::parity_chain;

    #[test]
    fn one_row_per_pair() {
        let inst = vec![("p2".to_string(), parity_chain(2)), ("p3".to_string(), parity_chain(3))];
        let rows = bench(&inst, &Backend::ALL, &BackendOptions::new(Backend::Backtrack), Duration::from_secs(30));
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.result == "unsat"));
        let csv = to_csv(&rows);
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with(CSV_HEADER));
    }
}

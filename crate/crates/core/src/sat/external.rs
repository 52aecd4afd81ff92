//! Driver for an external SAT solver speaking the `s` / `v` line protocol.

use std::io::Read;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{emit_dimacs, Cnf, Model};

#[derive(Debug, Error)]
pub enum SatError {
    #[error("cannot launch solver: {0}")]
    Launch(String),
    #[error("cannot parse solver output: {0}")]
    Output(String),
    #[error("solver exceeded {0:?}")]
    Timeout(Duration),
    #[error("bad DIMACS: {0}")]
    Dimacs(String),
}

/// An argv template; `{}` is replaced by the DIMACS file path, which is
/// appended when no argument contains it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalSolver {
    pub argv: Vec<String>,
    pub timeout: Duration,
}

impl ExternalSolver {
    /// Splits `template` on whitespace.
    pub fn from_template(template: &str, timeout: Duration) -> Self {
        ExternalSolver { argv: template.split_whitespace().map(String::from).collect(), timeout }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExternalOutcome {
    Sat(Model),
    Unsat,
}

/// Writes `cnf` to a fresh temporary file and runs the solver on it.
pub fn run_external(cnf: &Cnf, solver: &ExternalSolver) -> Result<ExternalOutcome, SatError> {
    let mut file = tempfile::Builder::new().suffix(".cnf").tempfile().map_err(|e| SatError::Launch(e.to_string()))?;
    std::io::Write::write_all(&mut file, emit_dimacs(cnf).as_bytes()).map_err(|e| SatError::Launch(e.to_string()))?;
    let path = file.path().to_string_lossy().into_owned();
    let (prog, rest) = solver.argv.split_first().ok_or_else(|| SatError::Launch("empty solver command".into()))?;
    let mut args: Vec<String> = rest.iter().map(|a| a.replace("{}", &path)).collect();
    if !solver.argv.iter().any(|a| a.contains("{}")) {
        args.push(path.clone());
    }
    let mut child = Command::new(prog)
        .args(&args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SatError::Launch(format!("{prog}: {e}")))?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let deadline = Instant::now() + solver.timeout;
    loop {
        match child.try_wait().map_err(|e| SatError::Launch(e.to_string()))? {
            Some(_) => break,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SatError::Timeout(solver.timeout));
            }
            None => std::thread::sleep(Duration::from_millis(2)),
        }
    }
    let out = reader.join().expect("reader thread").map_err(|e| SatError::Output(e.to_string()))?;
    parse_output(&out, cnf.num_vars)
}

/// Reads `s SATISFIABLE` / `s UNSATISFIABLE` and the `v` value lines.
pub fn parse_output(out: &str, num_vars: u32) -> Result<ExternalOutcome, SatError> {
    let mut status = None;
    let mut lits = Vec::new();
    for line in out.lines().map(str::trim) {
        if let Some(s) = line.strip_prefix("s ") {
            status = Some(s.trim().to_string());
        } else if let Some(v) = line.strip_prefix("v ") {
            for t in v.split_whitespace() {
                let l: i32 = t.parse().map_err(|_| SatError::Output(format!("bad value line {line:?}")))?;
                if l != 0 {
                    lits.push(l);
                }
            }
        }
    }
    match status.as_deref() {
        Some("UNSATISFIABLE") => Ok(ExternalOutcome::Unsat),
        Some("SATISFIABLE") => {
            if lits.iter().any(|l| l.unsigned_abs() > num_vars) {
                return Err(SatError::Output("value out of range".into()));
            }
            Ok(ExternalOutcome::Sat(Model::from_literals(num_vars, &lits)))
        }
        Some(s) => Err(SatError::Output(format!("unknown status {s:?}"))),
        None => Err(SatError::Output("no status line".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_status_lines() {
        assert_eq!(parse_output("c hi\ns UNSATISFIABLE\n", 2).unwrap(), ExternalOutcome::Unsat);
        let m = parse_output("s SATISFIABLE\nv -1 2\nv 0\n", 2).unwrap();
        assert_eq!(m, ExternalOutcome::Sat(Model { values: vec![false, true] }));
        assert!(matches!(parse_output("garbage", 2), Err(SatError::Output(_))));
        assert!(matches!(parse_output("s SATISFIABLE\nv 7 0\n", 2), Err(SatError::Output(_))));
    }
}

//! One entry point over every solving backend, with optional prefiltering
//! and re-verification of every solution.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::backtrack::solve;
use crate::filter::filter_gcsp;
use crate::lemma::FlatLemma;
use crate::refine::solve_refining;
use crate::sat::{decode_model, run_external, solve_cnf, translate, Encoding, ExternalOutcome, ExternalSolver, InconsistentModel, SatError};
use crate::solver::{SolveResult, SolverConfig};
use crate::translate::{preprocess, Preprocessed};
use crate::types::{is_solution, Gcsp, Substitution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Backtrack,
    Refine,
    Sat1,
    Sat2,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::Backtrack, Backend::Refine, Backend::Sat1, Backend::Sat2];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Backtrack => "backtrack",
            Backend::Refine => "refine",
            Backend::Sat1 => "sat1",
            Backend::Sat2 => "sat2",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Backend::ALL.into_iter().find(|b| b.name() == s).ok_or_else(|| format!("unknown backend {s:?}"))
    }
}

#[derive(Clone, Debug)]
pub struct BackendOptions {
    pub backend: Backend,
    pub solver: SolverConfig,
    /// Local-consistency size, if prefiltering.
    pub filter: Option<usize>,
    /// SAT backends use this solver instead of the built-in one.
    pub external: Option<ExternalSolver>,
}

impl BackendOptions {
    pub fn new(backend: Backend) -> Self {
        BackendOptions { backend, solver: SolverConfig::default(), filter: None, external: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat(Substitution),
    Unsat,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub wall: Duration,
    pub decisions: u64,
    pub propagations: u64,
    pub lemmas: u64,
    pub conflicts: u64,
    /// Members removed by the prefilter.
    pub filtered: usize,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub verdict: Verdict,
    pub stats: RunStats,
    /// Lemmas learned by a native solver.
    pub learned: Vec<FlatLemma>,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Decode(#[from] InconsistentModel),
    #[error("{0} returned an assignment that is not a solution")]
    Verification(Backend),
}

/// Solves `g`, checking any solution against `g` itself.
pub fn run(g: &Gcsp, opts: &BackendOptions) -> Result<RunReport, BackendError> {
    let start = Instant::now();
    let mut stats = RunStats::default();
    let mut learned = Vec::new();
    let filtered;
    let target = match opts.filter {
        Some(size) => {
            let (f, fs) = filter_gcsp(g, size);
            stats.filtered = fs.removed;
            match f {
                Some(f) => {
                    filtered = f;
                    Some(&filtered)
                }
                None => None,
            }
        }
        None => Some(g),
    };
    let verdict = match target {
        None => Verdict::Unsat,
        Some(h) => match opts.backend {
            Backend::Backtrack | Backend::Refine => {
                let out = if opts.backend == Backend::Backtrack { solve(h, &opts.solver) } else { solve_refining(h, &opts.solver) };
                stats.decisions = out.stats.decisions;
                stats.propagations = out.stats.propagations;
                stats.lemmas = out.stats.lemmas;
                stats.conflicts = out.stats.conflicts;
                learned = out.learned;
                match out.result {
                    SolveResult::Sat(t) => Verdict::Sat(t),
                    _ => Verdict::Unsat,
                }
            }
            Backend::Sat1 | Backend::Sat2 => {
                let enc = if opts.backend == Backend::Sat1 { Encoding::V1 } else { Encoding::V2 };
                sat_verdict(h, enc, opts.external.as_ref())?
            }
        },
    };
    if let Verdict::Sat(t) = &verdict {
        if !is_solution(g, t) {
            return Err(BackendError::Verification(opts.backend));
        }
    }
    stats.wall = start.elapsed();
    Ok(RunReport { verdict, stats, learned })
}

fn sat_verdict(g: &Gcsp, enc: Encoding, external: Option<&ExternalSolver>) -> Result<Verdict, BackendError> {
    let h = match preprocess(g) {
        Preprocessed::TriviallyUnsat(_) => return Ok(Verdict::Unsat),
        Preprocessed::Simplified(h) => h,
    };
    let (cnf, map, _) = translate(&h, enc);
    let model = match external {
        Some(solver) => match run_external(&cnf, solver)? {
            ExternalOutcome::Sat(m) => Some(m),
            ExternalOutcome::Unsat => None,
        },
        None => solve_cnf(&cnf),
    };
    match model {
        Some(m) => Ok(Verdict::Sat(decode_model(&h, enc, &map, &m)?)),
        None => Ok(Verdict::Unsat),
    }
}

/// A solver closure for the weight-minimal matching loop. Errors end the
/// loop's search as "no solution" and are kept in `errors`.
pub fn solver_fn<'a>(opts: &'a BackendOptions, errors: &'a mut Vec<BackendError>) -> impl FnMut(&Gcsp) -> Option<Substitution> + 'a {
    move |g| match run(g, opts) {
        Ok(RunReport { verdict: Verdict::Sat(t), .. }) => Some(t),
        Ok(_) => None,
        Err(e) => {
            errors.push(e);
            None
        }
    }
}

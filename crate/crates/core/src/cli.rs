//! Command-line front end.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::backend::{run, solver_fn, Backend, BackendError, BackendOptions, Verdict};
use crate::bench::{bench, to_csv, BenchRow};
use crate::filter::filter_gcsp;
use crate::format::{parse_instance, print_gcsp, InstanceFile};
use crate::gen::{corpus, parity_chain, random_match_text, rng, GcspParams, MatchParams};
use crate::geometric::{is_matching, MatchInstance};
use crate::optimal::{optimal_match, StepOutcome};
use crate::oracle::{enumerate_matchings, enumerate_solutions, minimal_weight, SizeBudget};
use crate::sat::{emit_dimacs, translate as encode, Encoding, ExternalSolver};
use crate::solver::{BranchOrder, SolverConfig, Split};
use crate::translate::{preprocess, translate, translate_restricted, Alpha, Preprocessed};
use crate::types::Gcsp;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;

#[derive(Parser, Debug)]
#[command(name = "gcsp", version, about = "Matching and generalized constraint satisfaction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BackendArg {
    Backtrack,
    Refine,
    Sat1,
    Sat2,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Backtrack => Backend::Backtrack,
            BackendArg::Refine => Backend::Refine,
            BackendArg::Sat1 => Backend::Sat1,
            BackendArg::Sat2 => Backend::Sat2,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrderArg {
    Asc,
    Desc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SplitArg {
    Halves,
    Singletons,
}

#[derive(clap::Args, Debug, Clone)]
pub struct SolveOpts {
    #[arg(long, value_enum, default_value = "backtrack")]
    pub backend: BackendArg,
    /// Prefilter with local consistency of this size.
    #[arg(long)]
    pub filter: Option<usize>,
    #[arg(long, value_enum, default_value = "asc")]
    pub order: OrderArg,
    /// Domain partitioning of the refining solver.
    #[arg(long, value_enum, default_value = "halves")]
    pub split: SplitArg,
    /// Refining solver: start with one σ-resolvent per blocking.
    #[arg(long)]
    pub precompute_sigma: bool,
    /// External SAT solver command; `{}` stands for the DIMACS file.
    #[arg(long)]
    pub external: Option<String>,
    /// Seconds allowed for the external solver.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
}

impl SolveOpts {
    pub fn options(&self) -> BackendOptions {
        BackendOptions {
            backend: self.backend.into(),
            solver: SolverConfig {
                branch_order: match self.order {
                    OrderArg::Asc => BranchOrder::Ascending,
                    OrderArg::Desc => BranchOrder::Descending,
                },
                split: match self.split {
                    SplitArg::Halves => Split::Halves,
                    SplitArg::Singletons => Split::Singletons,
                },
                precompute_sigma: self.precompute_sigma,
            },
            filter: self.filter,
            external: self.external.as_deref().map(|t| ExternalSolver::from_template(t, Duration::from_secs(self.timeout))),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EncodingArg {
    Gcsp,
    V1,
    V2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GenKind {
    Gcsp,
    Match,
    Parity,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a GCSP or matching instance.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Print the GCSP of an instance, or a DIMACS encoding of it.
    Translate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "gcsp")]
        encoding: EncodingArg,
        /// Apply unit-blocking removal before printing a GCSP.
        #[arg(long)]
        preprocess: bool,
        /// Restrict to premise atoms with weights inside this set, e.g. `1,2`.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the local-consistency filter and print the filtered GCSP.
    Filter {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        size: usize,
    },
    /// Find a weight-minimal matching.
    Optimal {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Enumerate all solutions or matchings by brute force.
    Oracle { file: PathBuf },
    /// Time backends over a directory of instances or a generated corpus.
    Bench {
        dir: Option<PathBuf>,
        /// Comma-separated backends.
        #[arg(long, default_value = "backtrack,refine,sat1,sat2")]
        backends: String,
        /// Generate this many random GCSPs instead of reading a directory.
        #[arg(long)]
        gen: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seconds per run.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        #[arg(long)]
        filter: Option<usize>,
        /// Print `t(λ)` cells instead of CSV.
        #[arg(long)]
        table: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate instances.
    Gen {
        #[arg(long, value_enum, default_value = "gcsp")]
        kind: GenKind,
        #[arg(long, default_value_t = 6)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        consts: usize,
        #[arg(long, default_value_t = 6)]
        clauses: usize,
        #[arg(long, default_value_t = 8)]
        substlets: usize,
        #[arg(long, default_value_t = 4)]
        blockings: usize,
        /// Number of triples for `--kind parity`.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write this many instances from consecutive seeds into `--dir`.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_ERROR, message: message.into() }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        let code = if matches!(e, BackendError::Verification(_)) { EXIT_VERIFY } else { EXIT_ERROR };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        fail(e.to_string())
    }
}

fn load(path: &Path) -> Result<InstanceFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn write_output(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| fail(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(Failure::from),
    }
}

fn parse_set(s: &str) -> Result<BTreeSet<u32>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| fail(format!("bad weight {t:?}"))))
        .collect()
}

fn show_set(s: &BTreeSet<u32>) -> String {
    format!("{{{}}}", s.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Solve { file, opts } => solve_cmd(&file, &opts, out),
        Command::Translate { file, encoding, preprocess: pre, alpha, out: path } => {
            let g = match load(&file)? {
                InstanceFile::Gcsp(g) => g,
                InstanceFile::Matching { inst, weights } => match alpha {
                    Some(a) => translate_restricted(&inst, &weights, &Alpha::Set(parse_set(&a)?)).gcsp,
                    None => translate(&inst).gcsp,
                },
            };
            let text = match encoding {
                EncodingArg::Gcsp if !pre => print_gcsp(&g),
                EncodingArg::Gcsp => match preprocess(&g) {
                    Preprocessed::Simplified(h) => print_gcsp(&h),
                    Preprocessed::TriviallyUnsat(r) => format!("% trivially unsatisfiable: {r:?}\nclause (): \n"),
                },
                EncodingArg::V1 | EncodingArg::V2 => {
                    let enc = if matches!(encoding, EncodingArg::V1) { Encoding::V1 } else { Encoding::V2 };
                    match preprocess(&g) {
                        Preprocessed::Simplified(h) => emit_dimacs(&encode(&h, enc).0),
                        Preprocessed::TriviallyUnsat(_) => "p cnf 0 1\n0\n".to_string(),
                    }
                }
            };
            write_output(out, path.as_deref(), &text)?;
            Ok(EXIT_OK)
        }
        Command::Filter { file, size } => {
            if size == 0 {
                return Err(fail("filter size must be at least 1"));
            }
            let g = gcsp_of(load(&file)?);
            let (f, stats) = filter_gcsp(&g, size);
            let summary = format!("% removed {} circles {} assigned {}\n", stats.removed, stats.circles, stats.assigned);
            match f {
                Some(h) => {
                    write!(out, "{}{}", summary, print_gcsp(&h))?;
                    Ok(EXIT_OK)
                }
                None => {
                    writeln!(out, "{summary}REFUTED")?;
                    Ok(EXIT_UNSAT)
                }
            }
        }
        Command::Optimal { file, opts } => optimal_cmd(&file, &opts, out),
        Command::Oracle { file } => oracle_cmd(&file, out),
        Command::Bench { dir, backends, gen, seed, timeout, filter, table, out: path } => {
            let backends: Vec<Backend> = backends.split(',').map(|b| b.trim().parse().map_err(fail)).collect::<Result<_, _>>()?;
            let instances: Vec<(String, Gcsp)> = match (gen, dir) {
                (Some(n), _) => corpus(&GcspParams::default(), seed, n)
                    .into_iter()
                    .enumerate()
                    .map(|(i, g)| (format!("gen{}", seed + i as u64), g))
                    .collect(),
                (None, Some(d)) => {
                    let mut files: Vec<PathBuf> = fs::read_dir(&d)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
                    files.sort();
                    let mut v = Vec::new();
                    for f in files {
                        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                        v.push((name, gcsp_of(load(&f)?)));
                    }
                    v
                }
                (None, None) => return Err(fail("bench needs a directory or --gen")),
            };
            let mut template = BackendOptions::new(Backend::Backtrack);
            template.filter = filter;
            let rows = bench(&instances, &backends, &template, Duration::from_secs(timeout));
            let text = if table { t_lambda_table(&rows, &backends) } else { to_csv(&rows) };
            write_output(out, path.as_deref(), &text)?;
            Ok(EXIT_OK)
        }
        Command::Gen { kind, vars, consts, clauses, substlets, blockings, n, seed, count, dir, out: path } => {
            let p = GcspParams { vars, consts, clauses, substlets, blockings, max_arity: 3 };
            let one = |s: u64| -> String {
                match kind {
                    GenKind::Gcsp => print_gcsp(&crate::gen::random_gcsp(&p, &mut rng(s))),
                    GenKind::Match => random_match_text(&MatchParams { consts, ..MatchParams::default() }, &mut rng(s)),
                    GenKind::Parity => print_gcsp(&parity_chain(n.max(2))),
                }
            };
            match (count, dir) {
                (Some(c), Some(d)) => {
                    fs::create_dir_all(&d)?;
                    let ext = if matches!(kind, GenKind::Match) { "match" } else { "gcsp" };
                    for i in 0..c as u64 {
                        let s = seed + i;
                        fs::write(d.join(format!("gen{s:06}.{ext}")), one(s))?;
                    }
                    Ok(EXIT_OK)
                }
                (Some(_), None) => Err(fail("--count needs --dir")),
                _ => {
                    write_output(out, path.as_deref(), &one(seed))?;
                    Ok(EXIT_OK)
                }
            }
        }
    }
}

fn gcsp_of(f: InstanceFile) -> Gcsp {
    match f {
        InstanceFile::Gcsp(g) => g,
        InstanceFile::Matching { inst, .. } => translate(&inst).gcsp,
    }
}

fn t_lambda_table(rows: &[BenchRow], backends: &[Backend]) -> String {
    let mut out = format!("instance,{}\n", backends.iter().map(|b| b.name()).collect::<Vec<_>>().join(","));
    for chunk in rows.chunks(backends.len().max(1)) {
        let cells: Vec<String> = chunk.iter().map(|r| if r.result == "timeout" || r.result == "error" { r.result.to_string() } else { r.t_lambda() }).collect();
        out.push_str(&format!("{},{}\n", chunk[0].instance, cells.join(",")));
    }
    out
}

fn check_matching(inst: &MatchInstance, t: &crate::types::Substitution) -> Result<(), Failure> {
    match is_matching(inst, t) {
        Ok(true) => Ok(()),
        Ok(false) => Err(Failure { code: EXIT_VERIFY, message: "solution is not a matching".into() }),
        Err(e) => Err(Failure { code: EXIT_VERIFY, message: e.to_string() }),
    }
}

fn solve_cmd(file: &Path, opts: &SolveOpts, out: &mut dyn Write) -> Result<i32, Failure> {
    let (g, inst) = match load(file)? {
        InstanceFile::Gcsp(g) => (g, None),
        InstanceFile::Matching { inst, .. } => (translate(&inst).gcsp, Some(inst)),
    };
    let o = opts.options();
    let report = run(&g, &o)?;
    let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let row = BenchRow {
        instance: name,
        backend: o.backend,
        result: if report.verdict.is_sat() { "sat" } else { "unsat" },
        wall_ms: report.stats.wall.as_secs_f64() * 1000.0,
        decisions: report.stats.decisions,
        propagations: report.stats.propagations,
        lemmas: report.stats.lemmas,
        conflicts: report.stats.conflicts,
        filtered: report.stats.filtered,
    };
    let code = match &report.verdict {
        Verdict::Sat(t) => {
            if let Some(inst) = &inst {
                check_matching(inst, t)?;
            }
            writeln!(out, "SAT\n{}", t.display(&g.symbols))?;
            EXIT_SAT
        }
        Verdict::Unsat => {
            writeln!(out, "UNSAT")?;
            EXIT_UNSAT
        }
    };
    write!(out, "{}", to_csv(&[row]))?;
    Ok(code)
}

fn optimal_cmd(file: &Path, opts: &SolveOpts, out: &mut dyn Write) -> Result<i32, Failure> {
    let InstanceFile::Matching { inst, weights } = load(file)? else {
        return Err(fail("optimal needs a matching instance"));
    };
    let o = opts.options();
    let mut errors = Vec::new();
    let res = optimal_match(&inst, &weights, solver_fn(&o, &mut errors)).map_err(|e| Failure { code: EXIT_VERIFY, message: e.to_string() })?;
    if let Some(e) = errors.into_iter().next() {
        return Err(e.into());
    }
    if let Some((t, w)) = &res.first {
        writeln!(out, "first {} weight {}", t.display(&inst.symbols), show_set(w))?;
    }
    for s in &res.steps {
        let what = match &s.outcome {
            StepOutcome::Skipped(r) => format!("skipped ({r:?})"),
            StepOutcome::NoSolution => "no solution".to_string(),
            StepOutcome::Improved(w) => format!("improved to {}", show_set(w)),
        };
        writeln!(out, "k={} alpha={} {}", s.k, show_set(&s.alpha), what)?;
    }
    match &res.best {
        Some((t, w)) => {
            check_matching(&inst, t)?;
            writeln!(out, "OPTIMAL {}\n{}", show_set(w), t.display(&inst.symbols))?;
            writeln!(out, "% solver calls {}", res.solver_calls)?;
            Ok(EXIT_SAT)
        }
        None => {
            writeln!(out, "UNSAT")?;
            Ok(EXIT_UNSAT)
        }
    }
}

fn oracle_cmd(file: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let budget = SizeBudget::default();
    let found = match load(file)? {
        InstanceFile::Gcsp(g) => {
            let sols = enumerate_solutions(&g, &budget).map_err(|e| fail(e.to_string()))?;
            writeln!(out, "{} solutions", sols.len())?;
            for t in &sols {
                writeln!(out, "{}", t.display(&g.symbols))?;
            }
            !sols.is_empty()
        }
        InstanceFile::Matching { inst, weights } => {
            let ms = enumerate_matchings(&inst, &budget).map_err(|e| fail(e.to_string()))?;
            writeln!(out, "{} matchings", ms.len())?;
            for t in &ms {
                writeln!(out, "{}", t.display(&inst.symbols))?;
            }
            if !weights.is_empty() {
                if let Some(w) = minimal_weight(&inst, &weights, &budget).map_err(|e| fail(e.to_string()))? {
                    writeln!(out, "minimal weight {}", show_set(&w))?;
                }
            }
            !ms.is_empty()
        }
    };
    Ok(if found { EXIT_SAT } else { EXIT_UNSAT })
}

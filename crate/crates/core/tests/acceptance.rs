//! One PASS/FAIL line per acceptance criterion.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use gcsp::backend::{run, Backend, BackendOptions, Verdict};
use gcsp::backtrack::solve;
use gcsp::bench::{bench, to_csv, CSV_HEADER};
use gcsp::filter::filter_gcsp;
use gcsp::format::{parse_gcsp, parse_instance, InstanceFile};
use gcsp::gen::{corpus, parity_chain, random_match, rng, GcspParams, MatchParams};
use gcsp::geometric::MatchInstance;
use gcsp::lemma::{sigma_resolvent, v_resolvent, FlatLemma};
use gcsp::optimal::{optimal_match, StepOutcome, WeightFn};
use gcsp::oracle::{check_lemma_valid, enumerate_matchings, enumerate_solutions, minimal_weight, SizeBudget};
use gcsp::refine::solve_refining;
use gcsp::sat::{decode_model, emit_dimacs, enumerate_models, parse_dimacs, translate as encode, Encoding};
use gcsp::solver::{BranchOrder, SolveOutput, SolveResult, SolverConfig, Split};
use gcsp::stacks::{RefinementStack, StackError, SubstitutionStack};
use gcsp::translate::{preprocess, translate, Preprocessed, UnsatReason};
use gcsp::types::{is_solution, Blocking, Clause, Const, Gcsp, Substitution, Substlet, Symbols, Var};

const FIDELITY_LIMIT: Duration = Duration::from_secs(1);
const CORPUS_SEED: u64 = 20_240_601;
const CORPUS_SIZE: usize = 10_000;
const CORPUS_LIMIT: Duration = Duration::from_secs(600);
const FILTER_SIZES: [usize; 4] = [1, 2, 3, 4];
const WEIGHTED_SEED: u64 = 77;
const WEIGHTED_SIZE: usize = 1_000;
const STACK_OPS: usize = 100_000;
const PARITY_MAX: usize = 8;
const PARITY_LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/instances/{name}", env!("CARGO_MANIFEST_DIR")))
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn matching(name: &str) -> (MatchInstance, WeightFn) {
    match parse_instance(&fixture(name)) {
        Ok(InstanceFile::Matching { inst, weights }) => (inst, weights),
        other => panic!("{name}: {other:?}"),
    }
}

fn gcsp(name: &str) -> Gcsp {
    parse_gcsp(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn subst(symbols: &Symbols, pairs: &[(&str, &str)]) -> Substitution {
    Substitution::from_pairs(
        pairs.iter().map(|(v, c)| (Var(symbols.vars.get(v).unwrap()), Const(symbols.consts.get(c).unwrap()))),
    )
    .unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn shown(g: &Gcsp) -> String {
    g.display().to_string()
}

fn worked_examples() -> Outcome {
    let start = Instant::now();
    for (m, g) in [("phi1", "phi1_translation"), ("phi2", "phi2_translation"), ("phi3", "phi3_translation")] {
        let (inst, _) = matching(&format!("{m}.match"));
        let got = shown(&translate(&inst).gcsp);
        let want = shown(&gcsp(&format!("{g}.gcsp")));
        ensure(got == want, || format!("{m}: translation differs\n{got}\nvs\n{want}"))?;
    }
    let (phi2, _) = matching("phi2.match");
    let Preprocessed::Simplified(h) = preprocess(&translate(&phi2).gcsp) else {
        return Err("phi2 preprocessed to unsat".into());
    };
    ensure(shown(&h) == shown(&gcsp("phi2_preprocessed.gcsp")), || format!("phi2 preprocessing differs\n{}", shown(&h)))?;
    let t = start.elapsed();
    ensure(t < FIDELITY_LIMIT, || format!("took {t:?}"))?;
    Ok(format!("3 translations + preprocessing exact in {t:?}"))
}

fn oracle_matchings() -> Outcome {
    let b = SizeBudget::default();
    let (phi1, _) = matching("phi1.match");
    let want: BTreeSet<Vec<(Var, Const)>> = [["x0", "x0", "x0"], ["x0", "x0", "x1"], ["x0", "x1", "x1"], ["x1", "x1", "x1"], ["x1", "x1", "x2"]]
        .iter()
        .map(|r| subst(&phi1.symbols, &[("X", r[0]), ("Y", r[1]), ("Z", r[2])]).sorted_pairs())
        .collect();
    let got = enumerate_matchings(&phi1, &b).map_err(|e| e.to_string())?;
    ensure(got.len() == 5 && got.iter().map(Substitution::sorted_pairs).collect::<BTreeSet<_>>() == want, || format!("phi1: {got:?}"))?;
    let (phi2, _) = matching("phi2.match");
    let got = enumerate_matchings(&phi2, &b).map_err(|e| e.to_string())?;
    ensure(got == [subst(&phi2.symbols, &[("X", "x0"), ("Y", "x1"), ("Z", "x2")])], || format!("phi2: {got:?}"))?;
    let (phi3, _) = matching("phi3.match");
    let got = enumerate_matchings(&phi3, &b).map_err(|e| e.to_string())?;
    ensure(got == [subst(&phi3.symbols, &[("X", "x0"), ("Y", "x1")])], || format!("phi3: {got:?}"))?;
    Ok("5 / 1 / 1 matchings".into())
}

fn sat_encodings() -> Outcome {
    let g = gcsp("sat_example.gcsp");
    let want = subst(&g.symbols, &[("X", "1"), ("Y", "0"), ("Z", "0")]);
    let mut problems = Vec::new();
    for (enc, file) in [(Encoding::V1, "sat_example_v1.cnf"), (Encoding::V2, "sat_example_v2.cnf")] {
        let (cnf, map, parts) = encode(&g, enc);
        let printed = parse_dimacs(&fixture(file)).map_err(|e| e.to_string())?;
        if emit_dimacs(&cnf) != emit_dimacs(&printed) {
            let mut at = 0;
            for (p, &n) in parts.iter().enumerate() {
                let (ours, theirs) = (&cnf.clauses[at..at + n], printed.clauses.get(at..at + n).unwrap_or(&[]));
                if ours != theirs {
                    problems.push(format!("{enc:?} part {}: emitted {ours:?}, printed {theirs:?}", p + 1));
                }
                at += n;
            }
            let m = gcsp::sat::Model::from_literals(printed.num_vars, &[-1, 2, 3, -4, -5]);
            if enc == Encoding::V1 && !m.satisfies(&printed) {
                problems.push("printed v1 clauses reject the printed model -1 2 3 -4 -5".into());
            }
        }
        let models = enumerate_models(&cnf, 16);
        if models.len() != 1 {
            problems.push(format!("{enc:?}: {} models", models.len()));
        } else if decode_model(&g, enc, &map, &models[0]).ok().as_ref() != Some(&want) {
            problems.push(format!("{enc:?}: model does not decode to X:=1 Y:=0 Z:=0"));
        }
    }
    if problems.is_empty() {
        Ok("v1 and v2 exact; unique models decode to X:=1 Y:=0 Z:=0".into())
    } else {
        Err(problems.join("; "))
    }
}

fn lemma_rules() -> Outcome {
    let l = |e: &[(u32, &[u32])]| FlatLemma::from_entries(e.iter().map(|&(v, cs)| (Var(v), cs.iter().map(|&c| Const(c)).collect())));
    let (x, y, z) = (0, 1, 2);
    let a = l(&[(x, &[1, 2, 3]), (y, &[2, 3])]);
    let b = l(&[(x, &[3, 4]), (y, &[3, 4]), (z, &[2])]);
    let r = v_resolvent(Var(x), [&a, &b]);
    ensure(r == l(&[(x, &[3]), (y, &[2, 3, 4]), (z, &[2])]), || format!("v-resolvent {r:?}"))?;
    let rows = |rs: &[[u32; 2]]| rs.iter().map(|r| r.iter().map(|&c| Const(c)).collect()).collect::<Vec<_>>();
    let c1 = Clause::from_rows(&[Var(x), Var(y)], &rows(&[[1, 2], [1, 1], [3, 3]])).unwrap();
    let c2 = Clause::from_rows(&[Var(y), Var(z)], &rows(&[[1, 2], [2, 1]])).unwrap();
    let sigma = Blocking(Substlet::new(vec![Var(x), Var(z)], vec![Const(1), Const(2)]).unwrap());
    let s = sigma_resolvent(&sigma, &[&c1, &c2]);
    ensure(s == l(&[(x, &[3]), (z, &[1])]), || format!("sigma-resolvent {s:?}"))?;
    Ok("v-resolvent and sigma-resolvent exact".into())
}

struct CorpusRun {
    instances: Vec<Gcsp>,
    sat: Vec<bool>,
    solutions: Vec<BTreeSet<Vec<(Var, Const)>>>,
    disagreements: Vec<String>,
    lemma_violations: Vec<String>,
    lemmas_checked: usize,
    elapsed: Duration,
}

fn native_check(g: &Gcsp, sat: bool, name: &str, out: &SolveOutput, c: &mut Vec<String>, lemmas: &mut Vec<String>, checked: &mut usize) {
    if out.result.is_sat() != sat {
        c.push(format!("{name} says sat={} on\n{}", out.result.is_sat(), g.display()));
    }
    if let Some(t) = out.result.solution() {
        if !is_solution(g, t) {
            c.push(format!("{name} returned a non-solution"));
        }
    }
    if let SolveResult::Unsat(root) = &out.result {
        *checked += 1;
        if !root.is_false_under(&Substitution::new()) || !check_lemma_valid(g, root, &SizeBudget::default()).unwrap() {
            lemmas.push(format!("{name} root lemma {:?}", root));
        }
    }
    for l in &out.learned {
        *checked += 1;
        if !check_lemma_valid(g, l, &SizeBudget::default()).unwrap() {
            lemmas.push(format!("{name} learned invalid {}", l.display(&g.symbols)));
        }
    }
}

fn run_corpus() -> CorpusRun {
    let start = Instant::now();
    let instances = corpus(&GcspParams::default(), CORPUS_SEED, CORPUS_SIZE);
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = instances.len().div_ceil(threads);
    let configs = [
        SolverConfig::default(),
        SolverConfig { branch_order: BranchOrder::Descending, split: Split::Singletons, precompute_sigma: true },
    ];
    let parts: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .map(|part| {
                let configs = &configs;
                s.spawn(move || {
                    let mut out = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), 0usize);
                    for g in part {
                        let sols: BTreeSet<_> = enumerate_solutions(g, &SizeBudget::default()).unwrap().iter().map(Substitution::sorted_pairs).collect();
                        let sat = !sols.is_empty();
                        for cfg in configs {
                            native_check(g, sat, "backtrack", &solve(g, cfg), &mut out.2, &mut out.3, &mut out.4);
                            native_check(g, sat, "refine", &solve_refining(g, cfg), &mut out.2, &mut out.3, &mut out.4);
                        }
                        for b in Backend::ALL {
                            match run(g, &BackendOptions::new(b)) {
                                Ok(r) if r.verdict.is_sat() == sat => {}
                                Ok(r) => out.2.push(format!("{b} says {:?} on\n{}", r.verdict, g.display())),
                                Err(e) => out.2.push(format!("{b}: {e}")),
                            }
                        }
                        out.0.push(sat);
                        out.1.push(sols);
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect()
    });
    let mut run = CorpusRun {
        instances: Vec::new(),
        sat: Vec::new(),
        solutions: Vec::new(),
        disagreements: Vec::new(),
        lemma_violations: Vec::new(),
        lemmas_checked: 0,
        elapsed: Duration::ZERO,
    };
    for (sat, sols, d, l, n) in parts {
        run.sat.extend(sat);
        run.solutions.extend(sols);
        run.disagreements.extend(d);
        run.lemma_violations.extend(l);
        run.lemmas_checked += n;
    }
    run.instances = instances;
    run.elapsed = start.elapsed();
    run
}

fn agreement(c: &CorpusRun) -> Outcome {
    ensure(c.instances.len() >= CORPUS_SIZE, || "corpus too small".into())?;
    ensure(c.disagreements.is_empty(), || format!("{} disagreements, first: {}", c.disagreements.len(), c.disagreements[0]))?;
    ensure(c.elapsed <= CORPUS_LIMIT, || format!("took {:?}", c.elapsed))?;
    let sat = c.sat.iter().filter(|&&s| s).count();
    Ok(format!("{} instances ({sat} sat), 0 disagreements, {:.1?}", c.instances.len(), c.elapsed))
}

fn learning(c: &CorpusRun) -> Outcome {
    ensure(c.lemma_violations.is_empty(), || format!("{} violations, first: {}", c.lemma_violations.len(), c.lemma_violations[0]))?;
    Ok(format!("{} lemmas valid", c.lemmas_checked))
}

fn filtering(c: &CorpusRun) -> Outcome {
    let mut removed = 0;
    for (i, g) in c.instances.iter().enumerate() {
        for size in FILTER_SIZES {
            let (f, stats) = filter_gcsp(g, size);
            removed += stats.removed;
            match f {
                None => ensure(c.solutions[i].is_empty(), || format!("S={size} refuted a satisfiable instance\n{}", g.display()))?,
                Some(f) => {
                    for t in &c.solutions[i] {
                        let t = Substitution::from_pairs(t.iter().copied()).unwrap();
                        ensure(is_solution(&f, &t), || format!("S={size} removed a member used by a solution\n{}", g.display()))?;
                    }
                }
            }
        }
    }
    let parity = gcsp("parity.gcsp");
    let (f, _) = filter_gcsp(&parity, 4);
    ensure(f.is_some(), || "filter refuted the parity GCSP at S=4".into())?;
    for b in Backend::ALL {
        let r = run(&parity, &BackendOptions::new(b)).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Unsat, || format!("{b} solved the parity GCSP"))?;
    }
    Ok(format!("{removed} members removed over S=1..4, none in a solution; parity survives S=4, unsat on 4 backends"))
}

fn optimality() -> Outcome {
    let (inst, w) = matching("phi1_weighted.match");
    let t3 = subst(&inst.symbols, &[("X", "x0"), ("Y", "x1"), ("Z", "x1")]);
    let t2 = subst(&inst.symbols, &[("X", "x0"), ("Y", "x0"), ("Z", "x1")]);
    let mut calls = 0;
    let res = optimal_match(&inst, &w, |g| {
        calls += 1;
        let prefer = if calls == 1 { t3.clone() } else { t2.clone() };
        solve(g, &SolverConfig { branch_order: BranchOrder::Prefer(prefer), ..Default::default() }).result.solution().cloned()
    })
    .map_err(|e| e.to_string())?;
    let trace: Vec<_> = res.steps.iter().map(|s| (s.k, s.outcome.clone())).collect();
    let expect = vec![
        (3, StepOutcome::Improved(BTreeSet::from([1, 2]))),
        (2, StepOutcome::Improved(BTreeSet::from([1]))),
        (1, StepOutcome::Skipped(UnsatReason::EmptyClause(0))),
    ];
    ensure(res.first.as_ref().map(|f| &f.1) == Some(&BTreeSet::from([2, 3])), || "loop did not start from the {2,3} matching".into())?;
    ensure(trace == expect, || format!("trace {trace:?}"))?;
    ensure(shown(&res.steps[0].translation) == shown(&gcsp("phi1_restricted_12.gcsp")), || "{1,2}-restricted translation differs".into())?;
    ensure(shown(&res.steps[1].translation) == shown(&gcsp("phi1_restricted_1.gcsp")), || "{1}-restricted translation differs".into())?;
    ensure(res.best.as_ref().map(|b| &b.1) == Some(&BTreeSet::from([1])), || format!("best {:?}", res.best))?;

    let mut with_matching = 0;
    for i in 0..WEIGHTED_SIZE as u64 {
        let (inst, w) = random_match(&MatchParams::default(), &mut rng(WEIGHTED_SEED + i));
        let got = optimal_match(&inst, &w, |g| solve(g, &SolverConfig::default()).result.solution().cloned())
            .map_err(|e| format!("instance {i}: {e}"))?;
        let want = minimal_weight(&inst, &w, &SizeBudget::default()).map_err(|e| e.to_string())?;
        let got = got.best.map(|b| b.1);
        ensure(got == want, || format!("instance {i}: loop {got:?}, oracle {want:?}"))?;
        with_matching += usize::from(want.is_some());
    }
    Ok(format!("worked trace exact; {WEIGHTED_SIZE} weighted instances ({with_matching} with matchings) match the oracle"))
}

fn sorted(xs: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut v: Vec<u32> = xs.collect();
    v.sort();
    v
}

fn stack_properties() -> Outcome {
    let mut r = rng(9);
    let sizes = [9u32, 6, 4, 2];
    let clauses: Vec<Clause> = sizes
        .iter()
        .map(|&n| Clause::from_rows(&[Var(0)], &(0..n).map(|i| vec![Const(i)]).collect::<Vec<_>>()).unwrap())
        .collect();
    let mut rs = RefinementStack::new(clauses);
    let vars: Vec<Var> = (0..4).map(Var).collect();
    let uni: Vec<Const> = (0..7).map(Const).collect();
    let mut ss = SubstitutionStack::new(&vars, &uni);
    let mut rmodel: Vec<Vec<u32>> = sizes.iter().map(|&n| (0..n).collect()).collect();
    let mut smodel: Vec<Vec<u32>> = vec![(0..7).collect(); 4];
    let mut marks = vec![(rs.mark(), ss.mark(), rmodel.clone(), smodel.clone())];
    let (mut refined, mut refused, mut restores) = (0, 0, 0);
    for op in 0..STACK_OPS {
        match r.gen_range(0..10) {
            0..=3 => {
                let ci = r.gen_range(0..sizes.len());
                let kept: Vec<u32> = rmodel[ci].iter().copied().filter(|_| r.gen_bool(0.6)).collect();
                let res = rs.refine(ci, &kept);
                let want = if kept.is_empty() {
                    Err(StackError::EmptyRefinement)
                } else if kept.len() == rmodel[ci].len() {
                    Err(StackError::NotStrictSubset)
                } else {
                    Ok(())
                };
                ensure(res.as_ref().map(|_| ()).map_err(Clone::clone) == want, || format!("op {op}: refine {kept:?} gave {res:?}"))?;
                if want.is_ok() {
                    refined += 1;
                    rmodel[ci] = kept;
                } else {
                    refused += 1;
                }
            }
            4..=6 => {
                let k = r.gen_range(0..vars.len());
                let kept: Vec<Const> = smodel[k].iter().copied().filter(|_| r.gen_bool(0.7)).map(Const).collect();
                let res = ss.domain_refine(vars[k], &kept);
                let strict = kept.len() < smodel[k].len();
                ensure(res.is_ok() == strict, || format!("op {op}: domain refine gave {res:?}"))?;
                if strict {
                    refined += 1;
                    smodel[k] = kept.iter().map(|c| c.0).collect();
                } else {
                    refused += 1;
                }
            }
            7 => marks.push((rs.mark(), ss.mark(), rmodel.clone(), smodel.clone())),
            _ => {
                let (mr, ms, rm, sm) = if marks.len() > 1 { marks.pop().unwrap() } else { marks[0].clone() };
                rs.restore(mr).map_err(|e| format!("op {op}: {e}"))?;
                ss.restore(ms).map_err(|e| format!("op {op}: {e}"))?;
                rmodel = rm;
                smodel = sm;
                restores += 1;
            }
        }
        for (ci, want) in rmodel.iter().enumerate() {
            ensure(sorted(rs.current_indices(ci).iter().copied()) == sorted(want.iter().copied()), || format!("op {op}: clause {ci} differs"))?;
        }
        for (k, want) in smodel.iter().enumerate() {
            ensure(sorted(ss.domain(vars[k]).map(|c| c.0)) == sorted(want.iter().copied()), || format!("op {op}: domain {k} differs"))?;
        }
    }
    let mut st = RefinementStack::new(vec![Clause::from_rows(&[Var(0)], &[vec![Const(0)], vec![Const(1)], vec![Const(2)]]).unwrap()]);
    let m0 = st.mark();
    st.refine(0, &[0, 1]).map_err(|e| e.to_string())?;
    let stale = st.mark();
    st.restore(m0).map_err(|e| e.to_string())?;
    st.refine(0, &[2]).map_err(|e| e.to_string())?;
    ensure(st.restore(stale) == Err(StackError::InvalidMark), || "stale mark accepted".into())?;
    ensure(st.refine(0, &[2]) == Err(StackError::NotStrictSubset), || "non-strict refinement accepted".into())?;
    ensure(st.refine(0, &[0]) == Err(StackError::NotActive(0)), || "inactive member accepted".into())?;
    Ok(format!("{STACK_OPS} ops: {refined} refinements, {restores} restores exact, {refused} non-strict refinements rejected"))
}

fn bench_and_parity() -> Outcome {
    let instances: Vec<(String, Gcsp)> =
        corpus(&GcspParams::default(), CORPUS_SEED, 20).into_iter().enumerate().map(|(i, g)| (format!("r{i}"), g)).collect();
    let rows = bench(&instances, &Backend::ALL, &BackendOptions::new(Backend::Backtrack), Duration::from_secs(30));
    let csv = to_csv(&rows);
    ensure(csv.lines().next() == Some(CSV_HEADER) && csv.lines().count() == 1 + 20 * 4, || "bad CSV".into())?;
    ensure(rows.iter().all(|r| r.result == "sat" || r.result == "unsat"), || "bench run failed".into())?;
    let mut times = Vec::new();
    for n in 2..=PARITY_MAX {
        let g = parity_chain(n);
        let start = Instant::now();
        let out = solve(&g, &SolverConfig::default());
        let t = start.elapsed();
        ensure(!out.result.is_sat(), || format!("parity({n}) solved"))?;
        ensure(t < PARITY_LIMIT, || format!("parity({n}) took {t:?}"))?;
        times.push(format!("n={n} {:.3}s({})", t.as_secs_f64(), out.stats.lemmas));
    }
    Ok(format!("CSV {} rows; parity unsat: {}", rows.len(), times.join(" ")))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, r: Outcome| match r {
        Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL {n:>2} {name}: {detail}");
        }
    };
    report(1, "worked-example fidelity", worked_examples());
    report(2, "matching enumeration", oracle_matchings());
    report(3, "SAT encodings", sat_encodings());
    report(4, "lemma rules", lemma_rules());
    let corpus = run_corpus();
    report(5, "cross-backend agreement", agreement(&corpus));
    report(6, "learning soundness", learning(&corpus));
    report(7, "filter soundness and incompleteness", filtering(&corpus));
    report(8, "optimality", optimality());
    report(9, "stack properties", stack_properties());
    report(10, "bench harness and parity chains", bench_and_parity());
    println!("{} of 10 criteria pass", 10 - failed);
    ExitCode::SUCCESS
}

use gcsp::backtrack::solve;
use gcsp::gen::{corpus, parity_chain, GcspParams};
use gcsp::lemma::FlatLemma;
use gcsp::oracle::{check_lemma_valid, is_satisfiable, SizeBudget};
use gcsp::refine::solve_refining;
use gcsp::solver::{BranchOrder, SolveOutput, SolveResult, SolverConfig, Split};
use gcsp::types::{is_solution, Gcsp};

fn check(g: &Gcsp, out: &SolveOutput, sat: bool, name: &str) {
    assert_eq!(out.result.is_sat(), sat, "{name} disagrees with the oracle on\n{}", g.display());
    if let Some(t) = out.result.solution() {
        assert!(is_solution(g, t));
    }
    if let SolveResult::Unsat(l) = &out.result {
        assert_eq!(l, &FlatLemma::new());
    }
    for l in &out.learned {
        assert!(check_lemma_valid(g, l, &SizeBudget::default()).unwrap(), "{name} learned an invalid lemma on\n{}", g.display());
    }
}

#[test]
fn native_solvers_agree_with_oracle() {
    let configs = [
        SolverConfig::default(),
        SolverConfig { branch_order: BranchOrder::Descending, split: Split::Singletons, precompute_sigma: true },
    ];
    for g in corpus(&GcspParams::default(), 1000, 2000) {
        let sat = is_satisfiable(&g, &SizeBudget::default()).unwrap();
        for cfg in &configs {
            check(&g, &solve(&g, cfg), sat, "backtrack");
            check(&g, &solve_refining(&g, cfg), sat, "refine");
        }
    }
}

#[test]
fn parity_chains_are_refuted() {
    for n in 2..=6 {
        let g = parity_chain(n);
        assert_eq!(solve(&g, &SolverConfig::default()).result, SolveResult::Unsat(FlatLemma::new()));
        assert_eq!(solve_refining(&g, &SolverConfig::default()).result, SolveResult::Unsat(FlatLemma::new()));
    }
}

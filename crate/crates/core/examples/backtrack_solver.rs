//! The backtracking solver with lemma learning on a satisfiable GCSP and on
//! an unsatisfiable parity chain.

use gcsp::backtrack::solve;
use gcsp::format::parse_gcsp;
use gcsp::gen::parity_chain;
use gcsp::solver::{BranchOrder, SolveResult, SolverConfig};

fn main() {
    let g = parse_gcsp(include_str!("../instances/sat_example.gcsp")).expect("fixture parses");
    let out = solve(&g, &SolverConfig::default());
    if let SolveResult::Sat(t) = &out.result {
        println!("sat_example: {}", t.display(&g.symbols));
    }
    println!("  {:?}", out.stats);

    let chain = parity_chain(5);
    for order in [BranchOrder::Ascending, BranchOrder::Descending] {
        let cfg = SolverConfig { branch_order: order.clone(), ..Default::default() };
        let out = solve(&chain, &cfg);
        println!("parity(5) {order:?}: sat={} {:?}", out.result.is_sat(), out.stats);
        for l in out.learned.iter().take(3) {
            println!("  learned {}", l.display(&chain.symbols));
        }
    }
}

//! The domain-refining solver, comparing the two split strategies.

use gcsp::gen::{corpus, parity_chain, GcspParams};
use gcsp::refine::solve_refining;
use gcsp::solver::{SolverConfig, Split};

fn main() {
    for split in [Split::Halves, Split::Singletons] {
        let cfg = SolverConfig { split, ..Default::default() };
        let out = solve_refining(&parity_chain(6), &cfg);
        println!("parity(6) {split:?}: sat={} {:?}", out.result.is_sat(), out.stats);

        let params = GcspParams { vars: 10, consts: 6, clauses: 10, ..Default::default() };
        let (mut sat, mut decisions) = (0, 0);
        for g in corpus(&params, 42, 500) {
            let out = solve_refining(&g, &cfg);
            sat += usize::from(out.result.is_sat());
            decisions += out.stats.decisions;
        }
        println!("  random: {sat}/500 sat, {decisions} decisions");
    }
}

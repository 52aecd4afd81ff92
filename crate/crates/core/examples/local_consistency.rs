//! Prefiltering by local consistency. The filter narrows clauses but cannot
//! refute a parity chain, so the solver still has to.

use gcsp::backend::{run, Backend, BackendOptions};
use gcsp::filter::filter_gcsp;
use gcsp::format::parse_gcsp;
use gcsp::gen::parity_chain;

fn main() {
    let g = parse_gcsp("clause (X,Y): (0,0) (0,1) (1,2)\nclause (Y,Z): (1,1) (2,0)\nblocking (X,Z): (1,0)\n").expect("parses");
    for size in 1..=3 {
        let (f, stats) = filter_gcsp(&g, size);
        match f {
            Some(f) => println!("size {size}: {stats:?}\n{}", f.display()),
            None => println!("size {size}: refuted {stats:?}"),
        }
    }

    let chain = parity_chain(4);
    let (f, stats) = filter_gcsp(&chain, 4);
    println!("parity(4) after filtering: refuted={} {stats:?}", f.is_none());
    let opts = BackendOptions { filter: Some(4), ..BackendOptions::new(Backend::Refine) };
    let report = run(&chain, &opts).expect("native backend");
    println!("refine with filter: {:?}", report.verdict);
}

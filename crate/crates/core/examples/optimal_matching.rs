//! Weight-minimal matching: the improvement loop against the brute-force
//! minimum.

use gcsp::backend::{solver_fn, Backend, BackendOptions};
use gcsp::format::{parse_instance, InstanceFile};
use gcsp::optimal::optimal_match;
use gcsp::oracle::{minimal_weight, SizeBudget};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let InstanceFile::Matching { inst, weights } = parse_instance(include_str!("../instances/phi1_weighted.match"))? else {
        unreachable!()
    };
    let opts = BackendOptions::new(Backend::Sat2);
    let mut errors = Vec::new();
    let res = optimal_match(&inst, &weights, solver_fn(&opts, &mut errors))?;
    if let Some((_, w)) = &res.first {
        println!("first matching has weight {w:?}");
    }
    for s in &res.steps {
        println!("k={} alpha={:?} -> {:?}", s.k, s.alpha, s.outcome);
    }
    let best = res.best.map(|(_, w)| w);
    println!("best {best:?} after {} solver calls", res.solver_calls);
    println!("oracle {:?}", minimal_weight(&inst, &weights, &SizeBudget::default())?);
    Ok(())
}

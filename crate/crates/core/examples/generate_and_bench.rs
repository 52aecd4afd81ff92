//! Generate a seeded corpus plus parity chains and time every backend.

use std::time::Duration;

use gcsp::backend::{Backend, BackendOptions};
use gcsp::bench::{bench, to_csv};
use gcsp::gen::{corpus, parity_chain, GcspParams};

fn main() {
    let mut instances: Vec<_> = corpus(&GcspParams::default(), 7, 5)
        .into_iter()
        .enumerate()
        .map(|(i, g)| (format!("rand{i}"), g))
        .collect();
    instances.extend((2..=5).map(|n| (format!("parity{n}"), parity_chain(n))));

    let rows = bench(&instances, &Backend::ALL, &BackendOptions::new(Backend::Backtrack), Duration::from_secs(10));
    print!("{}", to_csv(&rows));
    for r in rows.iter().filter(|r| r.instance.starts_with("parity")) {
        println!("{:>8} {:>9} {}", r.instance, r.backend, r.t_lambda());
    }
}

//! Parse a matching instance, translate it to a GCSP and solve it.
//!
//! Run with `cargo run --example matching [FILE]`.

use gcsp::backend::{run, Backend, BackendOptions, Verdict};
use gcsp::format::{parse_instance, InstanceFile};
use gcsp::geometric::is_matching;
use gcsp::translate::{preprocess, translate, Preprocessed};

const PHI2: &str = include_str!("../instances/phi2.match");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => PHI2.to_string(),
    };
    let InstanceFile::Matching { inst, .. } = parse_instance(&text)? else {
        return Err("expected a matching instance".into());
    };

    let out = translate(&inst);
    println!("translation:\n{}", out.gcsp.display());

    match preprocess(&out.gcsp) {
        Preprocessed::TriviallyUnsat(reason) => println!("no matching ({reason:?})"),
        Preprocessed::Simplified(g) => {
            println!("preprocessed:\n{}", g.display());
            let report = run(&g, &BackendOptions::new(Backend::Backtrack))?;
            match report.verdict {
                Verdict::Sat(theta) => {
                    println!("matching: {}", theta.display(&g.symbols));
                    assert!(is_matching(&inst, &theta)?);
                }
                Verdict::Unsat => println!("no matching"),
            }
        }
    }
    Ok(())
}

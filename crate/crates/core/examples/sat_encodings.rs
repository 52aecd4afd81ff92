//! Both SAT encodings of a small GCSP: DIMACS output, the built-in DPLL and
//! decoding the model back.

use gcsp::format::parse_gcsp;
use gcsp::sat::{decode_model, emit_dimacs, solve_cnf, translate, Encoding};
use gcsp::types::is_solution;

fn main() {
    let g = parse_gcsp(include_str!("../instances/sat_example.gcsp")).expect("fixture parses");
    for enc in [Encoding::V1, Encoding::V2] {
        let (cnf, map, parts) = translate(&g, enc);
        println!("{enc:?}: {} atoms, part sizes {parts:?}", map.len());
        print!("{}", emit_dimacs(&cnf));
        match solve_cnf(&cnf) {
            Some(m) => {
                let t = decode_model(&g, enc, &map, &m).expect("model is consistent");
                assert!(is_solution(&g, &t));
                println!("decoded: {}\n", t.display(&g.symbols));
            }
            None => println!("unsat\n"),
        }
    }
}

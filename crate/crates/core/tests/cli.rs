use std::fs;
use std::path::{Path, PathBuf};

use gcsp::cli::{run_cli, EXIT_ERROR, EXIT_OK, EXIT_SAT, EXIT_UNSAT, EXIT_VERIFY};

fn instance(name: &str) -> String {
    format!("{}/instances/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(std::iter::once("gcsp").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let p = dir.join(name);
    fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&p, fs::Permissions::from_mode(0o755)).unwrap();
    p
}

#[test]
fn solve_phi2_on_every_backend() {
    for b in ["backtrack", "refine", "sat1", "sat2"] {
        let (code, out, _) = cli(&["solve", &instance("phi2.match"), "--backend", b]);
        assert_eq!(code, EXIT_SAT, "{b}");
        assert!(out.starts_with("SAT\nX:=x0 Y:=x1 Z:=x2\n"), "{b}: {out}");
        assert!(out.contains("instance,backend,result"));
    }
}

#[test]
fn solve_parity_is_unsat_with_and_without_filter() {
    let (code, out, _) = cli(&["solve", &instance("parity.gcsp"), "--backend", "refine", "--split", "singletons"]);
    assert_eq!(code, EXIT_UNSAT);
    assert!(out.starts_with("UNSAT\n"));
    let (code, _, _) = cli(&["solve", &instance("parity.gcsp"), "--filter", "4", "--order", "desc"]);
    assert_eq!(code, EXIT_UNSAT);
}

#[test]
fn translate_v2_writes_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("out.cnf");
    let (code, _, _) = cli(&["translate", &instance("sat_example.gcsp"), "--encoding", "v2", "-o", cnf.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(fs::read_to_string(cnf).unwrap(), fs::read_to_string(instance("sat_example_v2.cnf")).unwrap());
}

#[test]
fn translate_restricted_and_preprocessed() {
    let (code, out, _) = cli(&["translate", &instance("phi1_weighted.match"), "--alpha", "0,1"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.ends_with(&fs::read_to_string(instance("phi1_restricted_1.gcsp")).unwrap()), "{out}");
    let (code, out, _) = cli(&["translate", &instance("phi2.match"), "--preprocess"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.ends_with(&fs::read_to_string(instance("phi2_preprocessed.gcsp")).unwrap()));
}

#[test]
fn optimal_and_oracle() {
    let (code, out, _) = cli(&["optimal", &instance("phi1_weighted.match"), "--backend", "sat1"]);
    assert_eq!(code, EXIT_SAT);
    assert!(out.contains("OPTIMAL {1}\n"), "{out}");
    let (code, out, _) = cli(&["oracle", &instance("phi1_weighted.match")]);
    assert_eq!(code, EXIT_SAT);
    assert!(out.starts_with("5 matchings\n"));
    assert!(out.contains("minimal weight {1}"));
    let (code, out, _) = cli(&["oracle", &instance("parity.gcsp")]);
    assert_eq!(code, EXIT_UNSAT);
    assert!(out.starts_with("0 solutions"));
}

#[test]
fn filter_does_not_refute_parity() {
    let (code, out, _) = cli(&["filter", &instance("parity.gcsp"), "--size", "4"]);
    assert_eq!(code, EXIT_OK);
    assert!(!out.contains("REFUTED"));
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--vars", "4", "--consts", "3", "--clauses", "4", "--seed", "7"];
    let (c1, a, _) = cli(&args);
    let (c2, b, _) = cli(&args);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    assert!(a.contains("clause"));
    let (_, m1, _) = cli(&["gen", "--kind", "match", "--seed", "3"]);
    let (_, m2, _) = cli(&["gen", "--kind", "match", "--seed", "3"]);
    assert_eq!(m1, m2);
}

#[test]
fn gen_corpus_then_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, _) = cli(&["gen", "--count", "3", "--seed", "11", "--dir", d]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(fs::read_dir(d).unwrap().count(), 3);
    let (code, out, _) = cli(&["bench", d, "--backends", "backtrack,sat2", "--timeout", "10"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 1 + 3 * 2);
}

#[test]
fn errors_have_their_own_exit_code() {
    let (code, _, err) = cli(&["solve", "/nonexistent/file.gcsp"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("error"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gcsp");
    fs::write(&bad, "clause (X): (0)\nblocking (Y): (1)\n").unwrap();
    let (code, _, err) = cli(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn external_solver_answers_are_used_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let ex = instance("sat_example.gcsp");
    // atoms 7, 8, 10 are X:=1, Y:=0, Z:=0 in the v2 numbering
    let good = script(dir.path(), "good.sh", "printf 's SATISFIABLE\\nv 1 4 7 8 10 0\\n'");
    let (code, out, _) = cli(&["solve", &ex, "--backend", "sat2", "--external", good.to_str().unwrap()]);
    assert_eq!(code, EXIT_SAT, "{out}");
    assert!(out.contains("X:=1 Y:=0 Z:=0"));

    let wrong = script(dir.path(), "wrong.sh", "printf 's SATISFIABLE\\nv 6 8 10 0\\n'");
    let (code, _, err) = cli(&["solve", &ex, "--backend", "sat2", "--external", wrong.to_str().unwrap()]);
    assert_eq!(code, EXIT_VERIFY, "{err}");

    let unsat = script(dir.path(), "unsat.sh", "echo 's UNSATISFIABLE'");
    let (code, _, _) = cli(&["solve", &ex, "--backend", "sat1", "--external", unsat.to_str().unwrap()]);
    assert_eq!(code, EXIT_UNSAT);

    let garbage = script(dir.path(), "garbage.sh", "echo hello");
    let (code, _, _) = cli(&["solve", &ex, "--backend", "sat1", "--external", garbage.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);

    let slow = script(dir.path(), "slow.sh", "sleep 5");
    let (code, _, err) = cli(&["solve", &ex, "--backend", "sat1", "--timeout", "1", "--external", slow.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("exceeded"), "{err}");
}

#[test]
fn external_template_receives_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("seen.cnf");
    let tee = script(dir.path(), "tee.sh", &format!("cp \"$2\" {}\necho 's UNSATISFIABLE'", copy.display()));
    let template = format!("{} --in {{}}", tee.display());
    let (code, _, _) = cli(&["solve", &instance("sat_example.gcsp"), "--backend", "sat2", "--external", &template]);
    assert_eq!(code, EXIT_UNSAT);
    assert_eq!(fs::read_to_string(copy).unwrap(), fs::read_to_string(instance("sat_example_v2.cnf")).unwrap());
}

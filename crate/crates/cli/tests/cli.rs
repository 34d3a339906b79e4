use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn pybmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pybmc")).args(args).current_dir(root()).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exit_codes() {
    let failed = pybmc(&["fixtures/factorial/main.py", "--unwind", "5"]);
    assert_eq!(failed.status.code(), Some(1));
    assert!(stdout(&failed).ends_with("VERIFICATION FAILED\n"));

    let ok = pybmc(&["fixtures/factorial_dual/main.py", "--unwind", "5"]);
    assert_eq!(ok.status.code(), Some(0));

    let missing = pybmc(&["fixtures/nope.py"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());

    let front = pybmc(&["fixtures/types/rebind-type-error.py"]);
    assert_eq!(front.status.code(), Some(2));

    let solver = pybmc(&["fixtures/factorial/main.py", "--unwind", "5", "--solver", "/nonexistent/solver"]);
    assert_eq!(solver.status.code(), Some(3));
}

#[test]
fn argument_validation() {
    for bad in [
        &["fixtures/factorial/main.py", "--unwind", "0"][..],
        &["fixtures/factorial/main.py", "--int-width", "16"],
        &["fixtures/factorial/main.py", "--timeout", "0"],
        &["fixtures/factorial/main.py", "--output", "xml"],
    ] {
        let o = pybmc(bad);
        assert_eq!(o.status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn oracle_flag_matches_solver() {
    let a = pybmc(&["fixtures/factorial/main.py", "--unwind", "5", "--oracle", "--output", "json"]);
    let b = pybmc(&["fixtures/factorial/main.py", "--unwind", "5", "--output", "json"]);
    let a: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(a["outcome"], b["outcome"]);
    assert_eq!(a["stats"]["solver"], "exhaustive oracle");
}

#[test]
fn dump_flags_print_each_stage() {
    let o = pybmc(&[
        "fixtures/factorial/main.py",
        "--unwind",
        "2",
        "--parse-tree-too",
        "--dump-annotated",
        "--show-symbol-table",
        "--show-goto",
        "--show-ssa",
    ]);
    let text = stdout(&o);
    let order = ["=== parse tree main ===", "=== annotated AST main ===", "=== symbol table ===", "=== GOTO program ===", "=== SSA ==="];
    let mut last = 0;
    for h in order {
        let at = text[last..].find(h).unwrap_or_else(|| panic!("missing {h}:\n{text}")) + last;
        last = at;
    }
    assert!(text.contains("main@factorial@n"));
    assert!(text.contains("n!0 := nondet"));
    // Dumps do not stop verification.
    assert!(text.ends_with("VERIFICATION FAILED\n"));
}

#[test]
fn smt_lib_out_is_a_valid_solver_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.smt2");
    let o = pybmc(&["fixtures/factorial/main.py", "--unwind", "5", "--smt-lib-out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let script = std::fs::read_to_string(&out).unwrap();
    assert!(script.contains("(set-logic QF_BV)"));
    assert!(script.contains("(check-sat)"));
    let z3 = Command::new("z3").arg(&out).output().unwrap();
    let answers = String::from_utf8_lossy(&z3.stdout);
    assert!(answers.lines().any(|l| l == "sat"), "{answers}");
    assert!(!answers.contains("error"), "{answers}");

    let oracle_out = dir.path().join("o.smt2");
    pybmc(&["fixtures/factorial/main.py", "--unwind", "5", "--oracle", "--smt-lib-out", oracle_out.to_str().unwrap()]);
    let z3 = Command::new("z3").arg(&oracle_out).output().unwrap();
    let answers = String::from_utf8_lossy(&z3.stdout);
    assert!(answers.lines().any(|l| l == "sat"), "{answers}");
}

#[test]
fn json_output_schema() {
    let o = pybmc(&["fixtures/factorial/main.py", "--unwind", "5", "--output", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"]["status"], "FAILED");
    assert_eq!(v["outcome"]["violated"]["expression"], "result != 120");
    let stages: Vec<&str> = v["timings"].as_array().unwrap().iter().map(|t| t["stage"].as_str().unwrap()).collect();
    assert_eq!(stages, ["parse", "convert", "goto", "unwind", "symex", "solve", "trace"]);
    let e = pybmc(&["fixtures/unsupported/main.py", "--output", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&e.stdout).unwrap();
    assert_eq!(v["outcome"]["status"], "ERROR");
    assert_eq!(v["outcome"]["kind"], "front-end");
}

#[test]
fn multi_property_reports_every_violation() {
    let single = pybmc(&["fixtures/multi/main.py", "--output", "json"]);
    let multi = pybmc(&["fixtures/multi/main.py", "--output", "json", "--multi-property"]);
    let s: serde_json::Value = serde_json::from_slice(&single.stdout).unwrap();
    let m: serde_json::Value = serde_json::from_slice(&multi.stdout).unwrap();
    assert!(s["outcome"].get("additional").is_none());
    assert_eq!(m["outcome"]["violated"]["line"], 2);
    assert_eq!(m["outcome"]["additional"].as_array().unwrap().len(), 1);
    assert_eq!(m["outcome"]["additional"][0]["expression"], "x != 2");
}

#[test]
fn empty_bench_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = pybmc(&["bench", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Total"));
}

#[test]
fn bench_reports_missing_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("cat").join("t");
    std::fs::create_dir_all(&t).unwrap();
    std::fs::copy(root().join("fixtures/factorial/main.json"), t.join("main.json")).unwrap();
    let o = pybmc(&["bench", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expect"));
}

#[test]
fn bench_mismatch_fails_the_harness() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("loops").join("wrong");
    std::fs::create_dir_all(&t).unwrap();
    std::fs::copy(root().join("fixtures/factorial/main.json"), t.join("main.json")).unwrap();
    std::fs::write(t.join("expect"), "SUCCESSFUL\n--unwind 5\n").unwrap();
    let o = pybmc(&["bench", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Mismatches:\n  Loops/wrong: expected SUCCESSFUL, got FAILED"));
}

fn verdicts(o: &Output) -> Vec<(String, String)> {
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    v["tests"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (format!("{}/{}", t["category"], t["name"]), t["actual"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn bench_is_deterministic_and_lists_all_categories() {
    let a = pybmc(&["bench", "suite", "--jobs", "4", "--output", "json"]);
    let b = pybmc(&["bench", "suite", "--jobs", "2", "--output", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(verdicts(&a), verdicts(&b));
    let text = stdout(&pybmc(&["bench", "suite", "--jobs", "4"]));
    for c in [
        "Arith operations", "Assignments", "Assume", "Binary operations", "Binary types", "Built-in functions",
        "Classes", "Conditionals", "Functions", "Imports", "Logical operations", "Loops", "Non-determinism",
        "Numeric types", "Type annotation",
    ] {
        assert!(text.lines().any(|l| l.starts_with(c)), "{c} missing:\n{text}");
    }
}

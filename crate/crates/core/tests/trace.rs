mod common;

use common::py::*;
use common::{compile, compile_unit, fixture, mem_config, suite, unit_of};
use num_bigint::BigInt;
use pybmc_core::goto::IrType;
use pybmc_core::pipeline::{self, RunConfig};
use pybmc_core::report::{self, Outcome, SEPARATOR};
use pybmc_core::symex::SymId;
use pybmc_core::vc::{self, VcOptions};

fn factorial(k: u32) -> RunConfig {
    let mut cfg = RunConfig::new(fixture("factorial/main.py"));
    cfg.unwind = k;
    cfg
}

fn run(cfg: &RunConfig) -> (report::VerificationResult, String) {
    let mut sink = Vec::new();
    let r = pipeline::run(cfg, &mut sink);
    let text = report::render_text(&r);
    (r, text)
}

#[test]
fn factorial_counterexample() {
    let c = compile(&factorial(5));
    let out = vc::check(&c.ssa, &VcOptions::default()).unwrap();
    let (states, violated) = report::build_trace(&c.ssa, &out.failures[0]).unwrap();
    let n = &states[0];
    assert_eq!(n.ordinal, 1);
    assert_eq!(n.line, 7);
    assert_eq!(n.assignment.name, "n");
    assert_eq!(n.assignment.value, "5");
    assert_eq!(n.assignment.binary, "00000000 00000000 00000000 00000101");
    assert_eq!(violated.ordinal, 4);
    assert_eq!(violated.expression, "result != 120");
    assert_eq!(violated.line, 10);
}

#[test]
fn single_assignment_gives_one_state() {
    let ssa = compile_unit(
        unit_of(&module(vec![
            ann("x", "int", call("nondet_int", vec![])),
            assert_(cmp(name("x"), "NotEq", int(3))),
        ])),
        &mem_config(1),
    )
    .ssa;
    let out = vc::check(&ssa, &VcOptions::default()).unwrap();
    let (states, v) = report::build_trace(&ssa, &out.failures[0]).unwrap();
    assert_eq!(states.len(), 1);
    assert_eq!(states[0].assignment.value, "3");
    assert_eq!(v.ordinal, 2);
}

#[test]
fn replayed_values_satisfy_the_vc() {
    for t in suite().into_iter().filter(|t| t.expect_failed) {
        let c = compile(&t.cfg);
        let out = vc::check(&c.ssa, &VcOptions::default()).unwrap();
        let f = &out.failures[0];
        let env = |s: &SymId| f.values[s.0 as usize];
        for i in 0..f.step {
            if let Some(k) = vc::step_constraint(&c.ssa, i) {
                assert!(k.eval(&env).as_bool(), "{}: constraint {i}", t.label);
            }
        }
        assert!(!vc::property(&c.ssa, f.step).unwrap().eval(&env).as_bool(), "{}", t.label);
        let (states, v) = report::build_trace(&c.ssa, f).unwrap();
        assert!(states.windows(2).all(|w| w[0].ordinal < w[1].ordinal), "{}", t.label);
        assert!(states.last().is_none_or(|s| s.ordinal < v.ordinal), "{}", t.label);
    }
}

#[test]
fn failed_report_layout() {
    let (r, text) = run(&factorial(5));
    assert_eq!(r.exit_code(), 1);
    assert!(text.starts_with("pybmc version "));
    let expected_tail = format!(
        "Building error trace\n[Counterexample]\nState 1 file main.py line 7 column 0 thread 0\n{SEPARATOR}\n\
         n = 5 (00000000 00000000 00000000 00000101)\n\nState 4  thread 0\n{SEPARATOR}\n\
         Violated property:\n  file main.py line 10 column 0\n  assertion\n  result != 120\n  \n\
         VERIFICATION FAILED\n"
    );
    assert!(text.ends_with(&expected_tail), "{text}");
    assert_eq!(text.matches("Violated property:").count(), 1);
    assert!(text.contains("Unwinding loops and recursion with k = 5"));
}

#[test]
fn successful_report_has_no_counterexample() {
    let mut cfg = RunConfig::new(fixture("factorial_dual/main.py"));
    cfg.unwind = 5;
    let (r, text) = run(&cfg);
    assert_eq!(r.exit_code(), 0);
    assert!(!text.contains("[Counterexample]"));
    assert!(text.ends_with("\nVERIFICATION SUCCESSFUL\n"));
}

#[test]
fn exit_codes_follow_the_outcome() {
    for t in suite() {
        let (r, text) = run(&t.cfg);
        assert_eq!(r.exit_code(), if t.expect_failed { 1 } else { 0 }, "{}", t.label);
        assert_eq!(text.matches("Violated property:").count(), t.expect_failed as usize, "{}", t.label);
    }
    let (r, text) = run(&RunConfig::new(fixture("unsupported/main.py")));
    assert_eq!(r.exit_code(), 2);
    assert!(text.ends_with("VERIFICATION ERROR\n"));
    let (r, _) = run(&RunConfig::new(fixture("does/not/exist.py")));
    assert_eq!(r.exit_code(), 2);
    let mut cfg = factorial(5);
    cfg.backend = vc::Backend::Smt("/nonexistent/solver".into());
    assert_eq!(run(&cfg).0.exit_code(), 3);
}

#[test]
fn printed_binary_matches_printed_decimal() {
    let mut checked = 0;
    for t in suite().into_iter().filter(|t| t.expect_failed) {
        let c = compile(&t.cfg);
        let out = vc::check(&c.ssa, &VcOptions::default()).unwrap();
        let (states, _) = report::build_trace(&c.ssa, &out.failures[0]).unwrap();
        for s in states {
            let ty = c
                .ssa
                .vars
                .iter()
                .find(|(_, v)| v.display == s.assignment.name)
                .map(|(_, v)| v.ty)
                .unwrap();
            let decoded = report::parse_binary(&s.assignment.binary, ty)
                .unwrap_or_else(|| panic!("{}: {}", t.label, s.assignment.binary));
            assert_eq!(decoded, s.assignment.value, "{}: {}", t.label, s.assignment.name);
            if let IrType::Int(it) = ty {
                // Independent decoding of the two's complement pattern.
                let bits: String = s.assignment.binary.chars().filter(|c| *c != ' ').collect();
                assert_eq!(bits.len() as u32, it.width);
                let mut v = BigInt::parse_bytes(bits.as_bytes(), 2).unwrap();
                if it.signed && bits.starts_with('1') {
                    v -= BigInt::from(1) << it.width;
                }
                assert_eq!(v.to_string(), s.assignment.value);
            }
            checked += 1;
        }
    }
    assert!(checked > 20, "{checked}");
}

#[test]
fn json_report_round_trips_the_outcome() {
    let (r, _) = run(&factorial(5));
    let v: serde_json::Value = serde_json::from_str(&report::render_json(&r)).unwrap();
    assert_eq!(v["outcome"]["status"], "FAILED");
    assert_eq!(v["outcome"]["violated"]["expression"], "result != 120");
    assert_eq!(v["outcome"]["violated"]["property_class"], "user-assertion");
    assert_eq!(v["outcome"]["states"][0]["assignment"]["value"], "5");
    assert_eq!(v["stats"]["unwind"], 5);
    let Outcome::Failed { states, .. } = &r.outcome else { panic!() };
    assert_eq!(states.len(), 1);
}

#[test]
fn isolated_square_root_divides_by_zero() {
    let mut cfg = RunConfig::new(fixture("integer_squareroot/main.py"));
    cfg.function = Some("integer_squareroot".into());
    cfg.unwind = 3;
    let (r, text) = run(&cfg);
    let Outcome::Failed { violated, states, .. } = &r.outcome else { panic!("{text}") };
    assert_eq!(violated.property_class, pybmc_core::goto::PropertyClass::DivisionByZero);
    assert_eq!(violated.expression, "x != 0");
    let n = states.iter().find(|s| s.assignment.name == "n").expect("n in trace");
    assert_eq!(n.assignment.value, u64::MAX.to_string());
    // (2^64 - 1) + 1 wraps to 0 and n // x divides by it.
    assert_eq!(u64::MAX.wrapping_add(1) / 2, 0);
}

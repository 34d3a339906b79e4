mod common;

use common::py::*;
use common::{compile, compile_unit, fixture, mem_config, suite, unit_of};
use pybmc_core::ast::count_division_nodes;
use pybmc_core::goto::{
    self, back_edges, is_acyclic, run_concrete, CheckOptions, ConcreteOutcome, GotoProgram, Instr, IrType,
    PropertyClass, UnwindOptions,
};
use pybmc_core::pipeline::{self, RunConfig};
use pybmc_core::term::Value as TV;
use pybmc_core::vc::{self, VcOptions};
use serde_json::{json, Value};

fn lowered(body: Vec<Value>) -> GotoProgram {
    let cfg = mem_config(1);
    let fe = pipeline::analyze_unit(unit_of(&module(body)), &cfg).unwrap();
    goto::lower_to_goto(&fe.table).unwrap()
}

fn jumps(g: &GotoProgram) -> usize {
    g.entry_function().body.iter().filter(|i| matches!(i.kind, Instr::Goto { .. })).count()
}

fn no_input(_: IrType) -> TV {
    panic!("program has no nondeterministic input")
}

fn u64_const(v: u64) -> Value {
    call("uint64", vec![json!({"_type": "Constant", "value": v, "kind": null})])
}

#[test]
fn if_else_lowers_to_two_jumps() {
    let g = lowered(vec![
        ann("x", "int", int(3)),
        ann("y", "int", int(0)),
        if_(cmp(name("x"), "Gt", int(0)), vec![assign("y", int(1))], vec![assign("y", int(2))]),
    ]);
    g.validate().unwrap();
    assert_eq!(jumps(&g), 2);
    assert!(back_edges(&g.entry_function().body).is_empty());
    let g = lowered(vec![
        ann("x", "int", int(3)),
        if_(cmp(name("x"), "Gt", int(0)), vec![assign("x", int(1))], vec![]),
    ]);
    assert_eq!(jumps(&g), 1);
}

#[test]
fn while_has_one_back_edge() {
    let g = lowered(vec![
        ann("i", "int", int(0)),
        while_(cmp(name("i"), "Lt", int(3)), vec![assign("i", bin(name("i"), "Add", int(1)))]),
    ]);
    let body = &g.entry_function().body;
    let edges = back_edges(body);
    assert_eq!(edges.len(), 1);
    assert!(!is_acyclic(body));
    let (from, to) = edges[0];
    assert!(to < from);
}

#[test]
fn division_check_precedes_the_division() {
    let mut g = lowered(vec![
        ann("x", "int", int(7)),
        ann("y", "int", int(2)),
        ann("z", "int", bin(name("x"), "FloorDiv", name("y"))),
    ]);
    let before = g.clone();
    goto::instrument_properties(&mut g, &CheckOptions::default());
    assert_eq!(g.count_asserts(PropertyClass::DivisionByZero), 1);
    assert_eq!(g.instruction_count(), before.instruction_count() + 1);
    let body = &g.entry_function().body;
    let div = body
        .iter()
        .position(|i| matches!(&i.kind, Instr::Assign { rhs, .. } if rhs.division_count() > 0))
        .expect("division assignment");
    match &body[div - 1].kind {
        Instr::Assert { class, message, .. } => {
            assert_eq!(*class, PropertyClass::DivisionByZero);
            assert_eq!(message, "y != 0");
        }
        other => panic!("expected the check right before the division, found {other:?}"),
    }
}

#[test]
fn instrumentation_without_checks_is_identity() {
    let mut g = lowered(vec![
        ann("x", "int", int(7)),
        ann("y", "int", bin(name("x"), "Mult", int(3))),
        assert_(cmp(name("y"), "Eq", int(21))),
    ]);
    let before = g.clone();
    goto::instrument_properties(&mut g, &CheckOptions::default());
    assert_eq!(g, before);
    goto::instrument_properties(&mut g, &CheckOptions { overflow: true });
    assert_eq!(g.count_asserts(PropertyClass::Overflow), 1);
}

#[test]
fn uint64_arithmetic_wraps_concretely() {
    let g = lowered(vec![
        ann("x", "uint64", u64_const(u64::MAX)),
        ann("y", "uint64", bin(name("x"), "Add", u64_const(1))),
        assert_(cmp(name("y"), "Eq", u64_const(0))),
        ann("z", "uint64", bin(u64_const(0), "Sub", u64_const(1))),
        assert_(cmp(name("z"), "Eq", u64_const(u64::MAX))),
    ]);
    assert_eq!(run_concrete(&g, &mut no_input, 1000).unwrap(), ConcreteOutcome::Completed);
}

#[test]
fn concrete_division_by_zero_is_a_violation() {
    let mut g = lowered(vec![
        ann("x", "int", int(0)),
        ann("z", "int", bin(int(5), "Mod", name("x"))),
    ]);
    goto::instrument_properties(&mut g, &CheckOptions::default());
    match run_concrete(&g, &mut no_input, 1000).unwrap() {
        ConcreteOutcome::Violation { class, .. } => assert_eq!(class, PropertyClass::DivisionByZero),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unwound_suite_programs_are_acyclic() {
    for t in suite() {
        let c = compile(&t.cfg);
        c.goto.validate().unwrap();
        for k in [1, 5, 10] {
            let u = goto::unwind(&c.goto, &UnwindOptions { k, unwinding_assertions: true });
            u.validate().unwrap_or_else(|e| panic!("{} k={k}: {e}", t.label));
            assert_eq!(u.functions.len(), 1, "{} k={k}: calls left after inlining", t.label);
            assert!(is_acyclic(&u.entry_function().body), "{} k={k}", t.label);
            assert!(back_edges(&u.entry_function().body).is_empty());
            assert_eq!(u.unwound, Some(k));
        }
    }
}

#[test]
fn one_division_check_per_division_node() {
    let mut programs: Vec<RunConfig> = suite().into_iter().map(|t| t.cfg).collect();
    for f in ["factorial/main.py", "inheritance/main.py", "integer_squareroot/main.py", "imports/chain/main.py"] {
        programs.push(RunConfig::new(fixture(f)));
    }
    for mut cfg in programs {
        // Every function body is lowered without an isolated entry.
        cfg.function = None;
        let fe = pipeline::front_end(&cfg).unwrap();
        let nodes: usize = fe.annotated.modules().map(|(_, m)| count_division_nodes(&m.body)).sum();
        let g = pipeline::build_goto(&fe.table, &cfg).unwrap();
        assert_eq!(
            g.count_asserts(PropertyClass::DivisionByZero),
            nodes,
            "{}",
            cfg.input.display()
        );
    }
}

fn loop_to_ten() -> RunConfig {
    RunConfig::new(fixture("loops/main.py"))
}

#[test]
fn short_unwinding_is_caught() {
    let mut cfg = loop_to_ten();
    cfg.unwind = 3;
    let c = compile(&cfg);
    assert_eq!(c.unwound.count_asserts(PropertyClass::Unwinding), 1);
    let out = vc::check(&c.ssa, &VcOptions::default()).unwrap();
    let step = out.failures.first().expect("unwinding assertion violated").step;
    match &c.ssa.steps[step].kind {
        pybmc_core::symex::StepKind::Assert { class, .. } => assert_eq!(*class, PropertyClass::Unwinding),
        other => panic!("{other:?}"),
    }
    match run_concrete(&c.unwound, &mut no_input, 10_000).unwrap() {
        ConcreteOutcome::Violation { class, .. } => assert_eq!(class, PropertyClass::Unwinding),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn loop_bound_is_exactly_the_trip_count() {
    // The loop runs ten times concretely, so k = 10 is the least sufficient bound.
    let c = compile(&loop_to_ten());
    assert_eq!(run_concrete(&c.goto, &mut no_input, 10_000).unwrap(), ConcreteOutcome::Completed);
    for (k, ok) in [(9, false), (10, true), (11, true)] {
        let mut cfg = loop_to_ten();
        cfg.unwind = k;
        let c = compile(&cfg);
        assert_eq!(vc::check(&c.ssa, &VcOptions::default()).unwrap().successful(), ok, "k={k}");
        let concrete = run_concrete(&c.unwound, &mut no_input, 10_000).unwrap();
        assert_eq!(concrete == ConcreteOutcome::Completed, ok, "k={k}");
    }
}

#[test]
fn without_unwinding_assertions_the_residue_is_assumed_away() {
    let mut cfg = loop_to_ten();
    cfg.unwind = 3;
    cfg.unwinding_assertions = false;
    let c = compile(&cfg);
    assert_eq!(c.unwound.count_asserts(PropertyClass::Unwinding), 0);
    assert!(vc::check(&c.ssa, &VcOptions::default()).unwrap().successful());
}

#[test]
fn recursion_is_bounded_by_k() {
    let mut cfg = RunConfig::new(fixture("factorial/main.py"));
    for (k, unwinding_fails) in [(1, true), (5, false)] {
        cfg.unwind = k;
        let c = compile(&cfg);
        let out = vc::check(&c.ssa, &VcOptions::default()).unwrap();
        let class = out.failures.first().map(|f| match &c.ssa.steps[f.step].kind {
            pybmc_core::symex::StepKind::Assert { class, .. } => *class,
            _ => unreachable!(),
        });
        assert_eq!(class == Some(PropertyClass::Unwinding), unwinding_fails, "k={k}");
    }
}

#[test]
fn render_lists_every_instruction() {
    let c = compile_unit(
        unit_of(&module(vec![ann("x", "int", int(1)), assert_(cmp(name("x"), "Eq", int(1)))])),
        &mem_config(1),
    );
    let text = c.goto.render();
    assert!(text.lines().count() > c.goto.instruction_count());
    assert!(text.contains("ASSERT"));
}

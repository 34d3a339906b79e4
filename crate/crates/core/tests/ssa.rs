mod common;

use std::collections::{HashMap, HashSet};

use common::gen;
use common::py::*;
use common::{compile, compile_unit, fixture, mem_config, suite, unit_of};
use pybmc_core::bv::BitVec;
use pybmc_core::goto::{run_concrete, ConcreteOutcome, IrType};
use pybmc_core::pipeline::RunConfig;
use pybmc_core::symex::{self, Ssa, StepKind, SymId, SymKind};
use pybmc_core::term::{Sort, Value};
use pybmc_core::vc;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn phis(ssa: &Ssa) -> usize {
    ssa.steps.iter().filter(|s| matches!(s.kind, StepKind::Phi { .. })).count()
}

fn last_value_of(ssa: &Ssa, values: &[Value], display: &str) -> Value {
    let sym = ssa
        .steps
        .iter()
        .filter_map(|s| match &s.kind {
            StepKind::Assign { lhs, .. } | StepKind::Phi { lhs, .. } => Some(*lhs),
            _ => None,
        })
        .filter(|l| ssa.symbol(*l).var.is_some_and(|v| ssa.vars.get(v).display == display))
        .last()
        .unwrap_or_else(|| panic!("{display} never assigned"));
    values[sym.0 as usize]
}

#[test]
fn factorial_trace_computes_factorial() {
    let mut cfg = RunConfig::new(fixture("factorial/main.py"));
    cfg.unwind = 5;
    let ssa = compile(&cfg).ssa;
    let inputs = ssa.inputs();
    assert_eq!(inputs.len(), 1);
    assert_eq!(ssa.name(inputs[0]), "n!0");
    let mut expected: i64 = 1;
    for n in 1..=5i64 {
        expected *= n;
        let model = HashMap::from([(inputs[0], Value::BV(BitVec::from_i64(32, n)))]);
        let values = vc::evaluate(&ssa, &model);
        assert_eq!(last_value_of(&ssa, &values, "result"), Value::BV(BitVec::from_i64(32, expected)), "n={n}");
    }
}

#[test]
fn straight_line_code_has_no_phi() {
    let ssa = compile_unit(
        unit_of(&module(vec![
            ann("x", "int", call("nondet_int", vec![])),
            ann("y", "int", bin(name("x"), "Add", int(1))),
            assign("y", bin(name("y"), "Mult", int(2))),
            assert_(cmp(name("y"), "NotEq", int(3))),
        ])),
        &mem_config(1),
    )
    .ssa;
    assert_eq!(phis(&ssa), 0);
    let names: Vec<String> = ssa
        .steps
        .iter()
        .filter_map(|s| match &s.kind {
            StepKind::Assign { lhs, .. } => Some(ssa.name(*lhs)),
            _ => None,
        })
        .collect();
    assert_eq!(names, ["y!0", "y!1"]);
}

#[test]
fn one_phi_per_join_of_a_diverging_variable() {
    for joins in 1..=4 {
        let mut body = vec![
            ann("x", "int", call("nondet_int", vec![])),
            ann("y", "int", int(0)),
        ];
        for j in 0..joins {
            body.push(if_(
                cmp(name("x"), "Gt", int(j)),
                vec![assign("y", bin(name("y"), "Add", int(1)))],
                vec![assign("y", bin(name("y"), "Sub", int(1)))],
            ));
        }
        body.push(assert_(cmp(name("y"), "LtE", int(joins))));
        let ssa = compile_unit(unit_of(&module(body)), &mem_config(1)).ssa;
        assert_eq!(phis(&ssa), joins as usize, "{joins} joins");
    }
}

fn symbols_in(t: &symex::STerm) -> Vec<SymId> {
    let mut out = Vec::new();
    t.visit_vars(&mut |s| out.push(*s));
    out
}

/// Every symbol is defined at most once and only read after its definition.
fn check_single_assignment(ssa: &Ssa, label: &str) {
    let mut defined: HashSet<SymId> = HashSet::new();
    let mut defined_anywhere = HashSet::new();
    for s in &ssa.steps {
        if let StepKind::Nondet { lhs } | StepKind::Assign { lhs, .. } | StepKind::Phi { lhs, .. } = &s.kind {
            assert!(defined_anywhere.insert(*lhs), "{label}: {} assigned twice", ssa.name(*lhs));
        }
    }
    let mut per_base: HashMap<String, Vec<u32>> = HashMap::new();
    for s in &ssa.steps {
        let mut reads = symbols_in(&s.guard);
        match &s.kind {
            StepKind::Assign { rhs, .. } | StepKind::Phi { rhs, .. } => reads.extend(symbols_in(rhs)),
            StepKind::Assume(c) | StepKind::Assert { cond: c, .. } => reads.extend(symbols_in(c)),
            StepKind::Nondet { .. } => {}
        }
        for r in reads {
            assert!(
                defined.contains(&r) || !defined_anywhere.contains(&r),
                "{label}: {} read before its definition",
                ssa.name(r)
            );
        }
        if let StepKind::Nondet { lhs } | StepKind::Assign { lhs, .. } | StepKind::Phi { lhs, .. } = &s.kind {
            defined.insert(*lhs);
            let name = ssa.name(*lhs);
            let (base, version) = name.rsplit_once('!').expect("versioned name");
            per_base.entry(base.to_string()).or_default().push(version.parse().unwrap());
        }
    }
    for (base, versions) in per_base {
        let mut sorted = versions.clone();
        sorted.sort_unstable();
        assert_eq!(versions, sorted, "{label}: versions of {base} out of order");
        sorted.dedup();
        assert_eq!(sorted.len(), versions.len(), "{label}: {base}");
    }
}

#[test]
fn suite_traces_are_in_ssa_form() {
    for t in suite() {
        let c = compile(&t.cfg);
        check_single_assignment(&c.ssa, &t.label);
        let raw = symex::symex(&c.unwound).unwrap();
        check_single_assignment(&raw, &t.label);
        assert!(c.ssa.inputs().iter().all(|s| c.ssa.symbol(*s).kind == SymKind::Input));
    }
}

#[test]
fn random_traces_are_in_ssa_form() {
    let mut rng = StdRng::seed_from_u64(7);
    for i in 0..100 {
        let p = gen::random_program(&mut rng);
        let c = compile_unit(unit_of(&gen::to_json(&p)), &mem_config(p.max_repeat().max(1)));
        check_single_assignment(&c.ssa, &format!("program {i}"));
    }
}

fn bv(sort: Sort, v: i32) -> Value {
    match sort {
        Sort::Bool => Value::Bool(v != 0),
        Sort::BV(w) => Value::BV(BitVec::from_i64(w, v as i64)),
        Sort::FP => unreachable!(),
    }
}

#[test]
fn simplification_preserves_values_and_verdicts() {
    let mut configs: Vec<(String, Ssa, Ssa)> = Vec::new();
    for t in suite() {
        let c = compile(&t.cfg);
        configs.push((t.label, symex::symex(&c.unwound).unwrap(), c.ssa));
    }
    let mut rng = StdRng::seed_from_u64(11);
    for i in 0..50 {
        let p = gen::random_program(&mut rng);
        let c = compile_unit(unit_of(&gen::to_json(&p)), &mem_config(p.max_repeat().max(1)));
        configs.push((format!("program {i}"), symex::symex(&c.unwound).unwrap(), c.ssa));
    }
    for (label, raw, simple) in configs {
        assert_eq!(raw.symbols, simple.symbols, "{label}");
        assert!(simple.steps.len() <= raw.steps.len(), "{label}");
        let inputs = raw.inputs();
        for probe in [-1, 0, 1, 5, 42] {
            let model: HashMap<SymId, Value> =
                inputs.iter().map(|s| (*s, bv(raw.symbol(*s).sort, probe))).collect();
            assert_eq!(vc::evaluate(&raw, &model), vc::evaluate(&simple, &model), "{label} at {probe}");
        }
        let a = vc::check(&raw, &vc::VcOptions::default()).unwrap();
        let b = vc::check(&simple, &vc::VcOptions::default()).unwrap();
        assert_eq!(a.successful(), b.successful(), "{label}");
    }
}

/// First violated assertion when the trace is replayed on concrete inputs,
/// or `None` when an assumption blocks or everything holds.
fn replay(ssa: &Ssa, model: &HashMap<SymId, Value>) -> Option<usize> {
    let values = vc::evaluate(ssa, model);
    let env = |s: &SymId| values[s.0 as usize];
    for (i, s) in ssa.steps.iter().enumerate() {
        if !s.guard.eval(&env).as_bool() {
            continue;
        }
        match &s.kind {
            StepKind::Assume(c) if !c.eval(&env).as_bool() => return None,
            StepKind::Assert { cond, .. } if !cond.eval(&env).as_bool() => return Some(i),
            _ => {}
        }
    }
    None
}

#[test]
fn guards_agree_with_concrete_execution() {
    let mut rng = StdRng::seed_from_u64(23);
    for i in 0..60 {
        let p = gen::random_program(&mut rng);
        let c = compile_unit(unit_of(&gen::to_json(&p)), &mem_config(p.max_repeat().max(1)));
        let inputs = c.ssa.inputs();
        assert_eq!(inputs.len(), p.inputs.len());
        for a in gen::assignments(&p).into_iter().step_by(3) {
            let model: HashMap<SymId, Value> =
                inputs.iter().zip(&a).map(|(s, v)| (*s, bv(c.ssa.symbol(*s).sort, *v))).collect();
            let mut queue = a.clone().into_iter();
            let mut feed = |t: IrType| bv(t.sort(), queue.next().expect("one value per input"));
            let concrete = run_concrete(&c.unwound, &mut feed, 100_000).unwrap();
            let symbolic = replay(&c.ssa, &model);
            match (&concrete, symbolic) {
                (ConcreteOutcome::Violation { loc, .. }, Some(j)) => {
                    assert_eq!(loc.line, c.ssa.steps[j].loc.line, "program {i} inputs {a:?}")
                }
                (ConcreteOutcome::Completed | ConcreteOutcome::Blocked, None) => {}
                _ => panic!("program {i} inputs {a:?}: concrete {concrete:?} vs symbolic {symbolic:?}"),
            }
            let reference = gen::run_reference(&p, &a) == gen::RefOutcome::Violation;
            assert_eq!(symbolic.is_some(), reference, "program {i} inputs {a:?}");
        }
    }
}

#[test]
fn render_shows_guards_and_sources() {
    let mut cfg = RunConfig::new(fixture("factorial/main.py"));
    cfg.unwind = 2;
    let ssa = compile(&cfg).ssa;
    let text = ssa.render();
    assert_eq!(text.lines().count(), ssa.steps.len());
    assert!(text.contains("n!0 := nondet"));
    assert!(text.lines().all(|l| l.contains("// main.py:")));
    assert!(ssa.assertion_count() >= 2);
}

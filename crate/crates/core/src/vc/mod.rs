//! Verification conditions `C ∧ ¬P` per assertion and their decision, either
//! by an external SMT solver or by exhaustive enumeration of small input
//! domains.

pub mod model;
mod oracle;
pub mod solver;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::symex::{Ssa, STerm, StepKind, SymId};
use crate::term::{fold, smt_symbol, Op, Sort, Term, Value};

pub use oracle::{oracle_check, ORACLE_DOMAIN_LIMIT};
use solver::{SatResult, SolverProcess};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VcError {
    #[error("solver error: {0}")]
    Solver(String),
    #[error("solver timed out")]
    Timeout,
    #[error("solver returned unknown")]
    Unknown,
    #[error("input domain of {size} assignments exceeds the oracle limit of {limit}")]
    DomainTooLarge { size: String, limit: u64 },
    #[error("the oracle cannot enumerate `{0}` of floating-point sort")]
    UnsupportedSortForOracle(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    /// Shell command of an SMT-LIB solver reading from standard input.
    Smt(String),
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcOptions {
    pub backend: Backend,
    pub timeout: Option<Duration>,
    /// Keep checking after the first violated assertion.
    pub multi_property: bool,
}

impl Default for VcOptions {
    fn default() -> Self {
        VcOptions {
            backend: Backend::Smt("z3 -in".into()),
            timeout: None,
            multi_property: false,
        }
    }
}

/// A violated assertion with values for every SSA symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    /// Index of the assertion step.
    pub step: usize,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VcOutcome {
    pub failures: Vec<Failure>,
    /// Assertions sent to the decision procedure.
    pub checked: usize,
    /// Assertions whose property simplified to true.
    pub trivial: usize,
    /// Commands sent to the external solver.
    pub transcript: Option<String>,
}

impl VcOutcome {
    pub fn successful(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Constraint contributed by step `i`, if any.
pub fn step_constraint(ssa: &Ssa, i: usize) -> Option<STerm> {
    let s = &ssa.steps[i];
    match &s.kind {
        StepKind::Assign { lhs, rhs } | StepKind::Phi { lhs, rhs } => {
            Some(Term::eq(Term::Var(*lhs), rhs.clone()))
        }
        StepKind::Assume(c) => {
            let t = fold(&Term::implies(s.guard.clone(), c.clone()));
            (!t.is_true()).then_some(t)
        }
        StepKind::Nondet { .. } | StepKind::Assert { .. } => None,
    }
}

/// `guard ⇒ cond` of an assertion step.
pub fn property(ssa: &Ssa, i: usize) -> Option<STerm> {
    let s = &ssa.steps[i];
    match &s.kind {
        StepKind::Assert { cond, .. } => Some(fold(&Term::implies(s.guard.clone(), cond.clone()))),
        _ => None,
    }
}

pub fn assertion_steps(ssa: &Ssa) -> Vec<usize> {
    (0..ssa.steps.len()).filter(|i| matches!(ssa.steps[*i].kind, StepKind::Assert { .. })).collect()
}

fn uses_fp(t: &STerm, sorts: &dyn Fn(SymId) -> Sort) -> bool {
    match t {
        Term::Const(v) => v.sort() == Sort::FP,
        Term::Var(s) => sorts(*s) == Sort::FP,
        Term::App(op, args) => {
            matches!(
                op,
                Op::FpAdd | Op::FpSub | Op::FpMul | Op::FpDiv | Op::FpNeg | Op::FpAbs | Op::FpLt | Op::FpLeq
                    | Op::FpEq | Op::SBvToFp | Op::UBvToFp | Op::FpToSBv(_)
            ) || args.iter().any(|a| uses_fp(a, sorts))
        }
    }
}

pub fn logic(ssa: &Ssa) -> &'static str {
    let sorts = |s: SymId| ssa.symbol(s).sort;
    let fp = ssa.symbols.iter().any(|s| s.sort == Sort::FP)
        || ssa.steps.iter().any(|s| match &s.kind {
            StepKind::Assign { rhs, .. } | StepKind::Phi { rhs, .. } => uses_fp(rhs, &sorts),
            StepKind::Assume(c) | StepKind::Assert { cond: c, .. } => uses_fp(c, &sorts),
            StepKind::Nondet { .. } => false,
        });
    if fp {
        "QF_BVFP"
    } else {
        "QF_BV"
    }
}

fn sym_name(ssa: &Ssa) -> impl Fn(&SymId) -> String + '_ {
    move |s| smt_symbol(&ssa.symbol(*s).name)
}

fn preamble(ssa: &Ssa) -> Vec<String> {
    let name = sym_name(ssa);
    let mut out = vec![
        "(set-option :produce-models true)".to_string(),
        format!("(set-logic {})", logic(ssa)),
    ];
    for i in 0..ssa.symbols.len() {
        let s = SymId(i as u32);
        out.push(format!("(declare-const {} {})", name(&s), ssa.symbol(s).sort));
    }
    out
}

/// Stand-alone SMT-LIB script for assertion step `j`.
pub fn smt_script(ssa: &Ssa, j: usize) -> String {
    let name = sym_name(ssa);
    let mut out = preamble(ssa).join("\n");
    out.push('\n');
    for i in 0..j {
        if let Some(c) = step_constraint(ssa, i) {
            let _ = writeln!(out, "(assert {})", c.to_smt(&name));
        }
    }
    if let Some(p) = property(ssa, j) {
        let _ = writeln!(out, "(assert (not {}))", p.to_smt(&name));
    }
    out.push_str("(check-sat)\n");
    let inputs: Vec<String> = ssa.inputs().iter().map(&name).collect();
    if !inputs.is_empty() {
        let _ = writeln!(out, "(get-value ({}))", inputs.join(" "));
    }
    out
}

/// Values of all symbols given the inputs; missing inputs are zero.
pub fn evaluate(ssa: &Ssa, inputs: &HashMap<SymId, Value>) -> Vec<Value> {
    let mut env: Vec<Value> = ssa
        .symbols
        .iter()
        .enumerate()
        .map(|(i, s)| inputs.get(&SymId(i as u32)).copied().unwrap_or_else(|| zero(s.sort)))
        .collect();
    for st in &ssa.steps {
        if let StepKind::Assign { lhs, rhs } | StepKind::Phi { lhs, rhs } = &st.kind {
            let v = rhs.eval(&|s: &SymId| env[s.0 as usize]);
            env[lhs.0 as usize] = v;
        }
    }
    env
}

pub(crate) enum StepResult {
    Continue,
    /// An assumption failed; later steps are irrelevant.
    Blocked,
    Violated,
}

/// Executes step `i` on concrete symbol values.
pub(crate) fn evaluate_step(ssa: &Ssa, i: usize, env: &mut [Value]) -> StepResult {
    let st = &ssa.steps[i];
    let get = |e: &[Value], t: &STerm| t.eval(&|s: &SymId| e[s.0 as usize]);
    match &st.kind {
        StepKind::Nondet { .. } => StepResult::Continue,
        StepKind::Assign { lhs, rhs } | StepKind::Phi { lhs, rhs } => {
            env[lhs.0 as usize] = get(env, rhs);
            StepResult::Continue
        }
        StepKind::Assume(c) => {
            if get(env, &st.guard).as_bool() && !get(env, c).as_bool() {
                StepResult::Blocked
            } else {
                StepResult::Continue
            }
        }
        StepKind::Assert { cond, .. } => {
            if get(env, &st.guard).as_bool() && !get(env, cond).as_bool() {
                StepResult::Violated
            } else {
                StepResult::Continue
            }
        }
    }
}

pub fn zero(s: Sort) -> Value {
    match s {
        Sort::Bool => Value::Bool(false),
        Sort::BV(w) => Value::BV(crate::bv::BitVec::zero(w)),
        Sort::FP => Value::FP(0.0),
    }
}

/// Decides every assertion of the trace.
pub fn check(ssa: &Ssa, opts: &VcOptions) -> Result<VcOutcome, VcError> {
    match &opts.backend {
        Backend::Oracle => oracle_check(ssa, opts.multi_property),
        Backend::Smt(cmd) => smt_check(ssa, cmd, opts),
    }
}

fn smt_check(ssa: &Ssa, cmd: &str, opts: &VcOptions) -> Result<VcOutcome, VcError> {
    let mut out = VcOutcome::default();
    let props: Vec<(usize, STerm)> = assertion_steps(ssa)
        .into_iter()
        .filter_map(|j| property(ssa, j).map(|p| (j, p)))
        .collect();
    let live: Vec<&(usize, STerm)> = props.iter().filter(|(_, p)| !p.is_true()).collect();
    out.trivial = props.len() - live.len();
    if live.is_empty() {
        return Ok(out);
    }
    let deadline = opts.timeout.map(|t| Instant::now() + t);
    let mut s = SolverProcess::spawn(cmd, deadline)?;
    for c in preamble(ssa) {
        s.send(&c)?;
    }
    let name = sym_name(ssa);
    let inputs = ssa.inputs();
    let input_names: Vec<String> = inputs.iter().map(&name).collect();
    let mut asserted = 0;
    for (j, p) in live {
        for i in asserted..*j {
            if let Some(c) = step_constraint(ssa, i) {
                s.send(&format!("(assert {})", c.to_smt(&name)))?;
            }
        }
        asserted = *j;
        s.send("(push 1)")?;
        s.send(&format!("(assert (not {}))", p.to_smt(&name)))?;
        out.checked += 1;
        match s.check_sat()? {
            SatResult::Unsat => {}
            SatResult::Unknown => return Err(VcError::Unknown),
            SatResult::Sat => {
                let vals = s.get_value(&input_names)?;
                let mut model = HashMap::new();
                for (sym, v) in inputs.iter().zip(&vals) {
                    let val = model::parse_value(v, ssa.symbol(*sym).sort).map_err(VcError::Solver)?;
                    model.insert(*sym, val);
                }
                out.failures.push(Failure {
                    step: *j,
                    values: evaluate(ssa, &model),
                });
                if !opts.multi_property {
                    s.send("(pop 1)")?;
                    break;
                }
            }
        }
        s.send("(pop 1)")?;
    }
    out.transcript = Some(std::mem::take(&mut s.transcript));
    Ok(out)
}

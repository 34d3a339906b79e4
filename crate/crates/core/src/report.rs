//! Counterexample reconstruction and the textual / JSON verification report.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::goto::{render_value, IrType, PropertyClass, Visibility};
use crate::symex::{Ssa, StepKind, SymId};
use crate::term::Value;
use crate::vc::Failure;

pub const SEPARATOR: &str = "-------------------------------------------";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("model has no value for input `{0}`")]
    IncompleteModel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub name: String,
    pub value: String,
    /// Bit pattern grouped in bytes, most significant first.
    pub binary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleState {
    pub ordinal: usize,
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub thread: u32,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolatedProperty {
    pub ordinal: usize,
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub property_class: PropertyClass,
    pub description: String,
    pub expression: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    FrontEnd,
    Solver,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Successful,
    Failed {
        violated: ViolatedProperty,
        states: Vec<CounterexampleState>,
        /// Further violations found in multi-property mode.
        #[serde(skip_serializing_if = "Vec::is_empty")]
        additional: Vec<ViolatedProperty>,
    },
    Error {
        kind: ErrorKind,
        diagnostic: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Statistics {
    pub unwind: u32,
    pub goto_instructions: usize,
    pub ssa_steps: usize,
    pub assertions: usize,
    pub vccs_checked: usize,
    pub vccs_trivial: usize,
    pub logic: String,
    pub solver: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationResult {
    pub file: String,
    pub outcome: Outcome,
    pub timings: Vec<StageTiming>,
    pub stats: Statistics,
}

impl VerificationResult {
    pub fn exit_code(&self) -> i32 {
        match &self.outcome {
            Outcome::Successful => 0,
            Outcome::Failed { .. } => 1,
            Outcome::Error { kind: ErrorKind::FrontEnd, .. } => 2,
            Outcome::Error { kind: ErrorKind::Solver, .. } => 3,
        }
    }

    pub fn timing(&self, stage: &str) -> Option<f64> {
        self.timings.iter().find(|t| t.stage == stage).map(|t| t.seconds)
    }
}

fn binary_of(v: &Value) -> String {
    match v {
        Value::Bool(b) => if *b { "1" } else { "0" }.to_string(),
        Value::BV(b) => b.grouped_binary(),
        Value::FP(f) => crate::bv::BitVec::from_u64(64, f.to_bits()).grouped_binary(),
    }
}

fn file_of(module: &str) -> String {
    format!("{module}.py")
}

fn violated(ssa: &Ssa, step: usize, ordinal: usize) -> ViolatedProperty {
    let st = &ssa.steps[step];
    let StepKind::Assert { class, message, .. } = &st.kind else {
        unreachable!("failure at a non-assertion step")
    };
    ViolatedProperty {
        ordinal,
        file: file_of(&st.module),
        line: st.loc.line,
        column: st.loc.column,
        property_class: *class,
        description: class.description().to_string(),
        expression: message.clone(),
    }
}

/// Replays the trace under a failure's values. Every guard-true assume,
/// assertion and visible assignment to a program variable takes an ordinal;
/// only shown assignments become states.
pub fn build_trace(
    ssa: &Ssa,
    failure: &Failure,
) -> Result<(Vec<CounterexampleState>, ViolatedProperty), ReportError> {
    if failure.values.len() != ssa.symbols.len() {
        let missing = ssa
            .inputs()
            .into_iter()
            .find(|s| s.0 as usize >= failure.values.len())
            .map(|s| ssa.name(s))
            .unwrap_or_default();
        return Err(ReportError::IncompleteModel(missing));
    }
    let env = |s: &SymId| failure.values[s.0 as usize];
    let mut states = Vec::new();
    let mut ordinal = 0;
    for (i, st) in ssa.steps.iter().enumerate().take(failure.step + 1) {
        if !st.guard.eval(&env).as_bool() {
            continue;
        }
        let lhs = match &st.kind {
            StepKind::Nondet { lhs } | StepKind::Assign { lhs, .. } | StepKind::Phi { lhs, .. } => Some(*lhs),
            StepKind::Assume(_) | StepKind::Assert { .. } => None,
        };
        let Some(lhs) = lhs else {
            ordinal += 1;
            if i == failure.step {
                return Ok((states, violated(ssa, i, ordinal)));
            }
            continue;
        };
        let Some(var) = ssa.symbol(lhs).var else { continue };
        let info = ssa.vars.get(var);
        if st.vis == Visibility::Hidden || info.is_synthetic() {
            continue;
        }
        ordinal += 1;
        if st.vis != Visibility::Shown {
            continue;
        }
        let v = env(&lhs);
        states.push(CounterexampleState {
            ordinal,
            file: file_of(&st.module),
            line: st.loc.line,
            column: st.loc.column,
            thread: 0,
            assignment: Assignment {
                name: info.display.clone(),
                value: render_value(&v, info.ty),
                binary: binary_of(&v),
            },
        });
    }
    unreachable!("failure step lies beyond the trace")
}

/// Ordinal-free description of a further violated assertion.
pub fn describe_violation(ssa: &Ssa, step: usize) -> ViolatedProperty {
    violated(ssa, step, 0)
}

pub fn banner() -> String {
    format!(
        "pybmc version {} {}-bit {} {}",
        env!("CARGO_PKG_VERSION"),
        usize::BITS,
        std::env::consts::ARCH,
        std::env::consts::OS
    )
}

fn seconds(r: &VerificationResult, stage: &str) -> String {
    format!("{:.3}s", r.timing(stage).unwrap_or(0.0))
}

fn render_violation(out: &mut String, v: &ViolatedProperty) {
    let _ = writeln!(out, "Violated property:");
    let _ = writeln!(out, "  file {} line {} column {}", v.file, v.line, v.column);
    let _ = writeln!(out, "  {}", v.description);
    let _ = writeln!(out, "  {}", v.expression);
    let _ = writeln!(out, "  ");
}

/// Human-readable report ending in the verdict line.
pub fn render_text(r: &VerificationResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", banner());
    let _ = writeln!(out, "Parsing {}", r.file);
    if r.timing("convert").is_some() {
        let _ = writeln!(out, "Converting");
    }
    if r.timing("goto").is_some() {
        let _ = writeln!(out, "Generating GOTO Program");
        let _ = writeln!(out, "GOTO program creation time: {}", seconds(r, "goto"));
    }
    if r.timing("unwind").is_some() {
        let _ = writeln!(out, "Starting Bounded Model Checking");
        let _ = writeln!(out, "Unwinding loops and recursion with k = {}", r.stats.unwind);
    }
    if r.timing("symex").is_some() {
        let _ = writeln!(
            out,
            "Symex completed in: {} ({} steps)",
            seconds(r, "symex"),
            r.stats.ssa_steps
        );
    }
    if r.timing("solve").is_some() {
        let _ = writeln!(
            out,
            "Generated {} VCC(s), {} remaining after simplification",
            r.stats.assertions,
            r.stats.assertions - r.stats.vccs_trivial
        );
        if r.stats.assertions > r.stats.vccs_trivial {
            let _ = writeln!(out, "Encoding remaining VCC(s) using {}", r.stats.logic);
            let _ = writeln!(out, "Solving with {}", r.stats.solver);
            let _ = writeln!(out, "Runtime decision procedure: {}", seconds(r, "solve"));
        }
    }
    match &r.outcome {
        Outcome::Successful => {
            let _ = writeln!(out, "\nVERIFICATION SUCCESSFUL");
        }
        Outcome::Failed {
            violated,
            states,
            additional,
        } => {
            let _ = writeln!(out, "Building error trace");
            let _ = writeln!(out, "[Counterexample]");
            for s in states {
                let _ = writeln!(
                    out,
                    "State {} file {} line {} column {} thread {}",
                    s.ordinal, s.file, s.line, s.column, s.thread
                );
                let _ = writeln!(out, "{SEPARATOR}");
                let a = &s.assignment;
                let _ = writeln!(out, "{} = {} ({})\n", a.name, a.value, a.binary);
            }
            let _ = writeln!(out, "State {}  thread 0", violated.ordinal);
            let _ = writeln!(out, "{SEPARATOR}");
            render_violation(&mut out, violated);
            for v in additional {
                render_violation(&mut out, v);
            }
            let _ = writeln!(out, "VERIFICATION FAILED");
        }
        Outcome::Error { diagnostic, .. } => {
            let _ = writeln!(out, "ERROR: {diagnostic}");
            let _ = writeln!(out, "\nVERIFICATION ERROR");
        }
    }
    out
}

pub fn render_json(r: &VerificationResult) -> String {
    serde_json::to_string_pretty(r).expect("result serializes")
}

/// Reads a grouped pattern back as a number of the given type.
pub fn parse_binary(pattern: &str, ty: IrType) -> Option<String> {
    let digits: String = pattern.chars().filter(|c| !c.is_whitespace()).collect();
    if digits.is_empty() || digits.len() as u32 != ty.width() {
        return None;
    }
    let bits = num_bigint::BigUint::parse_bytes(digits.as_bytes(), 2)?;
    let v = match ty {
        IrType::Bool => Value::Bool(bits == 1u8.into()),
        IrType::Int(t) => Value::BV(crate::bv::BitVec::from_bigint(t.width, &bits.into())),
        IrType::Float => Value::FP(f64::from_bits(u64::try_from(bits).ok()?)),
    };
    Some(render_value(&v, ty))
}

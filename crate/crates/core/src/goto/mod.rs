//! GOTO programs: a flat instruction list per function with guarded jumps,
//! plus the passes that lower, instrument and unwind them.

mod instrument;
mod interp;
mod lower;
mod unwind;

use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::ast::Location;
use crate::bv::BitVec;
use crate::term::{Sort, Value};
use crate::types::{IntType, VerifierType};

pub use instrument::{instrument_properties, CheckOptions};
pub use interp::{run_concrete, ConcreteOutcome, InterpError};
pub use lower::{lower_to_goto, LowerError};
pub use unwind::{back_edges, is_acyclic, unwind, UnwindOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum IrType {
    Bool,
    Int(IntType),
    Float,
}

impl IrType {
    pub fn from_verifier(t: &VerifierType) -> Option<IrType> {
        match t {
            VerifierType::Bool => Some(IrType::Bool),
            VerifierType::Int(i) => Some(IrType::Int(*i)),
            VerifierType::Float => Some(IrType::Float),
            _ => None,
        }
    }

    pub fn sort(self) -> Sort {
        match self {
            IrType::Bool => Sort::Bool,
            IrType::Int(t) => Sort::BV(t.width),
            IrType::Float => Sort::FP,
        }
    }

    pub fn width(self) -> u32 {
        match self {
            IrType::Bool => 1,
            IrType::Int(t) => t.width,
            IrType::Float => 64,
        }
    }

    pub fn is_signed_int(self) -> bool {
        matches!(self, IrType::Int(t) if t.signed)
    }

    pub fn zero(self) -> Value {
        match self {
            IrType::Bool => Value::Bool(false),
            IrType::Int(t) => Value::BV(BitVec::zero(t.width)),
            IrType::Float => Value::FP(0.0),
        }
    }
}

impl fmt::Display for IrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrType::Bool => f.write_str("bool"),
            IrType::Int(t) if t.signed => write!(f, "int{}", t.width),
            IrType::Int(t) => write!(f, "uint{}", t.width),
            IrType::Float => f.write_str("float"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarRole {
    Global,
    Local,
    Param,
    Return,
    Temp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarInfo {
    /// Unique base name used for SSA symbols.
    pub name: String,
    /// Source-level spelling used in traces (`n`, `p.x`, `a[2]`).
    pub display: String,
    pub ty: IrType,
    pub role: VarRole,
    /// Function specialization owning the variable; `None` for globals.
    pub owner: Option<String>,
}

impl VarInfo {
    /// Synthetic variables never appear in counterexamples.
    pub fn is_synthetic(&self) -> bool {
        matches!(self.role, VarRole::Temp | VarRole::Return) || self.display.starts_with('$')
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VarTable {
    vars: Vec<VarInfo>,
}

impl VarTable {
    pub fn add(&mut self, info: VarInfo) -> VarId {
        self.vars.push(info);
        VarId(self.vars.len() as u32 - 1)
    }

    pub fn get(&self, v: VarId) -> &VarInfo {
        &self.vars[v.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &VarInfo)> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, v)| (VarId(i as u32), v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum IrUnOp {
    Not,
    Neg,
    BitNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum IrBinOp {
    Add,
    Sub,
    Mul,
    /// Float division.
    Div,
    FloorDiv,
    Mod,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl IrBinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            IrBinOp::Add => "+",
            IrBinOp::Sub => "-",
            IrBinOp::Mul => "*",
            IrBinOp::Div => "/",
            IrBinOp::FloorDiv => "//",
            IrBinOp::Mod => "%",
            IrBinOp::Shl => "<<",
            IrBinOp::Shr => ">>",
            IrBinOp::BitAnd => "&",
            IrBinOp::BitOr => "|",
            IrBinOp::BitXor => "^",
            IrBinOp::Eq => "==",
            IrBinOp::Ne => "!=",
            IrBinOp::Lt => "<",
            IrBinOp::Le => "<=",
            IrBinOp::Gt => ">",
            IrBinOp::Ge => ">=",
            IrBinOp::And => "and",
            IrBinOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            IrBinOp::Eq | IrBinOp::Ne | IrBinOp::Lt | IrBinOp::Le | IrBinOp::Gt | IrBinOp::Ge
        )
    }
}

/// Typed, side-effect free expression.
#[derive(Debug, Clone, PartialEq)]
pub enum IrExpr {
    Const(Value, IrType),
    Var(VarId, IrType),
    Un(IrUnOp, Box<IrExpr>),
    Bin(IrBinOp, Box<IrExpr>, Box<IrExpr>),
    Ite(Box<IrExpr>, Box<IrExpr>, Box<IrExpr>),
    Cast(IrType, Box<IrExpr>),
    /// Read of a list element selected at run time.
    Index {
        elems: Vec<VarId>,
        index: Box<IrExpr>,
        ty: IrType,
    },
    /// A fresh unconstrained value.
    Nondet(IrType),
}

impl IrExpr {
    pub fn bool(b: bool) -> IrExpr {
        IrExpr::Const(Value::Bool(b), IrType::Bool)
    }

    pub fn int(v: i64, t: IntType) -> IrExpr {
        IrExpr::Const(Value::BV(BitVec::from_i64(t.width, v)), IrType::Int(t))
    }

    pub fn bin(op: IrBinOp, a: IrExpr, b: IrExpr) -> IrExpr {
        IrExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn not(a: IrExpr) -> IrExpr {
        match a {
            IrExpr::Const(Value::Bool(b), _) => IrExpr::bool(!b),
            IrExpr::Un(IrUnOp::Not, inner) => *inner,
            a => IrExpr::Un(IrUnOp::Not, Box::new(a)),
        }
    }

    pub fn ite(c: IrExpr, a: IrExpr, b: IrExpr) -> IrExpr {
        IrExpr::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn ty(&self) -> IrType {
        match self {
            IrExpr::Const(_, t) | IrExpr::Var(_, t) | IrExpr::Nondet(t) => *t,
            IrExpr::Index { ty, .. } => *ty,
            IrExpr::Cast(t, _) => *t,
            IrExpr::Un(IrUnOp::Not, _) => IrType::Bool,
            IrExpr::Un(_, a) => a.ty(),
            IrExpr::Bin(op, a, _) => {
                if op.is_comparison() || matches!(op, IrBinOp::And | IrBinOp::Or) {
                    IrType::Bool
                } else {
                    a.ty()
                }
            }
            IrExpr::Ite(_, a, _) => a.ty(),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, IrExpr::Const(..) | IrExpr::Var(..))
    }

    pub fn as_bool_const(&self) -> Option<bool> {
        match self {
            IrExpr::Const(Value::Bool(b), _) => Some(*b),
            _ => None,
        }
    }

    /// Pre-order visit of sub-expressions.
    pub fn visit(&self, f: &mut dyn FnMut(&IrExpr)) {
        f(self);
        match self {
            IrExpr::Const(..) | IrExpr::Var(..) | IrExpr::Nondet(_) => {}
            IrExpr::Un(_, a) | IrExpr::Cast(_, a) => a.visit(f),
            IrExpr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            IrExpr::Ite(c, a, b) => {
                c.visit(f);
                a.visit(f);
                b.visit(f);
            }
            IrExpr::Index { index, .. } => index.visit(f),
        }
    }

    /// Every variable read, including list elements reachable by an index.
    pub fn vars(&self, out: &mut Vec<VarId>) {
        self.visit(&mut |e| match e {
            IrExpr::Var(v, _) => out.push(*v),
            IrExpr::Index { elems, .. } => out.extend(elems.iter().copied()),
            _ => {}
        });
    }

    pub fn map_vars(&self, f: &dyn Fn(VarId) -> VarId) -> IrExpr {
        match self {
            IrExpr::Const(..) | IrExpr::Nondet(_) => self.clone(),
            IrExpr::Var(v, t) => IrExpr::Var(f(*v), *t),
            IrExpr::Un(op, a) => IrExpr::Un(*op, Box::new(a.map_vars(f))),
            IrExpr::Cast(t, a) => IrExpr::Cast(*t, Box::new(a.map_vars(f))),
            IrExpr::Bin(op, a, b) => {
                IrExpr::Bin(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            IrExpr::Ite(c, a, b) => IrExpr::Ite(
                Box::new(c.map_vars(f)),
                Box::new(a.map_vars(f)),
                Box::new(b.map_vars(f)),
            ),
            IrExpr::Index { elems, index, ty } => IrExpr::Index {
                elems: elems.iter().map(|v| f(*v)).collect(),
                index: Box::new(index.map_vars(f)),
                ty: *ty,
            },
        }
    }

    /// Count of `//` and `%` nodes.
    pub fn division_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if let IrExpr::Bin(IrBinOp::FloorDiv | IrBinOp::Mod, ..) = e {
                n += 1;
            }
        });
        n
    }

    pub fn render(&self, vars: &VarTable) -> String {
        let mut s = String::new();
        self.write(&mut s, vars, 0);
        s
    }

    fn write(&self, out: &mut String, vars: &VarTable, parent: u8) {
        let prec = self.precedence();
        let paren = prec < parent;
        if paren {
            out.push('(');
        }
        match self {
            IrExpr::Const(v, t) => out.push_str(&render_value(v, *t)),
            IrExpr::Var(v, _) => out.push_str(&vars.get(*v).display),
            IrExpr::Nondet(t) => {
                let _ = write!(out, "nondet_{t}()");
            }
            IrExpr::Un(op, a) => {
                out.push_str(match op {
                    IrUnOp::Not => "not ",
                    IrUnOp::Neg => "-",
                    IrUnOp::BitNot => "~",
                });
                a.write(out, vars, prec + 1);
            }
            IrExpr::Cast(t, a) => {
                let _ = write!(out, "{t}(");
                a.write(out, vars, 0);
                out.push(')');
            }
            IrExpr::Bin(op, a, b) => {
                a.write(out, vars, prec);
                let _ = write!(out, " {} ", op.symbol());
                b.write(out, vars, prec + 1);
            }
            IrExpr::Ite(c, a, b) => {
                a.write(out, vars, prec + 1);
                out.push_str(" if ");
                c.write(out, vars, prec + 1);
                out.push_str(" else ");
                b.write(out, vars, prec);
            }
            IrExpr::Index { elems, index, .. } => {
                let base = elems
                    .first()
                    .map(|v| {
                        let d = &vars.get(*v).display;
                        d.rsplit_once('[').map_or(d.as_str(), |(b, _)| b).to_string()
                    })
                    .unwrap_or_else(|| "[]".into());
                out.push_str(&base);
                out.push('[');
                index.write(out, vars, 0);
                out.push(']');
            }
        }
        if paren {
            out.push(')');
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            IrExpr::Ite(..) => 1,
            IrExpr::Bin(op, ..) => match op {
                IrBinOp::Or => 2,
                IrBinOp::And => 3,
                IrBinOp::Eq | IrBinOp::Ne | IrBinOp::Lt | IrBinOp::Le | IrBinOp::Gt | IrBinOp::Ge => 5,
                IrBinOp::BitOr => 6,
                IrBinOp::BitXor => 7,
                IrBinOp::BitAnd => 8,
                IrBinOp::Shl | IrBinOp::Shr => 9,
                IrBinOp::Add | IrBinOp::Sub => 10,
                _ => 11,
            },
            IrExpr::Un(IrUnOp::Not, _) => 4,
            IrExpr::Un(..) => 12,
            _ => 14,
        }
    }
}

/// Source-style rendering of a concrete value of type `t`.
pub fn render_value(v: &Value, t: IrType) -> String {
    match (v, t) {
        (Value::Bool(b), _) => if *b { "True" } else { "False" }.to_string(),
        (Value::BV(b), IrType::Int(it)) if it.signed => b.to_signed().to_string(),
        (Value::BV(b), _) => b.to_unsigned().to_string(),
        (Value::FP(f), _) => crate::ast::format_float(*f),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyClass {
    UserAssertion,
    DivisionByZero,
    Overflow,
    Bounds,
    Unwinding,
}

impl PropertyClass {
    pub fn id(self) -> &'static str {
        match self {
            PropertyClass::UserAssertion => "user-assertion",
            PropertyClass::DivisionByZero => "division-by-zero",
            PropertyClass::Overflow => "overflow",
            PropertyClass::Bounds => "bounds",
            PropertyClass::Unwinding => "unwinding",
        }
    }

    /// Wording used in the violated-property block.
    pub fn description(self) -> &'static str {
        match self {
            PropertyClass::UserAssertion => "assertion",
            PropertyClass::DivisionByZero => "division by zero",
            PropertyClass::Overflow => "arithmetic overflow",
            PropertyClass::Bounds => "array bounds violated",
            PropertyClass::Unwinding => "unwinding assertion",
        }
    }
}

/// How an assignment shows up in counterexamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Visibility {
    /// Printed as a state.
    Shown,
    /// Numbered but not printed.
    Counted,
    /// Neither.
    Hidden,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CallArg {
    Value(IrExpr),
    /// Caller variables bound to a by-reference list or object parameter.
    Ref(Vec<VarId>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    Decl(VarId),
    Assign {
        lhs: VarId,
        rhs: IrExpr,
        vis: Visibility,
    },
    /// `elems[index] = value` for an index known only at run time.
    Store {
        elems: Vec<VarId>,
        index: IrExpr,
        value: IrExpr,
    },
    Assume(IrExpr),
    Assert {
        cond: IrExpr,
        class: PropertyClass,
        message: String,
    },
    Goto {
        target: usize,
        /// `None` jumps unconditionally.
        guard: Option<IrExpr>,
        /// Marks the jump leaving a loop when its condition fails.
        loop_exit: bool,
    },
    Call {
        lhs: Option<(VarId, Visibility)>,
        callee: String,
        args: Vec<CallArg>,
    },
    Skip,
    End,
}

impl Instr {
    /// Expressions evaluated by this instruction, in evaluation order.
    pub fn exprs(&self) -> Vec<&IrExpr> {
        match self {
            Instr::Assign { rhs, .. } => vec![rhs],
            Instr::Store { index, value, .. } => vec![index, value],
            Instr::Assume(e) | Instr::Assert { cond: e, .. } => vec![e],
            Instr::Goto { guard: Some(g), .. } => vec![g],
            Instr::Call { args, .. } => args
                .iter()
                .filter_map(|a| match a {
                    CallArg::Value(e) => Some(e),
                    CallArg::Ref(_) => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn map_vars(&self, f: &dyn Fn(VarId) -> VarId) -> Instr {
        match self {
            Instr::Decl(v) => Instr::Decl(f(*v)),
            Instr::Assign { lhs, rhs, vis } => Instr::Assign {
                lhs: f(*lhs),
                rhs: rhs.map_vars(f),
                vis: *vis,
            },
            Instr::Store {
                elems,
                index,
                value,
            } => Instr::Store {
                elems: elems.iter().map(|v| f(*v)).collect(),
                index: index.map_vars(f),
                value: value.map_vars(f),
            },
            Instr::Assume(e) => Instr::Assume(e.map_vars(f)),
            Instr::Assert {
                cond,
                class,
                message,
            } => Instr::Assert {
                cond: cond.map_vars(f),
                class: *class,
                message: message.clone(),
            },
            Instr::Goto {
                target,
                guard,
                loop_exit,
            } => Instr::Goto {
                target: *target,
                guard: guard.as_ref().map(|g| g.map_vars(f)),
                loop_exit: *loop_exit,
            },
            Instr::Call { lhs, callee, args } => Instr::Call {
                lhs: lhs.map(|(v, vis)| (f(v), vis)),
                callee: callee.clone(),
                args: args
                    .iter()
                    .map(|a| match a {
                        CallArg::Value(e) => CallArg::Value(e.map_vars(f)),
                        CallArg::Ref(vs) => CallArg::Ref(vs.iter().map(|v| f(*v)).collect()),
                    })
                    .collect(),
            },
            Instr::Skip => Instr::Skip,
            Instr::End => Instr::End,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub kind: Instr,
    pub loc: Location,
    /// Module the instruction came from.
    pub module: String,
}

impl Instruction {
    pub fn new(kind: Instr, loc: Location, module: &str) -> Self {
        Instruction {
            kind,
            loc,
            module: module.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSlot {
    Scalar(VarId),
    Ref(Vec<VarId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GotoFunction {
    /// Specialization key, e.g. `main@f` or `main@f<3>`.
    pub key: String,
    /// Name used in variable instances (`factorial`, `Point.norm`).
    pub display: String,
    pub params: Vec<ParamSlot>,
    pub ret: Option<VarId>,
    pub body: Vec<Instruction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GotoProgram {
    pub vars: VarTable,
    pub functions: IndexMap<String, GotoFunction>,
    pub entry: String,
    pub unwound: Option<u32>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GotoError {
    #[error("jump target {target} out of range in `{function}` at {index}")]
    BadTarget {
        function: String,
        index: usize,
        target: usize,
    },
    #[error("call to unknown function `{0}`")]
    UnknownCallee(String),
}

impl GotoProgram {
    pub fn entry_function(&self) -> &GotoFunction {
        &self.functions[&self.entry]
    }

    /// Checks that every jump lands inside its function.
    pub fn validate(&self) -> Result<(), GotoError> {
        for f in self.functions.values() {
            for (i, ins) in f.body.iter().enumerate() {
                match &ins.kind {
                    Instr::Goto { target, .. } if *target >= f.body.len() => {
                        return Err(GotoError::BadTarget {
                            function: f.key.clone(),
                            index: i,
                            target: *target,
                        })
                    }
                    Instr::Call { callee, .. } if !self.functions.contains_key(callee) => {
                        return Err(GotoError::UnknownCallee(callee.clone()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn count_asserts(&self, class: PropertyClass) -> usize {
        self.functions
            .values()
            .flat_map(|f| &f.body)
            .filter(|i| matches!(&i.kind, Instr::Assert { class: c, .. } if *c == class))
            .count()
    }

    pub fn instruction_count(&self) -> usize {
        self.functions.values().map(|f| f.body.len()).sum()
    }

    /// Listing used by `--show-goto`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in self.functions.values() {
            let _ = writeln!(out, "{}:", f.key);
            for (i, ins) in f.body.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{i:>4}: {}  // {}.py:{}",
                    self.render_instr(&ins.kind),
                    ins.module,
                    ins.loc.line
                );
            }
            out.push('\n');
        }
        out
    }

    pub fn render_instr(&self, ins: &Instr) -> String {
        let v = &self.vars;
        let name = |x: VarId| v.get(x).name.clone();
        match ins {
            Instr::Decl(x) => format!("DECL {} : {}", name(*x), v.get(*x).ty),
            Instr::Assign { lhs, rhs, .. } => format!("ASSIGN {} := {}", name(*lhs), rhs.render(v)),
            Instr::Store {
                elems,
                index,
                value,
            } => {
                let probe = IrExpr::Index {
                    elems: elems.clone(),
                    index: Box::new(index.clone()),
                    ty: value.ty(),
                };
                format!("ASSIGN {} := {}", probe.render(v), value.render(v))
            }
            Instr::Assume(e) => format!("ASSUME {}", e.render(v)),
            Instr::Assert { cond, class, .. } => {
                format!("ASSERT {} [{}]", cond.render(v), class.id())
            }
            Instr::Goto {
                target,
                guard: None,
                ..
            } => format!("GOTO {target}"),
            Instr::Goto {
                target,
                guard: Some(g),
                ..
            } => format!("IF {} GOTO {target}", g.render(v)),
            Instr::Call { lhs, callee, args } => {
                let args: Vec<String> = args
                    .iter()
                    .map(|a| match a {
                        CallArg::Value(e) => e.render(v),
                        CallArg::Ref(vs) => {
                            let names: Vec<String> = vs.iter().map(|x| name(*x)).collect();
                            format!("&[{}]", names.join(", "))
                        }
                    })
                    .collect();
                match lhs {
                    Some((x, _)) => format!("CALL {} := {callee}({})", name(*x), args.join(", ")),
                    None => format!("CALL {callee}({})", args.join(", ")),
                }
            }
            Instr::Skip => "SKIP".into(),
            Instr::End => "END".into(),
        }
    }
}

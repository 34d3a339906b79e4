//! Concrete execution of GOTO programs, used to cross-check the symbolic
//! encoding on fixed inputs.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_traits::ToPrimitive;
use thiserror::Error;

use super::{CallArg, GotoProgram, Instr, IrBinOp, IrExpr, IrType, IrUnOp, ParamSlot, PropertyClass, VarId};
use crate::ast::Location;
use crate::bv::BitVec;
use crate::term::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum ConcreteOutcome {
    /// Ran to the end without violating anything.
    Completed,
    Violation {
        class: PropertyClass,
        message: String,
        loc: Location,
    },
    /// An assumption did not hold; the run is not a valid execution.
    Blocked,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("step limit of {0} exceeded")]
    StepLimit(usize),
    #[error("call depth limit exceeded")]
    Depth,
}

const MAX_DEPTH: usize = 512;

struct Frame {
    vals: HashMap<VarId, Value>,
    /// By-reference parameters bound to a caller frame's variable.
    alias: HashMap<VarId, (usize, VarId)>,
}

struct Machine<'a> {
    p: &'a GotoProgram,
    frames: Vec<Frame>,
    nondet: &'a mut dyn FnMut(IrType) -> Value,
    steps: usize,
    limit: usize,
}

enum Flow {
    Done,
    Stop(ConcreteOutcome),
}

/// Runs the entry function, drawing every nondeterministic value from
/// `nondet` in execution order. Variables read before any write hold zero.
pub fn run_concrete(
    p: &GotoProgram,
    nondet: &mut dyn FnMut(IrType) -> Value,
    step_limit: usize,
) -> Result<ConcreteOutcome, InterpError> {
    let mut m = Machine {
        p,
        frames: vec![Frame {
            vals: HashMap::new(),
            alias: HashMap::new(),
        }],
        nondet,
        steps: 0,
        limit: step_limit,
    };
    match m.exec(&p.entry, 0)? {
        Flow::Done => Ok(ConcreteOutcome::Completed),
        Flow::Stop(o) => Ok(o),
    }
}

impl Machine<'_> {
    fn slot(&self, frame: usize, v: VarId) -> (usize, VarId) {
        if self.p.vars.get(v).owner.is_none() {
            return (0, v);
        }
        match self.frames[frame].alias.get(&v) {
            Some(&(f, w)) => self.slot(f, w),
            None => (frame, v),
        }
    }

    fn read(&self, frame: usize, v: VarId) -> Value {
        let (f, w) = self.slot(frame, v);
        match self.frames[f].vals.get(&w) {
            Some(x) => *x,
            None => self.p.vars.get(v).ty.zero(),
        }
    }

    fn write(&mut self, frame: usize, v: VarId, x: Value) {
        let (f, w) = self.slot(frame, v);
        self.frames[f].vals.insert(w, x);
    }

    fn exec(&mut self, key: &str, frame: usize) -> Result<Flow, InterpError> {
        let f = &self.p.functions[key];
        let mut pc = 0;
        while pc < f.body.len() {
            self.steps += 1;
            if self.steps > self.limit {
                return Err(InterpError::StepLimit(self.limit));
            }
            let ins = &f.body[pc];
            pc += 1;
            match &ins.kind {
                Instr::Decl(_) | Instr::Skip => {}
                Instr::End => break,
                Instr::Assign { lhs, rhs, .. } => {
                    let x = self.eval(frame, rhs);
                    self.write(frame, *lhs, x);
                }
                Instr::Store {
                    elems,
                    index,
                    value,
                } => {
                    let i = self.eval(frame, index);
                    let x = self.eval(frame, value);
                    if let Some(k) = position(&i, index.ty(), elems.len()) {
                        self.write(frame, elems[k], x);
                    }
                }
                Instr::Assume(e) => {
                    if !self.eval(frame, e).as_bool() {
                        return Ok(Flow::Stop(ConcreteOutcome::Blocked));
                    }
                }
                Instr::Assert {
                    cond,
                    class,
                    message,
                } => {
                    if !self.eval(frame, cond).as_bool() {
                        return Ok(Flow::Stop(ConcreteOutcome::Violation {
                            class: *class,
                            message: message.clone(),
                            loc: ins.loc,
                        }));
                    }
                }
                Instr::Goto { target, guard, .. } => {
                    let jump = guard.as_ref().map_or(true, |g| self.eval(frame, g).as_bool());
                    if jump {
                        pc = *target;
                    }
                }
                Instr::Call { lhs, callee, args } => {
                    if self.frames.len() >= MAX_DEPTH {
                        return Err(InterpError::Depth);
                    }
                    let g = &self.p.functions[callee];
                    let mut callee_frame = Frame {
                        vals: HashMap::new(),
                        alias: HashMap::new(),
                    };
                    for (slot, a) in g.params.iter().zip(args) {
                        match (slot, a) {
                            (ParamSlot::Scalar(pv), CallArg::Value(e)) => {
                                let x = self.eval(frame, e);
                                callee_frame.vals.insert(*pv, x);
                            }
                            (ParamSlot::Ref(ps), CallArg::Ref(vs)) => {
                                for (pv, v) in ps.iter().zip(vs) {
                                    let target = self.slot(frame, *v);
                                    callee_frame.alias.insert(*pv, target);
                                }
                            }
                            _ => panic!("argument shape mismatch calling {callee}"),
                        }
                    }
                    self.frames.push(callee_frame);
                    let idx = self.frames.len() - 1;
                    let flow = self.exec(callee, idx)?;
                    let ret = g.ret.map(|r| self.read(idx, r));
                    self.frames.pop();
                    if let Flow::Stop(o) = flow {
                        return Ok(Flow::Stop(o));
                    }
                    if let (Some((l, _)), Some(x)) = (lhs, ret) {
                        self.write(frame, *l, x);
                    }
                }
            }
        }
        Ok(Flow::Done)
    }

    fn eval(&mut self, frame: usize, e: &IrExpr) -> Value {
        match e {
            IrExpr::Const(v, _) => *v,
            IrExpr::Var(v, _) => self.read(frame, *v),
            IrExpr::Nondet(t) => (self.nondet)(*t),
            IrExpr::Index { elems, index, ty } => {
                let i = self.eval(frame, index);
                match position(&i, index.ty(), elems.len()) {
                    Some(k) => self.read(frame, elems[k]),
                    None => match elems.last() {
                        Some(v) => self.read(frame, *v),
                        None => ty.zero(),
                    },
                }
            }
            IrExpr::Ite(c, a, b) => {
                if self.eval(frame, c).as_bool() {
                    self.eval(frame, a)
                } else {
                    self.eval(frame, b)
                }
            }
            IrExpr::Cast(t, a) => {
                let from = a.ty();
                let x = self.eval(frame, a);
                cast(x, from, *t)
            }
            IrExpr::Un(op, a) => {
                let x = self.eval(frame, a);
                match (op, x) {
                    (IrUnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                    (IrUnOp::Neg, Value::BV(b)) => Value::BV(b.neg()),
                    (IrUnOp::Neg, Value::FP(f)) => Value::FP(-f),
                    (IrUnOp::BitNot, Value::BV(b)) => Value::BV(b.not()),
                    (op, x) => panic!("ill-typed unary {op:?} on {x:?}"),
                }
            }
            IrExpr::Bin(IrBinOp::And, a, b) => {
                let r = self.eval(frame, a).as_bool() && self.eval(frame, b).as_bool();
                Value::Bool(r)
            }
            IrExpr::Bin(IrBinOp::Or, a, b) => {
                let r = self.eval(frame, a).as_bool() || self.eval(frame, b).as_bool();
                Value::Bool(r)
            }
            IrExpr::Bin(op, a, b) => {
                let t = a.ty();
                let x = self.eval(frame, a);
                let y = self.eval(frame, b);
                binary(*op, t, x, y)
            }
        }
    }
}

/// Element selected by an index value, if in range.
fn position(i: &Value, t: IrType, n: usize) -> Option<usize> {
    let b = i.as_bv();
    let v = if t.is_signed_int() { b.to_signed() } else { b.to_unsigned() };
    v.to_usize().filter(|k| *k < n)
}

/// Python floor division and modulo on bit-vectors, built from the
/// truncating SMT-LIB operators.
pub(crate) fn floor_divmod(a: &BitVec, b: &BitVec, signed: bool) -> (BitVec, BitVec) {
    if !signed {
        return (a.udiv(b), a.urem(b));
    }
    let q = a.sdiv(b);
    let r = a.srem(b);
    if !r.is_zero() && r.msb() != b.msb() {
        (q.sub(&BitVec::from_u64(a.width, 1)), r.add(b))
    } else {
        (q, r)
    }
}

fn binary(op: IrBinOp, t: IrType, x: Value, y: Value) -> Value {
    match (x, y) {
        (Value::BV(a), Value::BV(b)) => {
            let signed = t.is_signed_int();
            let ord = if signed { a.scmp(&b) } else { a.ucmp(&b) };
            match op {
                IrBinOp::Add => Value::BV(a.add(&b)),
                IrBinOp::Sub => Value::BV(a.sub(&b)),
                IrBinOp::Mul => Value::BV(a.mul(&b)),
                IrBinOp::FloorDiv => Value::BV(floor_divmod(&a, &b, signed).0),
                IrBinOp::Mod => Value::BV(floor_divmod(&a, &b, signed).1),
                IrBinOp::Shl => Value::BV(a.shl(&b)),
                IrBinOp::Shr => Value::BV(if signed { a.ashr(&b) } else { a.lshr(&b) }),
                IrBinOp::BitAnd => Value::BV(a.and(&b)),
                IrBinOp::BitOr => Value::BV(a.or(&b)),
                IrBinOp::BitXor => Value::BV(a.xor(&b)),
                _ => Value::Bool(compare(op, Some(ord))),
            }
        }
        (Value::FP(a), Value::FP(b)) => match op {
            IrBinOp::Add => Value::FP(a + b),
            IrBinOp::Sub => Value::FP(a - b),
            IrBinOp::Mul => Value::FP(a * b),
            IrBinOp::Div => Value::FP(a / b),
            _ => Value::Bool(compare(op, a.partial_cmp(&b))),
        },
        (Value::Bool(a), Value::Bool(b)) => match op {
            IrBinOp::Eq => Value::Bool(a == b),
            IrBinOp::Ne => Value::Bool(a != b),
            _ => Value::Bool(compare(op, Some(a.cmp(&b)))),
        },
        (x, y) => panic!("ill-typed {op:?} on {x:?} and {y:?}"),
    }
}

/// Comparison result; unordered operands (NaN) only satisfy `!=`.
fn compare(op: IrBinOp, ord: Option<Ordering>) -> bool {
    let Some(o) = ord else {
        return op == IrBinOp::Ne;
    };
    match op {
        IrBinOp::Eq => o == Ordering::Equal,
        IrBinOp::Ne => o != Ordering::Equal,
        IrBinOp::Lt => o == Ordering::Less,
        IrBinOp::Le => o != Ordering::Greater,
        IrBinOp::Gt => o == Ordering::Greater,
        IrBinOp::Ge => o != Ordering::Less,
        _ => panic!("{op:?} is not a comparison"),
    }
}

fn cast(x: Value, from: IrType, to: IrType) -> Value {
    match (x, to) {
        (Value::Bool(b), IrType::Int(t)) => Value::BV(BitVec::from_u64(t.width, u64::from(b))),
        (Value::Bool(b), IrType::Float) => Value::FP(if b { 1.0 } else { 0.0 }),
        (Value::BV(b), IrType::Int(t)) => Value::BV(resize(&b, from.is_signed_int(), t.width)),
        (Value::BV(b), IrType::Float) => {
            let v = if from.is_signed_int() { b.to_signed() } else { b.to_unsigned() };
            Value::FP(v.to_f64().unwrap_or(f64::NAN))
        }
        (Value::FP(f), IrType::Int(t)) => {
            let v = num_bigint::BigInt::from(f.trunc() as i128);
            Value::BV(BitVec::from_bigint(t.width, &v))
        }
        (Value::FP(f), IrType::Float) => Value::FP(f),
        (x, IrType::Bool) => panic!("no cast of {x:?} to bool"),
    }
}

pub(crate) fn resize(b: &BitVec, signed: bool, w: u32) -> BitVec {
    match w.cmp(&b.width) {
        Ordering::Equal => *b,
        Ordering::Less => b.extract(w - 1, 0),
        Ordering::Greater if signed => b.sext(w - b.width),
        Ordering::Greater => b.zext(w - b.width),
    }
}

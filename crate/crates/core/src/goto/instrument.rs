//! Property instrumentation: explicit assertions for division by zero, list
//! bounds and (optionally) signed overflow.

use super::{GotoProgram, Instr, Instruction, IrBinOp, IrExpr, IrType, IrUnOp, PropertyClass, VarTable};
use crate::bv::BitVec;
use crate::term::Value;
use crate::types::IntType;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckOptions {
    pub overflow: bool,
}

struct Check {
    cond: IrExpr,
    class: PropertyClass,
    message: String,
}

/// Inserts one assertion per property in front of the instruction that
/// evaluates the checked expression. Jumps to an instrumented instruction
/// land on its first assertion.
pub fn instrument_properties(p: &mut GotoProgram, opts: &CheckOptions) {
    let vars = &p.vars;
    for f in p.functions.values_mut() {
        let mut out = Vec::with_capacity(f.body.len());
        let mut starts = Vec::with_capacity(f.body.len());
        for ins in &f.body {
            starts.push(out.len());
            let mut checks = Vec::new();
            let mut guards = Vec::new();
            for e in ins.kind.exprs() {
                walk(e, &mut guards, &mut checks, opts, vars);
            }
            if let Instr::Store { elems, index, .. } = &ins.kind {
                bounds(index, elems.len(), &[], &mut checks, vars);
            }
            for c in checks {
                out.push(Instruction {
                    kind: Instr::Assert {
                        cond: c.cond,
                        class: c.class,
                        message: c.message,
                    },
                    loc: ins.loc,
                    module: ins.module.clone(),
                });
            }
            out.push(ins.clone());
        }
        for ins in &mut out {
            if let Instr::Goto { target, .. } = &mut ins.kind {
                *target = starts[*target];
            }
        }
        f.body = out;
    }
}

fn guarded(guards: &[IrExpr], c: IrExpr) -> IrExpr {
    match guards.iter().cloned().reduce(|a, b| IrExpr::bin(IrBinOp::And, a, b)) {
        None => c,
        Some(g) => IrExpr::bin(IrBinOp::Or, IrExpr::not(g), c),
    }
}

fn push(out: &mut Vec<Check>, guards: &[IrExpr], c: IrExpr, class: PropertyClass, vars: &VarTable) {
    let message = c.render(vars);
    out.push(Check {
        cond: guarded(guards, c),
        class,
        message,
    });
}

fn signed_bounds(t: IntType) -> (BitVec, BitVec) {
    let w = t.width;
    let min = BitVec::from_u64(w, 1).shl(&BitVec::from_u64(w, u64::from(w - 1)));
    (min.clone(), min.not())
}

fn walk(e: &IrExpr, guards: &mut Vec<IrExpr>, out: &mut Vec<Check>, opts: &CheckOptions, vars: &VarTable) {
    match e {
        IrExpr::Const(..) | IrExpr::Var(..) | IrExpr::Nondet(_) => {}
        IrExpr::Bin(IrBinOp::And, a, b) => {
            walk(a, guards, out, opts, vars);
            guards.push((**a).clone());
            walk(b, guards, out, opts, vars);
            guards.pop();
        }
        IrExpr::Bin(IrBinOp::Or, a, b) => {
            walk(a, guards, out, opts, vars);
            guards.push(IrExpr::not((**a).clone()));
            walk(b, guards, out, opts, vars);
            guards.pop();
        }
        IrExpr::Ite(c, a, b) => {
            walk(c, guards, out, opts, vars);
            guards.push((**c).clone());
            walk(a, guards, out, opts, vars);
            guards.pop();
            guards.push(IrExpr::not((**c).clone()));
            walk(b, guards, out, opts, vars);
            guards.pop();
        }
        IrExpr::Bin(op, a, b) => {
            walk(a, guards, out, opts, vars);
            walk(b, guards, out, opts, vars);
            let t = a.ty();
            if matches!(op, IrBinOp::FloorDiv | IrBinOp::Mod) {
                let zero = IrExpr::Const(t.zero(), t);
                push(
                    out,
                    guards,
                    IrExpr::bin(IrBinOp::Ne, (**b).clone(), zero),
                    PropertyClass::DivisionByZero,
                    vars,
                );
            }
            let IrType::Int(it) = t else { return };
            if !opts.overflow || !it.signed || it.width > 64 {
                return;
            }
            match op {
                IrBinOp::Add | IrBinOp::Sub | IrBinOp::Mul => {
                    let wide = IrType::Int(IntType::signed(it.width * 2));
                    let cast = |x: &IrExpr| IrExpr::Cast(wide, Box::new(x.clone()));
                    let r = IrExpr::bin(*op, cast(a), cast(b));
                    let (min, max) = signed_bounds(it);
                    let lo = IrExpr::Cast(wide, Box::new(IrExpr::Const(Value::BV(min), t)));
                    let hi = IrExpr::Cast(wide, Box::new(IrExpr::Const(Value::BV(max), t)));
                    let ok = IrExpr::bin(
                        IrBinOp::And,
                        IrExpr::bin(IrBinOp::Ge, r.clone(), lo),
                        IrExpr::bin(IrBinOp::Le, r, hi),
                    );
                    let message = format!("arithmetic overflow on signed {} in {}", op.symbol(), e.render(vars));
                    out.push(Check {
                        cond: guarded(guards, ok),
                        class: PropertyClass::Overflow,
                        message,
                    });
                }
                IrBinOp::FloorDiv => {
                    let (min, _) = signed_bounds(it);
                    let bad = IrExpr::bin(
                        IrBinOp::And,
                        IrExpr::bin(IrBinOp::Eq, (**a).clone(), IrExpr::Const(Value::BV(min), t)),
                        IrExpr::bin(IrBinOp::Eq, (**b).clone(), IrExpr::int(-1, it)),
                    );
                    let message = format!("arithmetic overflow on signed // in {}", e.render(vars));
                    out.push(Check {
                        cond: guarded(guards, IrExpr::not(bad)),
                        class: PropertyClass::Overflow,
                        message,
                    });
                }
                _ => {}
            }
        }
        IrExpr::Un(op, a) => {
            walk(a, guards, out, opts, vars);
            if let (IrUnOp::Neg, IrType::Int(it)) = (op, a.ty()) {
                if opts.overflow && it.signed && it.width <= 64 {
                    let (min, _) = signed_bounds(it);
                    let ok = IrExpr::bin(IrBinOp::Ne, (**a).clone(), IrExpr::Const(Value::BV(min), a.ty()));
                    let message = format!("arithmetic overflow on signed unary minus in {}", e.render(vars));
                    out.push(Check {
                        cond: guarded(guards, ok),
                        class: PropertyClass::Overflow,
                        message,
                    });
                }
            }
        }
        IrExpr::Cast(_, a) => walk(a, guards, out, opts, vars),
        IrExpr::Index { elems, index, .. } => {
            walk(index, guards, out, opts, vars);
            bounds(index, elems.len(), guards, out, vars);
        }
    }
}

/// `0 <= index < n`, omitted for constant indices already in range.
fn bounds(index: &IrExpr, n: usize, guards: &[IrExpr], out: &mut Vec<Check>, vars: &VarTable) {
    let IrType::Int(it) = index.ty() else { return };
    if let IrExpr::Const(Value::BV(b), _) = index {
        let v = if it.signed { b.to_signed() } else { b.to_unsigned() };
        if v >= 0.into() && v < n.into() {
            return;
        }
    }
    let upper = IrExpr::bin(IrBinOp::Lt, index.clone(), IrExpr::int(n as i64, it));
    let c = if it.signed {
        IrExpr::bin(
            IrBinOp::And,
            IrExpr::bin(IrBinOp::Ge, index.clone(), IrExpr::int(0, it)),
            upper,
        )
    } else {
        upper
    };
    push(out, guards, c, PropertyClass::Bounds, vars);
}

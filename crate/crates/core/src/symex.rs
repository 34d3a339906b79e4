//! Symbolic execution of an unwound GOTO program into a guarded SSA trace.
//!
//! Paths are explored forward in instruction order; states waiting at the
//! same jump target are merged with phi assignments, so the trace stays
//! linear in the size of the program.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::ast::Location;
use crate::bv::BitVec;
use crate::goto::{GotoProgram, Instr, IrBinOp, IrExpr, IrType, IrUnOp, PropertyClass, VarId, VarTable, Visibility};
use crate::term::{fold, Op, Sort, Term, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SymId(pub u32);

pub type STerm = Term<SymId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymKind {
    /// Free value chosen by the solver.
    Input,
    Defined,
    /// Captured branch condition or path guard.
    Guard,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Symbol {
    /// SMT name, `base!version`.
    pub name: String,
    pub sort: Sort,
    pub var: Option<VarId>,
    pub kind: SymKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepKind {
    Nondet { lhs: SymId },
    Assign { lhs: SymId, rhs: STerm },
    Phi { lhs: SymId, rhs: STerm },
    Assume(STerm),
    Assert {
        cond: STerm,
        class: PropertyClass,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub kind: StepKind,
    /// Path condition. For assignments it only decides whether the step
    /// is part of a counterexample.
    pub guard: STerm,
    pub loc: Location,
    pub module: String,
    pub pc: usize,
    pub vis: Visibility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ssa {
    pub symbols: Vec<Symbol>,
    pub steps: Vec<Step>,
    pub vars: VarTable,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymexError {
    #[error("backward jump at instruction {0}; the program must be unwound first")]
    NotUnwound(usize),
    #[error("call at instruction {0}; the program must be inlined first")]
    NotInlined(usize),
}

#[derive(Clone)]
struct State {
    guard: Vec<STerm>,
    values: Vec<Option<SymId>>,
}

struct Engine<'a> {
    vars: &'a VarTable,
    symbols: Vec<Symbol>,
    steps: Vec<Step>,
    versions: Vec<u32>,
    known: HashMap<SymId, Value>,
    counters: HashMap<&'static str, u32>,
    loc: Location,
    module: String,
    pc: usize,
}

fn sort_of(t: IrType) -> Sort {
    t.sort()
}

/// Executes the single entry function of an unwound program.
pub fn symex(p: &GotoProgram) -> Result<Ssa, SymexError> {
    let f = p.entry_function();
    let mut e = Engine {
        vars: &p.vars,
        symbols: Vec::new(),
        steps: Vec::new(),
        versions: vec![0; p.vars.len()],
        known: HashMap::new(),
        counters: HashMap::new(),
        loc: Location::default(),
        module: String::new(),
        pc: 0,
    };
    let mut pending: BTreeMap<usize, Vec<State>> = BTreeMap::new();
    let mut cur = Some(State {
        guard: Vec::new(),
        values: vec![None; p.vars.len()],
    });
    for (pc, ins) in f.body.iter().enumerate() {
        e.loc = ins.loc;
        e.module = ins.module.clone();
        e.pc = pc;
        if let Some(list) = pending.remove(&pc) {
            for s in list {
                cur = Some(match cur.take() {
                    None => s,
                    Some(c) => e.merge(c, s),
                });
            }
        }
        let Some(mut st) = cur.take() else { continue };
        match &ins.kind {
            Instr::Decl(_) | Instr::Skip => {}
            Instr::End => break,
            Instr::Call { .. } => return Err(SymexError::NotInlined(pc)),
            Instr::Assign { lhs, rhs, vis } => {
                let g = e.guard_term(&st);
                if let IrExpr::Nondet(t) = rhs {
                    let s = e.fresh_var(*lhs, *t, SymKind::Input);
                    e.push(StepKind::Nondet { lhs: s }, g, *vis);
                    st.values[lhs.0 as usize] = Some(s);
                } else {
                    let r = e.term(&mut st, rhs);
                    let s = e.fresh_var(*lhs, rhs.ty(), SymKind::Defined);
                    if let Term::Const(v) = &r {
                        e.known.insert(s, *v);
                    }
                    e.push(StepKind::Assign { lhs: s, rhs: r }, g, *vis);
                    st.values[lhs.0 as usize] = Some(s);
                }
            }
            Instr::Store {
                elems,
                index,
                value,
            } => {
                let i = e.term(&mut st, index);
                let i = e.atomize(i, sort_of(index.ty()));
                let v = e.term(&mut st, value);
                let v = e.atomize(v, sort_of(value.ty()));
                let IrType::Int(it) = index.ty() else { unreachable!("integer index") };
                let g = e.guard_term(&st);
                for (k, x) in elems.iter().enumerate() {
                    let hit = fold(&Term::eq(i.clone(), Term::bv(BitVec::from_u64(it.width, k as u64))));
                    if hit.is_false() {
                        continue;
                    }
                    let old = e.read(&mut st, *x);
                    let rhs = fold(&Term::ite(hit.clone(), v.clone(), old));
                    let s = e.fresh_var(*x, value.ty(), SymKind::Defined);
                    if let Term::Const(c) = &rhs {
                        e.known.insert(s, *c);
                    }
                    let dg = Term::and(vec![g.clone(), hit]);
                    e.push(StepKind::Assign { lhs: s, rhs }, dg, Visibility::Shown);
                    st.values[x.0 as usize] = Some(s);
                }
            }
            Instr::Assume(c) => {
                let t = e.term(&mut st, c);
                let g = e.guard_term(&st);
                e.push(StepKind::Assume(t.clone()), g, Visibility::Shown);
                if t.is_false() {
                    continue;
                }
                if !t.is_true() {
                    st.guard.push(t);
                }
            }
            Instr::Assert {
                cond,
                class,
                message,
            } => {
                let t = e.term(&mut st, cond);
                let g = e.guard_term(&st);
                e.push(
                    StepKind::Assert {
                        cond: t,
                        class: *class,
                        message: message.clone(),
                    },
                    g,
                    Visibility::Shown,
                );
            }
            Instr::Goto { target, guard, .. } => {
                if *target <= pc {
                    return Err(SymexError::NotUnwound(pc));
                }
                let c = match guard {
                    None => Term::tt(),
                    Some(g) => {
                        let t = e.term(&mut st, g);
                        e.capture(t, "$cond")
                    }
                };
                if c.is_true() {
                    pending.entry(*target).or_default().push(st);
                    continue;
                }
                if !c.is_false() {
                    let mut taken = st.clone();
                    taken.guard.push(c.clone());
                    pending.entry(*target).or_default().push(taken);
                    st.guard.push(Term::not(c));
                }
            }
        }
        cur = Some(st);
    }
    Ok(Ssa {
        symbols: e.symbols,
        steps: e.steps,
        vars: p.vars.clone(),
    })
}

impl Engine<'_> {
    fn add_symbol(&mut self, name: String, sort: Sort, var: Option<VarId>, kind: SymKind) -> SymId {
        self.symbols.push(Symbol { name, sort, var, kind });
        SymId(self.symbols.len() as u32 - 1)
    }

    fn fresh_var(&mut self, v: VarId, t: IrType, kind: SymKind) -> SymId {
        let ver = self.versions[v.0 as usize];
        self.versions[v.0 as usize] += 1;
        let name = format!("{}!{ver}", self.vars.get(v).name);
        self.add_symbol(name, sort_of(t), Some(v), kind)
    }

    fn fresh_aux(&mut self, base: &'static str, sort: Sort, kind: SymKind) -> SymId {
        let n = self.counters.entry(base).or_insert(0);
        let name = format!("{base}!{n}");
        *n += 1;
        self.add_symbol(name, sort, None, kind)
    }

    fn push(&mut self, kind: StepKind, guard: STerm, vis: Visibility) {
        self.steps.push(Step {
            kind,
            guard,
            loc: self.loc,
            module: self.module.clone(),
            pc: self.pc,
            vis,
        });
    }

    fn guard_term(&self, st: &State) -> STerm {
        Term::and(st.guard.clone())
    }

    /// Names a non-atomic term with a hidden definition.
    fn atomize(&mut self, t: STerm, sort: Sort) -> STerm {
        if matches!(t, Term::Const(_) | Term::Var(_)) {
            return t;
        }
        let s = self.fresh_aux("$tmp", sort, SymKind::Defined);
        self.push(StepKind::Assign { lhs: s, rhs: t }, Term::tt(), Visibility::Hidden);
        Term::Var(s)
    }

    fn capture(&mut self, t: STerm, base: &'static str) -> STerm {
        if matches!(t, Term::Const(_) | Term::Var(_)) {
            return t;
        }
        if let Term::App(Op::Not, args) = &t {
            if matches!(args[0], Term::Var(_)) {
                return t;
            }
        }
        let s = self.fresh_aux(base, Sort::Bool, SymKind::Guard);
        self.push(StepKind::Assign { lhs: s, rhs: t }, Term::tt(), Visibility::Hidden);
        Term::Var(s)
    }

    fn read(&mut self, st: &mut State, v: VarId) -> STerm {
        let s = match st.values[v.0 as usize] {
            Some(s) => s,
            None => {
                let s = self.fresh_var(v, self.vars.get(v).ty, SymKind::Input);
                st.values[v.0 as usize] = Some(s);
                s
            }
        };
        match self.known.get(&s) {
            Some(c) => Term::Const(*c),
            None => Term::Var(s),
        }
    }

    fn merge(&mut self, a: State, b: State) -> State {
        let common = a
            .guard
            .iter()
            .zip(&b.guard)
            .take_while(|(x, y)| x == y)
            .count();
        let prefix = a.guard[..common].to_vec();
        let ra = Term::and(a.guard[common..].to_vec());
        let rb = Term::and(b.guard[common..].to_vec());
        let ca = self.capture(ra, "$guard");
        let mut guard = prefix;
        let either = fold(&Term::or(vec![ca.clone(), rb]));
        if !either.is_true() {
            guard.push(either);
        }
        let g = Term::and(guard.clone());
        let mut values = a.values.clone();
        for (i, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
            match (x, y) {
                (Some(x), Some(y)) if x != y => {
                    let v = VarId(i as u32);
                    let tx = self.known.get(x).map_or(Term::Var(*x), |c| Term::Const(*c));
                    let ty = self.known.get(y).map_or(Term::Var(*y), |c| Term::Const(*c));
                    let rhs = fold(&Term::ite(ca.clone(), tx, ty));
                    let s = self.fresh_var(v, self.vars.get(v).ty, SymKind::Defined);
                    if let Term::Const(c) = &rhs {
                        self.known.insert(s, *c);
                    }
                    self.push(StepKind::Phi { lhs: s, rhs }, g.clone(), Visibility::Hidden);
                    values[i] = Some(s);
                }
                (None, Some(y)) => values[i] = Some(*y),
                _ => {}
            }
        }
        State { guard, values }
    }

    fn term(&mut self, st: &mut State, e: &IrExpr) -> STerm {
        let t = self.term_raw(st, e);
        fold(&t)
    }

    fn term_raw(&mut self, st: &mut State, e: &IrExpr) -> STerm {
        match e {
            IrExpr::Const(v, _) => Term::Const(*v),
            IrExpr::Var(v, _) => self.read(st, *v),
            IrExpr::Nondet(t) => {
                let s = self.fresh_aux("$nondet", sort_of(*t), SymKind::Input);
                Term::Var(s)
            }
            IrExpr::Un(op, a) => {
                let x = self.term(st, a);
                match (op, a.ty()) {
                    (IrUnOp::Not, _) => Term::not(x),
                    (IrUnOp::Neg, IrType::Float) => Term::un(Op::FpNeg, x),
                    (IrUnOp::Neg, _) => Term::un(Op::BvNeg, x),
                    (IrUnOp::BitNot, _) => Term::un(Op::BvNot, x),
                }
            }
            IrExpr::Bin(IrBinOp::And, a, b) => {
                let x = self.term(st, a);
                let y = self.term(st, b);
                Term::and(vec![x, y])
            }
            IrExpr::Bin(IrBinOp::Or, a, b) => {
                let x = self.term(st, a);
                let y = self.term(st, b);
                Term::or(vec![x, y])
            }
            IrExpr::Bin(op, a, b) => {
                let t = a.ty();
                let x = self.term(st, a);
                let y = self.term(st, b);
                self.binary(*op, t, x, y)
            }
            IrExpr::Ite(c, a, b) => {
                let c = self.term(st, c);
                let x = self.term(st, a);
                let y = self.term(st, b);
                Term::ite(c, x, y)
            }
            IrExpr::Cast(to, a) => {
                let x = self.term(st, a);
                cast(x, a.ty(), *to)
            }
            IrExpr::Index { elems, index, ty } => {
                let i = self.term(st, index);
                let i = self.atomize(i, sort_of(index.ty()));
                let IrType::Int(it) = index.ty() else { unreachable!("integer index") };
                let Some((last, rest)) = elems.split_last() else {
                    return Term::Const(ty.zero());
                };
                let mut acc = self.read(st, *last);
                for (k, x) in rest.iter().enumerate().rev() {
                    let hit = Term::eq(i.clone(), Term::bv(BitVec::from_u64(it.width, k as u64)));
                    let v = self.read(st, *x);
                    acc = Term::ite(fold(&hit), v, acc);
                }
                acc
            }
        }
    }

    fn binary(&mut self, op: IrBinOp, t: IrType, x: STerm, y: STerm) -> STerm {
        let signed = t.is_signed_int();
        match t {
            IrType::Float => match op {
                IrBinOp::Add => Term::bin(Op::FpAdd, x, y),
                IrBinOp::Sub => Term::bin(Op::FpSub, x, y),
                IrBinOp::Mul => Term::bin(Op::FpMul, x, y),
                IrBinOp::Div => Term::bin(Op::FpDiv, x, y),
                IrBinOp::Eq => Term::bin(Op::FpEq, x, y),
                IrBinOp::Ne => Term::not(Term::bin(Op::FpEq, x, y)),
                IrBinOp::Lt => Term::bin(Op::FpLt, x, y),
                IrBinOp::Le => Term::bin(Op::FpLeq, x, y),
                IrBinOp::Gt => Term::bin(Op::FpLt, y, x),
                IrBinOp::Ge => Term::bin(Op::FpLeq, y, x),
                _ => unreachable!("{op:?} on floats"),
            },
            IrType::Bool => match op {
                IrBinOp::Eq => Term::eq(x, y),
                IrBinOp::Ne => Term::not(Term::eq(x, y)),
                IrBinOp::Lt => Term::and(vec![Term::not(x), y]),
                IrBinOp::Le => Term::or(vec![Term::not(x), y]),
                IrBinOp::Gt => Term::and(vec![x, Term::not(y)]),
                IrBinOp::Ge => Term::or(vec![x, Term::not(y)]),
                _ => unreachable!("{op:?} on booleans"),
            },
            IrType::Int(it) => match op {
                IrBinOp::Add => Term::bin(Op::BvAdd, x, y),
                IrBinOp::Sub => Term::bin(Op::BvSub, x, y),
                IrBinOp::Mul => Term::bin(Op::BvMul, x, y),
                IrBinOp::Shl => Term::bin(Op::BvShl, x, y),
                IrBinOp::Shr => Term::bin(if signed { Op::BvAShr } else { Op::BvLShr }, x, y),
                IrBinOp::BitAnd => Term::bin(Op::BvAnd, x, y),
                IrBinOp::BitOr => Term::bin(Op::BvOr, x, y),
                IrBinOp::BitXor => Term::bin(Op::BvXor, x, y),
                IrBinOp::FloorDiv | IrBinOp::Mod if !signed => {
                    Term::bin(if op == IrBinOp::Mod { Op::BvURem } else { Op::BvUDiv }, x, y)
                }
                IrBinOp::FloorDiv | IrBinOp::Mod => {
                    let sort = Sort::BV(it.width);
                    let x = self.atomize(x, sort);
                    let y = self.atomize(y, sort);
                    let r = fold(&Term::bin(Op::BvSRem, x.clone(), y.clone()));
                    let r = self.atomize(r, sort);
                    let zero = Term::bv(BitVec::zero(it.width));
                    let neg = |v: STerm| Term::bin(Op::BvSlt, v, zero.clone());
                    let adjust = Term::and(vec![
                        Term::not(Term::eq(r.clone(), zero.clone())),
                        Term::bin(Op::Xor, neg(r.clone()), neg(y.clone())),
                    ]);
                    if op == IrBinOp::Mod {
                        Term::ite(adjust, Term::bin(Op::BvAdd, r.clone(), y), r)
                    } else {
                        let q = Term::bin(Op::BvSDiv, x, y);
                        let one = Term::bv(BitVec::from_u64(it.width, 1));
                        Term::ite(adjust, Term::bin(Op::BvSub, q.clone(), one), q)
                    }
                }
                IrBinOp::Eq => Term::eq(x, y),
                IrBinOp::Ne => Term::not(Term::eq(x, y)),
                IrBinOp::Lt => Term::bin(if signed { Op::BvSlt } else { Op::BvUlt }, x, y),
                IrBinOp::Le => Term::bin(if signed { Op::BvSle } else { Op::BvUle }, x, y),
                IrBinOp::Gt => Term::bin(if signed { Op::BvSlt } else { Op::BvUlt }, y, x),
                IrBinOp::Ge => Term::bin(if signed { Op::BvSle } else { Op::BvUle }, y, x),
                IrBinOp::Div | IrBinOp::And | IrBinOp::Or => unreachable!("{op:?} on integers"),
            },
        }
    }
}

fn cast(x: STerm, from: IrType, to: IrType) -> STerm {
    match (from, to) {
        _ if from == to => x,
        (IrType::Bool, IrType::Int(t)) => Term::ite(
            x,
            Term::bv(BitVec::from_u64(t.width, 1)),
            Term::bv(BitVec::zero(t.width)),
        ),
        (IrType::Bool, IrType::Float) => Term::ite(x, Term::fp(1.0), Term::fp(0.0)),
        (IrType::Int(f), IrType::Int(t)) => {
            if t.width < f.width {
                Term::un(Op::Extract(t.width - 1, 0), x)
            } else if t.width == f.width {
                x
            } else if f.signed {
                Term::un(Op::SignExt(t.width - f.width), x)
            } else {
                Term::un(Op::ZeroExt(t.width - f.width), x)
            }
        }
        (IrType::Int(f), IrType::Float) => Term::un(if f.signed { Op::SBvToFp } else { Op::UBvToFp }, x),
        (IrType::Float, IrType::Int(t)) => Term::un(Op::FpToSBv(t.width), x),
        (f, t) => unreachable!("cast from {f} to {t}"),
    }
}

impl Ssa {
    pub fn symbol(&self, s: SymId) -> &Symbol {
        &self.symbols[s.0 as usize]
    }

    pub fn name(&self, s: SymId) -> String {
        self.symbol(s).name.clone()
    }

    /// Free symbols, in creation order.
    pub fn inputs(&self) -> Vec<SymId> {
        (0..self.symbols.len() as u32)
            .map(SymId)
            .filter(|s| self.symbol(*s).kind == SymKind::Input)
            .collect()
    }

    pub fn assertion_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.kind, StepKind::Assert { .. }))
            .count()
    }

    /// Listing used by `--show-ssa`.
    pub fn render(&self) -> String {
        let name = |s: &SymId| self.name(*s);
        let mut out = String::new();
        for st in &self.steps {
            let body = match &st.kind {
                StepKind::Nondet { lhs } => format!("{} := nondet", name(lhs)),
                StepKind::Assign { lhs, rhs } => format!("{} := {}", name(lhs), rhs.to_smt(&name)),
                StepKind::Phi { lhs, rhs } => format!("{} := phi {}", name(lhs), rhs.to_smt(&name)),
                StepKind::Assume(c) => format!("ASSUME {}", c.to_smt(&name)),
                StepKind::Assert { cond, class, .. } => {
                    format!("ASSERT {} [{}]", cond.to_smt(&name), class.id())
                }
            };
            let _ = writeln!(
                out,
                "{} ⊢ {body}  // {}.py:{}",
                st.guard.to_smt(&name),
                st.module,
                st.loc.line
            );
        }
        out
    }
}

/// Folds every term and drops steps that can never execute.
pub fn simplify(ssa: &Ssa) -> Ssa {
    let steps = ssa
        .steps
        .iter()
        .filter_map(|st| {
            let guard = fold(&st.guard);
            let kind = match &st.kind {
                StepKind::Nondet { lhs } => StepKind::Nondet { lhs: *lhs },
                StepKind::Assign { lhs, rhs } => StepKind::Assign { lhs: *lhs, rhs: fold(rhs) },
                StepKind::Phi { lhs, rhs } => StepKind::Phi { lhs: *lhs, rhs: fold(rhs) },
                StepKind::Assume(_) | StepKind::Assert { .. } if guard.is_false() => return None,
                StepKind::Assume(c) => StepKind::Assume(fold(c)),
                StepKind::Assert { cond, class, message } => StepKind::Assert {
                    cond: fold(cond),
                    class: *class,
                    message: message.clone(),
                },
            };
            Some(Step { kind, guard, ..st.clone() })
        })
        .collect();
    Ssa {
        symbols: ssa.symbols.clone(),
        steps,
        vars: ssa.vars.clone(),
    }
}

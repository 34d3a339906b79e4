//! Sorted expression trees over Bool, bit-vectors and IEEE binary64, shared by
//! the GOTO IR back end, the SSA trace, and the verification conditions.
//!
//! Leaves are generic so the same operators serve program variables and SSA
//! symbols.

use std::cmp::Ordering;
use std::fmt;

use primitive_types::U256;
use serde::Serialize;
use thiserror::Error;

use crate::bv::BitVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sort {
    Bool,
    BV(u32),
    /// IEEE-754 binary64.
    FP,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::BV(w) => write!(f, "(_ BitVec {w})"),
            Sort::FP => f.write_str("(_ FloatingPoint 11 53)"),
        }
    }
}

pub const SUPPORTED_BV_WIDTHS: [u32; 5] = [1, 32, 64, 128, 256];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Bool(bool),
    BV(BitVec),
    FP(f64),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::BV(b) => Sort::BV(b.width),
            Value::FP(_) => Sort::FP,
        }
    }

    pub fn as_bool(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            other => panic!("expected Bool, found {other:?}"),
        }
    }

    pub fn as_bv(&self) -> BitVec {
        match self {
            Value::BV(b) => *b,
            other => panic!("expected bit-vector, found {other:?}"),
        }
    }

    pub fn as_fp(&self) -> f64 {
        match self {
            Value::FP(f) => *f,
            other => panic!("expected float, found {other:?}"),
        }
    }

    /// Bitwise identity, so NaN equals itself as SMT-LIB `=` requires.
    pub fn same(&self, o: &Value) -> bool {
        match (self, o) {
            (Value::FP(a), Value::FP(b)) => {
                a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
            }
            _ => self == o,
        }
    }

    pub fn smt_literal(&self) -> String {
        match self {
            Value::Bool(b) => b.to_string(),
            Value::BV(b) => b.smt_literal(),
            Value::FP(f) => fp_literal(*f),
        }
    }
}

fn fp_literal(f: f64) -> String {
    let bits = f.to_bits();
    let sign = bits >> 63;
    let exp = (bits >> 52) & 0x7ff;
    let man = bits & ((1u64 << 52) - 1);
    format!("(fp #b{sign} #b{exp:011b} #x{man:013x})")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Op {
    Not,
    And,
    Or,
    Implies,
    Xor,
    Eq,
    Ite,
    BvNeg,
    BvNot,
    BvAdd,
    BvSub,
    BvMul,
    BvUDiv,
    BvURem,
    BvSDiv,
    BvSRem,
    BvShl,
    BvLShr,
    BvAShr,
    BvAnd,
    BvOr,
    BvXor,
    BvUlt,
    BvUle,
    BvSlt,
    BvSle,
    ZeroExt(u32),
    SignExt(u32),
    Extract(u32, u32),
    FpAdd,
    FpSub,
    FpMul,
    FpDiv,
    FpNeg,
    FpAbs,
    FpLt,
    FpLeq,
    FpEq,
    SBvToFp,
    UBvToFp,
    FpToSBv(u32),
}

impl Op {
    pub fn smt_name(&self) -> String {
        match self {
            Op::Not => "not".into(),
            Op::And => "and".into(),
            Op::Or => "or".into(),
            Op::Implies => "=>".into(),
            Op::Xor => "xor".into(),
            Op::Eq => "=".into(),
            Op::Ite => "ite".into(),
            Op::BvNeg => "bvneg".into(),
            Op::BvNot => "bvnot".into(),
            Op::BvAdd => "bvadd".into(),
            Op::BvSub => "bvsub".into(),
            Op::BvMul => "bvmul".into(),
            Op::BvUDiv => "bvudiv".into(),
            Op::BvURem => "bvurem".into(),
            Op::BvSDiv => "bvsdiv".into(),
            Op::BvSRem => "bvsrem".into(),
            Op::BvShl => "bvshl".into(),
            Op::BvLShr => "bvlshr".into(),
            Op::BvAShr => "bvashr".into(),
            Op::BvAnd => "bvand".into(),
            Op::BvOr => "bvor".into(),
            Op::BvXor => "bvxor".into(),
            Op::BvUlt => "bvult".into(),
            Op::BvUle => "bvule".into(),
            Op::BvSlt => "bvslt".into(),
            Op::BvSle => "bvsle".into(),
            Op::ZeroExt(n) => format!("(_ zero_extend {n})"),
            Op::SignExt(n) => format!("(_ sign_extend {n})"),
            Op::Extract(h, l) => format!("(_ extract {h} {l})"),
            Op::FpAdd => "fp.add RNE".into(),
            Op::FpSub => "fp.sub RNE".into(),
            Op::FpMul => "fp.mul RNE".into(),
            Op::FpDiv => "fp.div RNE".into(),
            Op::FpNeg => "fp.neg".into(),
            Op::FpAbs => "fp.abs".into(),
            Op::FpLt => "fp.lt".into(),
            Op::FpLeq => "fp.leq".into(),
            Op::FpEq => "fp.eq".into(),
            Op::SBvToFp => "(_ to_fp 11 53) RNE".into(),
            Op::UBvToFp => "(_ to_fp_unsigned 11 53) RNE".into(),
            Op::FpToSBv(w) => format!("(_ fp.to_sbv {w}) RTZ"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term<V> {
    Const(Value),
    Var(V),
    App(Op, Vec<Term<V>>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SortError {
    #[error("operator {op:?} applied to sorts [{found}]")]
    Mismatch { op: Op, found: String },
    #[error("unsupported sort {0}")]
    UnsupportedSort(Sort),
}

impl<V> Term<V> {
    pub fn tt() -> Self {
        Term::Const(Value::Bool(true))
    }

    pub fn ff() -> Self {
        Term::Const(Value::Bool(false))
    }

    pub fn bool(b: bool) -> Self {
        Term::Const(Value::Bool(b))
    }

    pub fn bv(b: BitVec) -> Self {
        Term::Const(Value::BV(b))
    }

    pub fn bv_u64(width: u32, v: u64) -> Self {
        Term::bv(BitVec::from_u64(width, v))
    }

    pub fn fp(f: f64) -> Self {
        Term::Const(Value::FP(f))
    }

    pub fn app(op: Op, args: Vec<Term<V>>) -> Self {
        Term::App(op, args)
    }

    pub fn un(op: Op, a: Term<V>) -> Self {
        Term::App(op, vec![a])
    }

    pub fn bin(op: Op, a: Term<V>, b: Term<V>) -> Self {
        Term::App(op, vec![a, b])
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::Const(Value::Bool(true)))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Term::Const(Value::Bool(false)))
    }

    pub fn as_const(&self) -> Option<&Value> {
        match self {
            Term::Const(v) => Some(v),
            _ => None,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }

    pub fn visit_vars(&self, f: &mut dyn FnMut(&V)) {
        match self {
            Term::Var(v) => f(v),
            Term::Const(_) => {}
            Term::App(_, args) => {
                for a in args {
                    a.visit_vars(f);
                }
            }
        }
    }

    /// Replaces leaves, keeping the operator structure.
    pub fn map_vars<W>(&self, f: &mut dyn FnMut(&V) -> Term<W>) -> Term<W> {
        match self {
            Term::Var(v) => f(v),
            Term::Const(c) => Term::Const(*c),
            Term::App(op, args) => Term::App(*op, args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }
}

impl<V: Clone + PartialEq> Term<V> {
    pub fn not(a: Term<V>) -> Self {
        match a {
            Term::Const(Value::Bool(b)) => Term::bool(!b),
            Term::App(Op::Not, mut args) => args.pop().expect("unary"),
            a => Term::un(Op::Not, a),
        }
    }

    /// Conjunction with constant folding and flattening.
    pub fn and(items: Vec<Term<V>>) -> Self {
        let mut out = Vec::new();
        for t in items {
            match t {
                Term::Const(Value::Bool(true)) => {}
                Term::Const(Value::Bool(false)) => return Term::ff(),
                Term::App(Op::And, args) => out.extend(args),
                t => out.push(t),
            }
        }
        match out.len() {
            0 => Term::tt(),
            1 => out.pop().expect("one"),
            _ => Term::App(Op::And, out),
        }
    }

    pub fn or(items: Vec<Term<V>>) -> Self {
        let mut out: Vec<Term<V>> = Vec::new();
        for t in items {
            match t {
                Term::Const(Value::Bool(false)) => {}
                Term::Const(Value::Bool(true)) => return Term::tt(),
                Term::App(Op::Or, args) => out.extend(args),
                t => out.push(t),
            }
        }
        // `a or not a` collapses, which restores guards at if/else joins.
        for i in 0..out.len() {
            for j in 0..out.len() {
                if i != j {
                    if let Term::App(Op::Not, inner) = &out[j] {
                        if inner[0] == out[i] {
                            return Term::tt();
                        }
                    }
                }
            }
        }
        match out.len() {
            0 => Term::ff(),
            1 => out.pop().expect("one"),
            _ => Term::App(Op::Or, out),
        }
    }

    pub fn implies(a: Term<V>, b: Term<V>) -> Self {
        if a.is_true() {
            return b;
        }
        if a.is_false() || b.is_true() {
            return Term::tt();
        }
        Term::bin(Op::Implies, a, b)
    }

    pub fn ite(c: Term<V>, a: Term<V>, b: Term<V>) -> Self {
        if c.is_true() {
            return a;
        }
        if c.is_false() {
            return b;
        }
        if a == b {
            return a;
        }
        Term::App(Op::Ite, vec![c, a, b])
    }

    pub fn eq(a: Term<V>, b: Term<V>) -> Self {
        Term::bin(Op::Eq, a, b)
    }
}

/// Result sort of `op` applied to `args`, or a sort error.
pub fn op_sort(op: Op, args: &[Sort]) -> Result<Sort, SortError> {
    use Sort::*;
    let bad = || SortError::Mismatch {
        op,
        found: args.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "),
    };
    let all_bool = || args.iter().all(|s| *s == Bool);
    match op {
        Op::Not => (args == [Bool]).then_some(Bool).ok_or_else(bad),
        Op::And | Op::Or => (!args.is_empty() && all_bool()).then_some(Bool).ok_or_else(bad),
        Op::Implies | Op::Xor => (args == [Bool, Bool]).then_some(Bool).ok_or_else(bad),
        Op::Eq => (args.len() == 2 && args[0] == args[1]).then_some(Bool).ok_or_else(bad),
        Op::Ite => (args.len() == 3 && args[0] == Bool && args[1] == args[2])
            .then_some(args[1])
            .ok_or_else(bad),
        Op::BvNeg | Op::BvNot => match args {
            [BV(w)] => Ok(BV(*w)),
            _ => Err(bad()),
        },
        Op::BvAdd
        | Op::BvSub
        | Op::BvMul
        | Op::BvUDiv
        | Op::BvURem
        | Op::BvSDiv
        | Op::BvSRem
        | Op::BvShl
        | Op::BvLShr
        | Op::BvAShr
        | Op::BvAnd
        | Op::BvOr
        | Op::BvXor => match args {
            [BV(a), BV(b)] if a == b => Ok(BV(*a)),
            _ => Err(bad()),
        },
        Op::BvUlt | Op::BvUle | Op::BvSlt | Op::BvSle => match args {
            [BV(a), BV(b)] if a == b => Ok(Bool),
            _ => Err(bad()),
        },
        Op::ZeroExt(n) | Op::SignExt(n) => match args {
            [BV(w)] => Ok(BV(w + n)),
            _ => Err(bad()),
        },
        Op::Extract(h, l) => match args {
            [BV(w)] if h < *w && l <= h => Ok(BV(h - l + 1)),
            _ => Err(bad()),
        },
        Op::FpAdd | Op::FpSub | Op::FpMul | Op::FpDiv => {
            (args == [FP, FP]).then_some(FP).ok_or_else(bad)
        }
        Op::FpNeg | Op::FpAbs => (args == [FP]).then_some(FP).ok_or_else(bad),
        Op::FpLt | Op::FpLeq | Op::FpEq => (args == [FP, FP]).then_some(Bool).ok_or_else(bad),
        Op::SBvToFp | Op::UBvToFp => match args {
            [BV(_)] => Ok(FP),
            _ => Err(bad()),
        },
        Op::FpToSBv(w) => (args == [FP]).then_some(BV(w)).ok_or_else(bad),
    }
}

impl<V> Term<V> {
    /// Checks well-sortedness and returns the term's sort.
    pub fn sort(&self, var_sort: &dyn Fn(&V) -> Sort) -> Result<Sort, SortError> {
        match self {
            Term::Const(v) => Ok(v.sort()),
            Term::Var(v) => Ok(var_sort(v)),
            Term::App(op, args) => {
                let sorts = args
                    .iter()
                    .map(|a| a.sort(var_sort))
                    .collect::<Result<Vec<_>, _>>()?;
                op_sort(*op, &sorts)
            }
        }
    }

    /// Evaluates under SMT-LIB semantics.
    pub fn eval(&self, env: &dyn Fn(&V) -> Value) -> Value {
        match self {
            Term::Const(v) => *v,
            Term::Var(v) => env(v),
            Term::App(op, args) => match op {
                Op::And => Value::Bool(args.iter().all(|a| a.eval(env).as_bool())),
                Op::Or => Value::Bool(args.iter().any(|a| a.eval(env).as_bool())),
                Op::Implies => {
                    Value::Bool(!args[0].eval(env).as_bool() || args[1].eval(env).as_bool())
                }
                Op::Ite => {
                    if args[0].eval(env).as_bool() {
                        args[1].eval(env)
                    } else {
                        args[2].eval(env)
                    }
                }
                _ => {
                    let vals: Vec<Value> = args.iter().map(|a| a.eval(env)).collect();
                    apply(*op, &vals)
                }
            },
        }
    }
}

/// Applies a strict operator to evaluated arguments.
pub fn apply(op: Op, v: &[Value]) -> Value {
    let b = |i: usize| v[i].as_bv();
    let f = |i: usize| v[i].as_fp();
    match op {
        Op::Not => Value::Bool(!v[0].as_bool()),
        Op::And => Value::Bool(v.iter().all(|x| x.as_bool())),
        Op::Or => Value::Bool(v.iter().any(|x| x.as_bool())),
        Op::Implies => Value::Bool(!v[0].as_bool() || v[1].as_bool()),
        Op::Xor => Value::Bool(v[0].as_bool() != v[1].as_bool()),
        Op::Eq => Value::Bool(v[0].same(&v[1])),
        Op::Ite => {
            if v[0].as_bool() {
                v[1]
            } else {
                v[2]
            }
        }
        Op::BvNeg => Value::BV(b(0).neg()),
        Op::BvNot => Value::BV(b(0).not()),
        Op::BvAdd => Value::BV(b(0).add(&b(1))),
        Op::BvSub => Value::BV(b(0).sub(&b(1))),
        Op::BvMul => Value::BV(b(0).mul(&b(1))),
        Op::BvUDiv => Value::BV(b(0).udiv(&b(1))),
        Op::BvURem => Value::BV(b(0).urem(&b(1))),
        Op::BvSDiv => Value::BV(b(0).sdiv(&b(1))),
        Op::BvSRem => Value::BV(b(0).srem(&b(1))),
        Op::BvShl => Value::BV(b(0).shl(&b(1))),
        Op::BvLShr => Value::BV(b(0).lshr(&b(1))),
        Op::BvAShr => Value::BV(b(0).ashr(&b(1))),
        Op::BvAnd => Value::BV(b(0).and(&b(1))),
        Op::BvOr => Value::BV(b(0).or(&b(1))),
        Op::BvXor => Value::BV(b(0).xor(&b(1))),
        Op::BvUlt => Value::Bool(b(0).ucmp(&b(1)) == Ordering::Less),
        Op::BvUle => Value::Bool(b(0).ucmp(&b(1)) != Ordering::Greater),
        Op::BvSlt => Value::Bool(b(0).scmp(&b(1)) == Ordering::Less),
        Op::BvSle => Value::Bool(b(0).scmp(&b(1)) != Ordering::Greater),
        Op::ZeroExt(n) => Value::BV(b(0).zext(n)),
        Op::SignExt(n) => Value::BV(b(0).sext(n)),
        Op::Extract(h, l) => Value::BV(b(0).extract(h, l)),
        Op::FpAdd => Value::FP(f(0) + f(1)),
        Op::FpSub => Value::FP(f(0) - f(1)),
        Op::FpMul => Value::FP(f(0) * f(1)),
        Op::FpDiv => Value::FP(f(0) / f(1)),
        Op::FpNeg => Value::FP(-f(0)),
        Op::FpAbs => Value::FP(f(0).abs()),
        Op::FpLt => Value::Bool(f(0) < f(1)),
        Op::FpLeq => Value::Bool(f(0) <= f(1)),
        Op::FpEq => Value::Bool(f(0) == f(1)),
        Op::SBvToFp => Value::FP(bv_to_f64(&b(0), true)),
        Op::UBvToFp => Value::FP(bv_to_f64(&b(0), false)),
        Op::FpToSBv(w) => {
            let x = f(0).trunc();
            let v = if x.is_finite() {
                num_bigint::BigInt::from(x as i128)
            } else {
                num_bigint::BigInt::from(0)
            };
            Value::BV(BitVec::from_bigint(w, &v))
        }
    }
}

/// Correctly rounded (round-nearest-even) conversion of a bit-vector.
fn bv_to_f64(b: &BitVec, signed: bool) -> f64 {
    let neg = signed && b.msb();
    let mag = if neg { b.neg() } else { *b };
    let mut bits = mag.bits;
    if signed && neg && mag.msb() {
        // The most negative value: its magnitude is exactly 2^(w-1).
        bits = U256::one() << (b.width as usize - 1);
    }
    let r = u256_to_f64(bits);
    if neg {
        -r
    } else {
        r
    }
}

fn u256_to_f64(x: U256) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let n = x.bits();
    if n <= 64 {
        return x.low_u64() as f64;
    }
    // Keep 64 significant bits plus a sticky bit and let the u64 -> f64
    // conversion round once.
    let shift = n - 64;
    let top = (x >> shift).low_u64();
    let sticky = !(x & ((U256::one() << shift) - 1)).is_zero();
    let top = if sticky { top | 1 } else { top };
    (top as f64) * 2f64.powi(shift as i32)
}

impl<V> Term<V> {
    /// SMT-LIB rendering with `name` giving each leaf's symbol.
    pub fn to_smt(&self, name: &dyn Fn(&V) -> String) -> String {
        let mut out = String::new();
        self.write_smt(&mut out, name);
        out
    }

    pub fn write_smt(&self, out: &mut String, name: &dyn Fn(&V) -> String) {
        match self {
            Term::Const(v) => out.push_str(&v.smt_literal()),
            Term::Var(v) => out.push_str(&name(v)),
            Term::App(op, args) => {
                out.push('(');
                out.push_str(&op.smt_name());
                for a in args {
                    out.push(' ');
                    a.write_smt(out, name);
                }
                out.push(')');
            }
        }
    }
}

/// Quotes an SMT-LIB symbol when it is not a simple symbol.
pub fn smt_symbol(s: &str) -> String {
    let simple = !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        s.to_string()
    } else {
        format!("|{}|", s.replace('|', "_").replace('\\', "_"))
    }
}

/// Constant folding over a term whose leaves may be known.
pub fn fold<V: Clone + PartialEq>(t: &Term<V>) -> Term<V> {
    match t {
        Term::Const(_) | Term::Var(_) => t.clone(),
        Term::App(op, args) => {
            let args: Vec<Term<V>> = args.iter().map(fold).collect();
            match op {
                Op::And => return Term::and(args),
                Op::Or => return Term::or(args),
                Op::Not => return Term::not(args.into_iter().next().expect("unary")),
                Op::Implies => {
                    let mut it = args.into_iter();
                    let (a, b) = (it.next().expect("a"), it.next().expect("b"));
                    return Term::implies(a, b);
                }
                Op::Ite => {
                    let mut it = args.into_iter();
                    let (c, a, b) = (
                        it.next().expect("c"),
                        it.next().expect("a"),
                        it.next().expect("b"),
                    );
                    return Term::ite(c, a, b);
                }
                _ => {}
            }
            if args.iter().all(|a| matches!(a, Term::Const(_))) {
                let vals: Vec<Value> = args
                    .iter()
                    .map(|a| *a.as_const().expect("const"))
                    .collect();
                return Term::Const(apply(*op, &vals));
            }
            if *op == Op::Eq && args[0] == args[1] && !matches!(args[0], Term::Const(Value::FP(_))) {
                return Term::tt();
            }
            Term::App(*op, args)
        }
    }
}

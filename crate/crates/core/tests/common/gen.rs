//! Random small programs over ≤ 3 bounded nondet inputs, with a reference
//! interpreter written against Python semantics on 32-bit wrapping ints.

use rand::rngs::StdRng;
use rand::Rng;
use serde_json::Value;

use super::py;

#[derive(Debug, Clone)]
pub enum IntE {
    Var(usize),
    Lit(i32),
    Bin(&'static str, Box<IntE>, Box<IntE>),
    Neg(Box<IntE>),
}

#[derive(Debug, Clone)]
pub enum BoolE {
    Var(usize),
    Lit(bool),
    Cmp(&'static str, Box<IntE>, Box<IntE>),
    Not(Box<BoolE>),
    And(Box<BoolE>, Box<BoolE>),
    Or(Box<BoolE>, Box<BoolE>),
}

#[derive(Debug, Clone)]
pub enum Stmt {
    SetInt(usize, IntE),
    SetBool(usize, BoolE),
    If(BoolE, Vec<Stmt>, Vec<Stmt>),
    /// `c = 0; while c < n: body; c = c + 1` on a dedicated counter.
    Repeat(usize, u32, Vec<Stmt>),
    Assert(BoolE),
}

#[derive(Debug, Clone, Copy)]
pub enum Input {
    Int { lo: i32, hi: i32 },
    Bool,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub inputs: Vec<Input>,
    /// Input `k` is stored in int variable `k` or bool variable `k`.
    pub ints: usize,
    pub bools: usize,
    pub counters: usize,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn max_repeat(&self) -> u32 {
        fn walk(s: &[Stmt]) -> u32 {
            s.iter()
                .map(|s| match s {
                    Stmt::If(_, a, b) => walk(a).max(walk(b)),
                    Stmt::Repeat(_, n, b) => (*n).max(walk(b)),
                    _ => 0,
                })
                .max()
                .unwrap_or(0)
        }
        walk(&self.body)
    }

    pub fn domain(&self) -> u64 {
        self.inputs
            .iter()
            .map(|i| match i {
                Input::Int { lo, hi } => (hi - lo + 1) as u64,
                Input::Bool => 2,
            })
            .product()
    }
}

const INT_OPS: &[&str] = &["Add", "Sub", "Mult", "FloorDiv", "Mod", "BitAnd", "BitOr", "BitXor"];
const CMP_OPS: &[&str] = &["Eq", "NotEq", "Lt", "LtE", "Gt", "GtE"];

struct G<'a> {
    rng: &'a mut StdRng,
    ints: usize,
    bools: usize,
    counters: usize,
}

impl G<'_> {
    fn int(&mut self, depth: u32) -> IntE {
        let r = self.rng.random_range(0..10);
        if depth == 0 || r < 4 {
            return if self.rng.random_bool(0.6) {
                IntE::Var(self.rng.random_range(0..self.ints))
            } else {
                IntE::Lit(self.rng.random_range(-9..=9))
            };
        }
        if r == 9 {
            return IntE::Neg(Box::new(self.int(depth - 1)));
        }
        let op = INT_OPS[self.rng.random_range(0..INT_OPS.len())];
        IntE::Bin(op, Box::new(self.int(depth - 1)), Box::new(self.int(depth - 1)))
    }

    fn boolean(&mut self, depth: u32) -> BoolE {
        let r = self.rng.random_range(0..10);
        if depth == 0 || r < 2 {
            return if self.bools > 0 && self.rng.random_bool(0.7) {
                BoolE::Var(self.rng.random_range(0..self.bools))
            } else {
                BoolE::Lit(self.rng.random_bool(0.5))
            };
        }
        match r {
            2..=5 => {
                let op = CMP_OPS[self.rng.random_range(0..CMP_OPS.len())];
                BoolE::Cmp(op, Box::new(self.int(depth - 1)), Box::new(self.int(depth - 1)))
            }
            6 => BoolE::Not(Box::new(self.boolean(depth - 1))),
            7 => BoolE::And(Box::new(self.boolean(depth - 1)), Box::new(self.boolean(depth - 1))),
            _ => BoolE::Or(Box::new(self.boolean(depth - 1)), Box::new(self.boolean(depth - 1))),
        }
    }

    fn stmts(&mut self, n: usize, depth: u32) -> Vec<Stmt> {
        (0..n).map(|_| self.stmt(depth)).collect()
    }

    fn stmt(&mut self, depth: u32) -> Stmt {
        let r = self.rng.random_range(0..12);
        match r {
            0..=4 => Stmt::SetInt(self.rng.random_range(0..self.ints), self.int(2)),
            5 if self.bools > 0 => Stmt::SetBool(self.rng.random_range(0..self.bools), self.boolean(2)),
            6 | 7 if depth > 0 => {
                let c = self.boolean(2);
                let a = self.rng.random_range(1..3);
                let b = self.rng.random_range(0..3);
                Stmt::If(c, self.stmts(a, depth - 1), self.stmts(b, depth - 1))
            }
            8 if depth > 0 => {
                let k = self.counters;
                self.counters += 1;
                let n = self.rng.random_range(1..4);
                let len = self.rng.random_range(1..3);
                Stmt::Repeat(k, n, self.stmts(len, depth - 1))
            }
            _ => Stmt::Assert(self.boolean(2)),
        }
    }
}

pub fn random_program(rng: &mut StdRng) -> Program {
    let n_inputs = rng.random_range(1..=3);
    let inputs: Vec<Input> = (0..n_inputs)
        .map(|_| {
            if rng.random_bool(0.3) {
                Input::Bool
            } else {
                let width = rng.random_range(1..=24);
                let lo = rng.random_range(-128..=(127 - width + 1));
                Input::Int { lo, hi: lo + width - 1 }
            }
        })
        .collect();
    let n_int_inputs = inputs.iter().filter(|i| matches!(i, Input::Int { .. })).count();
    let n_bool_inputs = inputs.len() - n_int_inputs;
    let ints = n_int_inputs + rng.random_range(1..=2);
    let bools = n_bool_inputs + usize::from(rng.random_bool(0.5));
    let mut g = G {
        rng,
        ints,
        bools,
        counters: 0,
    };
    let len = g.rng.random_range(2..6);
    let mut body = g.stmts(len, 2);
    body.push(Stmt::Assert(g.boolean(3)));
    Program {
        inputs,
        ints,
        bools,
        counters: g.counters,
        body,
    }
}

// ---------------------------------------------------------------- emission

fn iname(k: usize) -> String {
    format!("i{k}")
}

fn bname(k: usize) -> String {
    format!("b{k}")
}

fn cname(k: usize) -> String {
    format!("c{k}")
}

fn emit_int(e: &IntE) -> Value {
    match e {
        IntE::Var(k) => py::name(&iname(*k)),
        IntE::Lit(v) => py::int(*v as i64),
        IntE::Bin(op, a, b) => py::bin(emit_int(a), op, emit_int(b)),
        IntE::Neg(a) => py::neg(emit_int(a)),
    }
}

fn emit_bool(e: &BoolE) -> Value {
    match e {
        BoolE::Var(k) => py::name(&bname(*k)),
        BoolE::Lit(b) => py::boolean(*b),
        BoolE::Cmp(op, a, b) => py::cmp(emit_int(a), op, emit_int(b)),
        BoolE::Not(a) => py::not(emit_bool(a)),
        BoolE::And(a, b) => py::and(vec![emit_bool(a), emit_bool(b)]),
        BoolE::Or(a, b) => py::or(vec![emit_bool(a), emit_bool(b)]),
    }
}

fn emit_stmts(s: &[Stmt]) -> Vec<Value> {
    let mut out = Vec::new();
    for st in s {
        match st {
            Stmt::SetInt(k, e) => out.push(py::assign(&iname(*k), emit_int(e))),
            Stmt::SetBool(k, e) => out.push(py::assign(&bname(*k), emit_bool(e))),
            Stmt::If(c, a, b) => out.push(py::if_(emit_bool(c), emit_stmts(a), emit_stmts(b))),
            Stmt::Repeat(k, n, body) => {
                out.push(py::assign(&cname(*k), py::int(0)));
                let mut b = emit_stmts(body);
                b.push(py::assign(&cname(*k), py::bin(py::name(&cname(*k)), "Add", py::int(1))));
                out.push(py::while_(py::cmp(py::name(&cname(*k)), "Lt", py::int(*n as i64)), b));
            }
            Stmt::Assert(c) => out.push(py::assert_(emit_bool(c))),
        }
    }
    out
}

pub fn to_json(p: &Program) -> Value {
    let mut body = Vec::new();
    let (mut ik, mut bk) = (0, 0);
    for i in &p.inputs {
        match i {
            Input::Int { lo, hi } => {
                let v = iname(ik);
                body.push(py::ann(&v, "int", py::call("nondet_int", vec![])));
                body.push(py::assume(py::and(vec![
                    py::cmp(py::name(&v), "GtE", py::int(*lo as i64)),
                    py::cmp(py::name(&v), "LtE", py::int(*hi as i64)),
                ])));
                ik += 1;
            }
            Input::Bool => {
                body.push(py::ann(&bname(bk), "bool", py::call("nondet_bool", vec![])));
                bk += 1;
            }
        }
    }
    for k in ik..p.ints {
        body.push(py::ann(&iname(k), "int", py::int(0)));
    }
    for k in bk..p.bools {
        body.push(py::ann(&bname(k), "bool", py::boolean(false)));
    }
    for k in 0..p.counters {
        body.push(py::ann(&cname(k), "int", py::int(0)));
    }
    body.extend(emit_stmts(&p.body));
    py::module(body)
}

// ---------------------------------------------------------------- reference

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefOutcome {
    Ok,
    /// Assertion or division by zero.
    Violation,
}

struct Env {
    ints: Vec<i32>,
    bools: Vec<bool>,
}

struct Violated;

fn floor_div(a: i32, b: i32) -> i32 {
    let q = a.wrapping_div(b);
    if (a.wrapping_rem(b) != 0) && ((a < 0) != (b < 0)) {
        q.wrapping_sub(1)
    } else {
        q
    }
}

fn floor_mod(a: i32, b: i32) -> i32 {
    let r = a.wrapping_rem(b);
    if r != 0 && ((r < 0) != (b < 0)) {
        r.wrapping_add(b)
    } else {
        r
    }
}

fn eval_int(e: &IntE, env: &Env) -> Result<i32, Violated> {
    Ok(match e {
        IntE::Var(k) => env.ints[*k],
        IntE::Lit(v) => *v,
        IntE::Neg(a) => eval_int(a, env)?.wrapping_neg(),
        IntE::Bin(op, a, b) => {
            let x = eval_int(a, env)?;
            let y = eval_int(b, env)?;
            match *op {
                "Add" => x.wrapping_add(y),
                "Sub" => x.wrapping_sub(y),
                "Mult" => x.wrapping_mul(y),
                "FloorDiv" | "Mod" if y == 0 => return Err(Violated),
                "FloorDiv" => floor_div(x, y),
                "Mod" => floor_mod(x, y),
                "BitAnd" => x & y,
                "BitOr" => x | y,
                "BitXor" => x ^ y,
                _ => unreachable!(),
            }
        }
    })
}

fn eval_bool(e: &BoolE, env: &Env) -> Result<bool, Violated> {
    Ok(match e {
        BoolE::Var(k) => env.bools[*k],
        BoolE::Lit(b) => *b,
        BoolE::Not(a) => !eval_bool(a, env)?,
        BoolE::And(a, b) => eval_bool(a, env)? && eval_bool(b, env)?,
        BoolE::Or(a, b) => eval_bool(a, env)? || eval_bool(b, env)?,
        BoolE::Cmp(op, a, b) => {
            let x = eval_int(a, env)?;
            let y = eval_int(b, env)?;
            match *op {
                "Eq" => x == y,
                "NotEq" => x != y,
                "Lt" => x < y,
                "LtE" => x <= y,
                "Gt" => x > y,
                "GtE" => x >= y,
                _ => unreachable!(),
            }
        }
    })
}

fn exec(s: &[Stmt], env: &mut Env) -> Result<(), Violated> {
    for st in s {
        match st {
            Stmt::SetInt(k, e) => env.ints[*k] = eval_int(e, env)?,
            Stmt::SetBool(k, e) => env.bools[*k] = eval_bool(e, env)?,
            Stmt::If(c, a, b) => {
                if eval_bool(c, env)? {
                    exec(a, env)?
                } else {
                    exec(b, env)?
                }
            }
            Stmt::Repeat(_, n, body) => {
                for _ in 0..*n {
                    exec(body, env)?;
                }
            }
            Stmt::Assert(c) => {
                if !eval_bool(c, env)? {
                    return Err(Violated);
                }
            }
        }
    }
    Ok(())
}

/// Input values in enumeration order: first input most significant.
pub fn assignments(p: &Program) -> Vec<Vec<i32>> {
    let mut out = vec![Vec::new()];
    for i in &p.inputs {
        let vals: Vec<i32> = match i {
            Input::Int { lo, hi } => (*lo..=*hi).collect(),
            Input::Bool => vec![0, 1],
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn run_reference(p: &Program, input: &[i32]) -> RefOutcome {
    let mut env = Env {
        ints: vec![0; p.ints],
        bools: vec![false; p.bools],
    };
    let (mut ik, mut bk) = (0, 0);
    for (i, v) in p.inputs.iter().zip(input) {
        match i {
            Input::Int { .. } => {
                env.ints[ik] = *v;
                ik += 1;
            }
            Input::Bool => {
                env.bools[bk] = *v != 0;
                bk += 1;
            }
        }
    }
    match exec(&p.body, &mut env) {
        Ok(()) => RefOutcome::Ok,
        Err(Violated) => RefOutcome::Violation,
    }
}

/// Some input in the domain violates a property.
pub fn reference_fails(p: &Program) -> bool {
    assignments(p).iter().any(|a| run_reference(p, a) == RefOutcome::Violation)
}

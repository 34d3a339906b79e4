//! Exhaustive decision procedure over bounded input domains.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

use super::{assertion_steps, evaluate_step, property, Failure, StepResult, VcError, VcOutcome};
use crate::bv::BitVec;
use crate::goto::IrType;
use crate::symex::{STerm, Ssa, StepKind, SymId, SymKind};
use crate::term::{Op, Sort, Term, Value};

pub const ORACLE_DOMAIN_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone)]
struct Range {
    lo: BigInt,
    hi: BigInt,
    /// Step index of the first assumption narrowing the range.
    from: Option<usize>,
}

fn signed_of(ssa: &Ssa, s: SymId) -> bool {
    match ssa.symbol(s).var {
        Some(v) => matches!(ssa.vars.get(v).ty, IrType::Int(t) if t.signed),
        None => true,
    }
}

fn full_range(ssa: &Ssa, s: SymId) -> Option<Range> {
    match ssa.symbol(s).sort {
        Sort::Bool => Some(Range {
            lo: 0.into(),
            hi: 1.into(),
            from: None,
        }),
        Sort::BV(w) => {
            let (lo, hi) = if signed_of(ssa, s) {
                (-(BigInt::one() << (w - 1)), (BigInt::one() << (w - 1)) - 1)
            } else {
                (BigInt::from(0), (BigInt::one() << w) - 1)
            };
            Some(Range { lo, hi, from: None })
        }
        Sort::FP => None,
    }
}

/// Follows plain copies back to the symbol they read.
fn origin(copies: &HashMap<SymId, SymId>, mut s: SymId) -> SymId {
    while let Some(n) = copies.get(&s) {
        s = *n;
    }
    s
}

fn conjuncts(t: &STerm) -> Vec<&STerm> {
    match t {
        Term::App(Op::And, args) => args.iter().flat_map(conjuncts).collect(),
        t => vec![t],
    }
}

fn narrow(ssa: &Ssa, ranges: &mut HashMap<SymId, Range>, copies: &HashMap<SymId, SymId>, atom: &STerm, at: usize) {
    let (neg, atom) = match atom {
        Term::App(Op::Not, a) => (true, &a[0]),
        a => (false, a),
    };
    let Term::App(op, args) = atom else { return };
    if args.len() != 2 {
        return;
    }
    // Normalize to `sym op c` or `c op sym`.
    let (sym, c, sym_left) = match (&args[0], &args[1]) {
        (Term::Var(s), Term::Const(Value::BV(c))) => (*s, *c, true),
        (Term::Const(Value::BV(c)), Term::Var(s)) => (*s, *c, false),
        _ => return,
    };
    let sym = origin(copies, sym);
    let Some(r) = ranges.get_mut(&sym) else { return };
    let signed = signed_of(ssa, sym);
    let op_signed = match op {
        Op::BvSlt | Op::BvSle => true,
        Op::BvUlt | Op::BvUle => false,
        Op::Eq => signed,
        _ => return,
    };
    if op_signed != signed {
        return;
    }
    let c = if signed { c.to_signed() } else { c.to_unsigned() };
    let one = BigInt::one();
    // Bounds implied by the atom: (lower, upper) on sym.
    let (lo, hi): (Option<BigInt>, Option<BigInt>) = match (op, sym_left, neg) {
        (Op::Eq, _, false) => (Some(c.clone()), Some(c)),
        (Op::Eq, _, true) => return,
        (Op::BvSlt | Op::BvUlt, true, false) => (None, Some(c - one)),
        (Op::BvSle | Op::BvUle, true, false) => (None, Some(c)),
        (Op::BvSlt | Op::BvUlt, false, false) => (Some(c + one), None),
        (Op::BvSle | Op::BvUle, false, false) => (Some(c), None),
        // not (sym < c)  <=>  sym >= c
        (Op::BvSlt | Op::BvUlt, true, true) => (Some(c), None),
        (Op::BvSle | Op::BvUle, true, true) => (Some(c + one), None),
        (Op::BvSlt | Op::BvUlt, false, true) => (None, Some(c)),
        (Op::BvSle | Op::BvUle, false, true) => (None, Some(c - one)),
        _ => return,
    };
    if let Some(l) = lo {
        if l > r.lo {
            r.lo = l;
            r.from.get_or_insert(at);
        }
    }
    if let Some(h) = hi {
        if h < r.hi {
            r.hi = h;
            r.from.get_or_insert(at);
        }
    }
}

fn to_value(sort: Sort, v: &BigInt) -> Value {
    match sort {
        Sort::Bool => Value::Bool(v == &BigInt::one()),
        Sort::BV(w) => Value::BV(BitVec::from_bigint(w, v)),
        Sort::FP => unreachable!("floats are not enumerated"),
    }
}

/// Enumerates every input assignment in lexicographic order (first input
/// most significant, each ascending) and evaluates the trace on it.
pub fn oracle_check(ssa: &Ssa, multi: bool) -> Result<VcOutcome, VcError> {
    let mut out = VcOutcome::default();
    let asserts = assertion_steps(ssa);
    let live: Vec<usize> = asserts
        .iter()
        .copied()
        .filter(|j| property(ssa, *j).is_some_and(|p| !p.is_true()))
        .collect();
    out.trivial = asserts.len() - live.len();
    out.checked = live.len();
    if live.is_empty() {
        return Ok(out);
    }
    let inputs = ssa.inputs();
    let mut ranges = HashMap::new();
    for s in &inputs {
        match full_range(ssa, *s) {
            Some(r) => {
                ranges.insert(*s, r);
            }
            None => return Err(VcError::UnsupportedSortForOracle(ssa.symbol(*s).name.clone())),
        }
    }
    let mut copies = HashMap::new();
    // Conjuncts of assumptions on the unconditional path so far. An assume
    // guarded only by these is reached by every input that is not blocked.
    let mut assumed: Vec<&STerm> = Vec::new();
    for (i, st) in ssa.steps.iter().enumerate() {
        match &st.kind {
            StepKind::Assign { lhs, rhs: Term::Var(src) } => {
                copies.insert(*lhs, *src);
            }
            StepKind::Assume(c) if st.guard.is_true() || conjuncts(&st.guard).iter().all(|g| assumed.contains(g)) => {
                for a in conjuncts(c) {
                    narrow(ssa, &mut ranges, &copies, a, i);
                    assumed.push(a);
                }
            }
            _ => {}
        }
    }
    let first_live = live[0];
    let mut size = BigInt::one();
    let mut domains = Vec::new();
    for s in &inputs {
        // A narrowing assumption placed after an assertion does not bound the
        // inputs that assertion sees.
        let r = match &ranges[s] {
            r if r.from.is_some_and(|f| f > first_live) => full_range(ssa, *s).expect("enumerable"),
            r => r.clone(),
        };
        let n = if r.hi < r.lo { BigInt::from(0) } else { &r.hi - &r.lo + 1 };
        size *= &n;
        domains.push(r);
    }
    if size > BigInt::from(ORACLE_DOMAIN_LIMIT) {
        return Err(VcError::DomainTooLarge {
            size: size.to_string(),
            limit: ORACLE_DOMAIN_LIMIT,
        });
    }
    if size == BigInt::from(0) {
        return Ok(out);
    }
    let live_set: std::collections::HashSet<usize> = live.iter().copied().collect();
    let mut found: HashMap<usize, Vec<Value>> = HashMap::new();
    let mut current: Vec<BigInt> = domains.iter().map(|r| r.lo.clone()).collect();
    let total = size.to_u64().expect("bounded");
    for _ in 0..total {
        let model: HashMap<SymId, Value> = inputs
            .iter()
            .zip(&current)
            .map(|(s, v)| (*s, to_value(ssa.symbol(*s).sort, v)))
            .collect();
        if let Some(j) = first_violation(ssa, &model, &live_set, &found, multi) {
            for jj in j {
                found.entry(jj).or_insert_with(|| super::evaluate(ssa, &model));
            }
        }
        if !multi && !found.is_empty() {
            // Only an earlier assertion could still change the answer.
            let best = *found.keys().min().expect("non-empty");
            if best == live[0] {
                break;
            }
        }
        // Odometer step, last input least significant.
        for k in (0..current.len()).rev() {
            if current[k] < domains[k].hi {
                current[k] += 1;
                break;
            }
            current[k] = domains[k].lo.clone();
        }
    }
    let mut steps: Vec<usize> = found.keys().copied().collect();
    steps.sort_unstable();
    if !multi {
        steps.truncate(1);
    }
    for j in steps {
        let values = found.remove(&j).expect("present");
        out.failures.push(Failure { step: j, values });
    }
    Ok(out)
}

/// Violated live assertions on this input, stopping at a failed assumption.
fn first_violation(
    ssa: &Ssa,
    model: &HashMap<SymId, Value>,
    live: &std::collections::HashSet<usize>,
    found: &HashMap<usize, Vec<Value>>,
    multi: bool,
) -> Option<Vec<usize>> {
    let mut env: Vec<Value> = ssa
        .symbols
        .iter()
        .enumerate()
        .map(|(i, s)| match model.get(&SymId(i as u32)) {
            Some(v) => *v,
            None => {
                debug_assert!(s.kind != SymKind::Input);
                super::zero(s.sort)
            }
        })
        .collect();
    let mut hits = Vec::new();
    for i in 0..ssa.steps.len() {
        match evaluate_step(ssa, i, &mut env) {
            StepResult::Continue => {}
            StepResult::Blocked => break,
            StepResult::Violated if live.contains(&i) => {
                if !found.contains_key(&i) {
                    hits.push(i);
                }
                if !multi {
                    break;
                }
            }
            StepResult::Violated => {}
        }
    }
    (!hits.is_empty()).then_some(hits)
}

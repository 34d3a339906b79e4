//! Loop unrolling and total inlining into one acyclic entry function.

use std::collections::{HashMap, VecDeque};

use indexmap::IndexMap;

use super::{
    CallArg, GotoFunction, GotoProgram, Instr, Instruction, IrExpr, ParamSlot, PropertyClass, VarId, VarInfo,
    VarTable, Visibility,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnwindOptions {
    /// Loop iterations and active frames per recursive function.
    pub k: u32,
    pub unwinding_assertions: bool,
}

impl Default for UnwindOptions {
    fn default() -> Self {
        UnwindOptions {
            k: 1,
            unwinding_assertions: true,
        }
    }
}

/// `(from, to)` for every jump with `to <= from`.
pub fn back_edges(body: &[Instruction]) -> Vec<(usize, usize)> {
    body.iter()
        .enumerate()
        .filter_map(|(i, ins)| match &ins.kind {
            Instr::Goto { target, .. } if *target <= i => Some((i, *target)),
            _ => None,
        })
        .collect()
}

fn successors(body: &[Instruction], i: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(2);
    match &body[i].kind {
        Instr::End => {}
        Instr::Goto { target, guard, .. } => {
            out.push(*target);
            if guard.is_some() && i + 1 < body.len() {
                out.push(i + 1);
            }
        }
        _ => {
            if i + 1 < body.len() {
                out.push(i + 1)
            }
        }
    }
    out
}

/// Kahn's algorithm over the control-flow graph.
pub fn is_acyclic(body: &[Instruction]) -> bool {
    let n = body.len();
    let mut indeg = vec![0usize; n];
    for i in 0..n {
        for s in successors(body, i) {
            if s < n {
                indeg[s] += 1;
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = queue.pop_front() {
        seen += 1;
        for s in successors(body, i) {
            if s < n {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    queue.push_back(s);
                }
            }
        }
    }
    seen == n
}

fn residual(ins: &Instruction, opts: &UnwindOptions, message: String, out: &mut Vec<Instruction>) {
    let mk = |kind| Instruction {
        kind,
        loc: ins.loc,
        module: ins.module.clone(),
    };
    if opts.unwinding_assertions {
        out.push(mk(Instr::Assert {
            cond: IrExpr::bool(false),
            class: PropertyClass::Unwinding,
            message,
        }));
    }
    out.push(mk(Instr::Assume(IrExpr::bool(false))));
}

/// Unrolls the innermost loop until none is left.
fn unroll_loops(body: Vec<Instruction>, opts: &UnwindOptions) -> Vec<Instruction> {
    let mut body = body;
    loop {
        let edges = back_edges(&body);
        let mut regions: HashMap<usize, usize> = HashMap::new();
        for (from, to) in edges {
            let e = regions.entry(to).or_insert(from);
            *e = (*e).max(from);
        }
        let Some((h, e)) = regions.into_iter().min_by_key(|(h, e)| (e - h, *h)) else {
            return body;
        };
        body = unroll_one(&body, h, e, opts);
    }
}

fn unroll_one(body: &[Instruction], h: usize, e: usize, opts: &UnwindOptions) -> Vec<Instruction> {
    let len = e - h + 1;
    let k = opts.k as usize;
    let inside = |t: usize| t >= h && t <= e;
    let exit = (h..=e).find(|&i| {
        matches!(&body[i].kind, Instr::Goto { target, loop_exit: true, .. } if !inside(*target))
    });
    let prelude = exit.map_or(0, |x| x - h + 1);
    let res_len = prelude + 1 + usize::from(opts.unwinding_assertions);
    let res_start = h + k * len;
    let delta = (k * len + res_len) as isize - len as isize;
    let outside = |t: usize| -> usize {
        if t < h {
            t
        } else if t <= e {
            h
        } else {
            (t as isize + delta) as usize
        }
    };
    let start = |j: usize| if j < k { h + j * len } else { res_start };

    let mut out = Vec::with_capacity((body.len() as isize + delta) as usize);
    for ins in &body[..h] {
        let mut ins = ins.clone();
        if let Instr::Goto { target, .. } = &mut ins.kind {
            *target = outside(*target);
        }
        out.push(ins);
    }
    for j in 0..k {
        let base = start(j);
        for (o, ins) in body[h..=e].iter().enumerate() {
            let mut ins = ins.clone();
            if let Instr::Goto { target, guard, .. } = &mut ins.kind {
                *target = if *target == h {
                    start(j + 1)
                } else if inside(*target) {
                    base + (*target - h)
                } else {
                    outside(*target)
                };
                if guard.is_none() && *target == base + o + 1 {
                    ins.kind = Instr::Skip;
                }
            }
            out.push(ins);
        }
    }
    for ins in &body[h..h + prelude] {
        let mut ins = ins.clone();
        if let Instr::Goto { target, .. } = &mut ins.kind {
            *target = if inside(*target) {
                res_start + (*target - h)
            } else {
                outside(*target)
            };
        }
        out.push(ins);
    }
    let message = format!("unwinding assertion loop at line {}", body[h].loc.line);
    residual(&body[h], opts, message, &mut out);
    for ins in &body[e + 1..] {
        let mut ins = ins.clone();
        if let Instr::Goto { target, .. } = &mut ins.kind {
            *target = outside(*target);
        }
        out.push(ins);
    }
    out
}

struct Inliner<'a> {
    program: &'a GotoProgram,
    bodies: IndexMap<String, Vec<Instruction>>,
    owned: HashMap<String, Vec<VarId>>,
    vars: VarTable,
    instances: HashMap<String, usize>,
    stack: Vec<String>,
    out: Vec<Instruction>,
    opts: UnwindOptions,
}

impl Inliner<'_> {
    fn expand(&mut self, key: &str, map: &HashMap<VarId, VarId>) {
        let body = self.bodies[key].clone();
        let mut starts = Vec::with_capacity(body.len() + 1);
        let mut fixups = Vec::new();
        let m = |v: VarId| *map.get(&v).unwrap_or(&v);
        for ins in &body {
            starts.push(self.out.len());
            match &ins.kind {
                Instr::End => self.out.push(Instruction {
                    kind: Instr::Skip,
                    ..ins.clone()
                }),
                Instr::Goto { target, .. } => {
                    fixups.push((self.out.len(), *target));
                    self.out.push(Instruction {
                        kind: ins.kind.map_vars(&m),
                        ..ins.clone()
                    });
                }
                Instr::Call { lhs, callee, args } => {
                    let active = self.stack.iter().filter(|s| *s == callee).count();
                    if active >= self.opts.k as usize {
                        let f = &self.program.functions[callee];
                        let message = format!("recursion unwinding assertion {}", f.display);
                        residual(ins, &self.opts, message, &mut self.out);
                        continue;
                    }
                    let args: Vec<CallArg> = args
                        .iter()
                        .map(|a| match a {
                            CallArg::Value(e) => CallArg::Value(e.map_vars(&m)),
                            CallArg::Ref(vs) => CallArg::Ref(vs.iter().map(|v| m(*v)).collect()),
                        })
                        .collect();
                    let ret = self.call(callee, &args, ins);
                    if let (Some((l, vis)), Some(r)) = (lhs, ret) {
                        let ty = self.vars.get(r).ty;
                        self.out.push(Instruction {
                            kind: Instr::Assign {
                                lhs: m(*l),
                                rhs: IrExpr::Var(r, ty),
                                vis: *vis,
                            },
                            ..ins.clone()
                        });
                    }
                }
                other => self.out.push(Instruction {
                    kind: other.map_vars(&m),
                    ..ins.clone()
                }),
            }
        }
        starts.push(self.out.len());
        for (pos, t) in fixups {
            if let Instr::Goto { target, .. } = &mut self.out[pos].kind {
                *target = starts[t];
            }
        }
    }

    /// Expands one call and returns the instance's return variable.
    fn call(&mut self, key: &str, args: &[CallArg], site: &Instruction) -> Option<VarId> {
        let f: &GotoFunction = &self.program.functions[key];
        let n = self.instances.entry(key.to_string()).or_insert(0);
        *n += 1;
        let n = *n;
        let mut map = HashMap::new();
        for v in self.owned.get(key).cloned().unwrap_or_default() {
            let info = self.program.vars.get(v);
            let fresh = self.vars.add(VarInfo {
                name: format!("{}${n}", info.name),
                ..info.clone()
            });
            map.insert(v, fresh);
        }
        for (slot, arg) in f.params.iter().zip(args) {
            match (slot, arg) {
                (ParamSlot::Scalar(p), CallArg::Value(e)) => {
                    self.out.push(Instruction {
                        kind: Instr::Assign {
                            lhs: map[p],
                            rhs: e.clone(),
                            vis: Visibility::Hidden,
                        },
                        ..site.clone()
                    });
                }
                (ParamSlot::Ref(ps), CallArg::Ref(vs)) => {
                    for (p, v) in ps.iter().zip(vs) {
                        map.insert(*p, *v);
                    }
                }
                _ => panic!("argument shape mismatch calling {key}"),
            }
        }
        let ret = f.ret.map(|r| map[&r]);
        self.stack.push(key.to_string());
        self.expand(key, &map);
        self.stack.pop();
        ret
    }
}

/// Unrolls every loop `k` times, inlines all calls from the entry point and
/// cuts recursion once a function has `k` active frames.
pub fn unwind(p: &GotoProgram, opts: &UnwindOptions) -> GotoProgram {
    let bodies: IndexMap<String, Vec<Instruction>> = p
        .functions
        .iter()
        .map(|(k, f)| (k.clone(), unroll_loops(f.body.clone(), opts)))
        .collect();
    let mut owned: HashMap<String, Vec<VarId>> = HashMap::new();
    for (id, info) in p.vars.iter() {
        if let Some(o) = &info.owner {
            owned.entry(o.clone()).or_default().push(id);
        }
    }
    let mut inl = Inliner {
        program: p,
        bodies,
        owned,
        vars: p.vars.clone(),
        instances: HashMap::new(),
        stack: Vec::new(),
        out: Vec::new(),
        opts: *opts,
    };
    inl.expand(&p.entry, &HashMap::new());
    let entry = p.entry_function();
    let mut body = inl.out;
    let end_at = entry.body.last().cloned().unwrap_or_else(|| Instruction::new(Instr::End, Default::default(), ""));
    body.push(Instruction {
        kind: Instr::End,
        ..end_at
    });
    let mut functions = IndexMap::new();
    functions.insert(
        p.entry.clone(),
        GotoFunction {
            key: entry.key.clone(),
            display: entry.display.clone(),
            params: Vec::new(),
            ret: None,
            body,
        },
    );
    GotoProgram {
        vars: inl.vars,
        functions,
        entry: p.entry.clone(),
        unwound: Some(opts.k),
    }
}

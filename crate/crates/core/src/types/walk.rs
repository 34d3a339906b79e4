use std::collections::HashMap;

use indexmap::IndexMap;

use super::env::{AttrInfo, Binding, Callee, ClassInfo, Ctx, FunctionInfo, ModuleScope, TypeEnvironment};
use super::{annotation_expr, Diagnostic, TypeError, TypeOptions, VerifierType};
use crate::ast::{
    unparse_expr, Arg, Arguments, Constant, Expr, ExprKind, FunctionDef, Location, Module, Stmt,
    StmtKind,
};
use crate::unit::ProgramUnit;

type R<T> = Result<T, TypeError>;

fn err<T>(reason: impl Into<String>, loc: Location) -> R<T> {
    Err(TypeError::untypeable(reason, loc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pending,
    InProgress,
    Done,
}

struct FnSource<'u> {
    module: String,
    class: Option<String>,
    def: &'u FunctionDef,
}

struct Frame {
    module: String,
    function: Option<String>,
    /// Receiver parameter name and class for methods.
    receiver: Option<(String, String)>,
    locals: IndexMap<String, VerifierType>,
    ret: Option<VerifierType>,
    top_level: bool,
}

impl Frame {
    fn top(module: &str) -> Self {
        Frame {
            module: module.to_string(),
            function: None,
            receiver: None,
            locals: IndexMap::new(),
            ret: None,
            top_level: true,
        }
    }

    fn ctx(&self) -> Ctx<'_> {
        Ctx {
            module: &self.module,
            locals: &self.locals,
        }
    }
}

struct Walker<'u> {
    env: TypeEnvironment,
    recover: bool,
    diags: Vec<Diagnostic>,
    sources: IndexMap<String, FnSource<'u>>,
    status: HashMap<String, Status>,
    out_functions: HashMap<String, FunctionDef>,
    out_class_stmts: HashMap<(String, usize), Stmt>,
}

/// Result of running the typing pass over a whole unit.
struct Analysis {
    unit: ProgramUnit,
    env: TypeEnvironment,
    diagnostics: Vec<Diagnostic>,
}

fn analyze(unit: &ProgramUnit, opts: TypeOptions, recover: bool) -> R<Analysis> {
    let mut w = Walker {
        env: TypeEnvironment::new(opts),
        recover,
        diags: Vec::new(),
        sources: IndexMap::new(),
        status: HashMap::new(),
        out_functions: HashMap::new(),
        out_class_stmts: HashMap::new(),
    };
    let mut out = unit.clone();
    for (name, module) in unit.modules() {
        let body = match w.module(name, module) {
            Ok(b) => b,
            Err(e) if recover => {
                w.diag(name, e);
                module.body.clone()
            }
            Err(e) => return Err(e),
        };
        out.module_mut(name).expect("module exists").body = body;
    }
    Ok(Analysis {
        unit: out,
        env: w.env,
        diagnostics: w.diags,
    })
}

/// Infers missing types and rewrites every plain assignment into an annotated
/// one. Parameters and return types gain explicit annotations.
pub fn infer_and_annotate(unit: &ProgramUnit, opts: TypeOptions) -> R<ProgramUnit> {
    analyze(unit, opts, false).map(|a| a.unit)
}

/// Builds the type environment (functions, classes, scopes) for a unit.
pub fn type_environment(unit: &ProgramUnit, opts: TypeOptions) -> R<TypeEnvironment> {
    analyze(unit, opts, false).map(|a| a.env)
}

/// Collects every type inconsistency instead of stopping at the first.
pub fn check_types(unit: &ProgramUnit, opts: TypeOptions) -> Vec<Diagnostic> {
    match analyze(unit, opts, true) {
        Ok(a) => a.diagnostics,
        Err(e) => vec![Diagnostic {
            module: unit.main_name.clone(),
            loc: e.location(),
            message: e.to_string(),
        }],
    }
}

/// Dotted path under which class `q` can be named from `module`.
fn class_path(env: &TypeEnvironment, module: &str, q: &str) -> Vec<String> {
    let Some(cls) = env.classes.get(q) else {
        return vec![super::short_name(q).to_string()];
    };
    if cls.module == module {
        return vec![cls.name.clone()];
    }
    if let Some(scope) = env.modules.get(module) {
        for (bound, b) in &scope.bindings {
            if matches!(b, Binding::Class(c) if c == q) {
                return vec![bound.clone()];
            }
        }
        for (bound, b) in &scope.bindings {
            if matches!(b, Binding::Module(m) if *m == cls.module) {
                return vec![bound.clone(), cls.name.clone()];
            }
        }
    }
    vec![cls.name.clone()]
}

impl<'u> Walker<'u> {
    fn diag(&mut self, module: &str, e: TypeError) {
        self.diags.push(Diagnostic {
            module: module.to_string(),
            loc: e.location(),
            message: e.to_string(),
        });
    }

    fn annotation(&self, module: &str, ty: &VerifierType, loc: Location) -> Expr {
        annotation_expr(ty, &self.env.opts, loc, &|q| class_path(&self.env, module, q))
    }

    fn scope_mut(&mut self, module: &str) -> &mut ModuleScope {
        self.env.modules.entry(module.to_string()).or_default()
    }

    fn bind(&mut self, module: &str, name: &str, b: Binding, loc: Location) -> R<()> {
        let scope = self.scope_mut(module);
        if let Some(prev) = scope.bindings.get(name) {
            if *prev != b {
                return Err(TypeError::TypeConflict {
                    name: name.to_string(),
                    first: format!("{prev:?}"),
                    second: format!("{b:?}"),
                    loc,
                });
            }
        }
        scope.bindings.insert(name.to_string(), b);
        Ok(())
    }

    fn module(&mut self, name: &str, m: &'u Module) -> R<Vec<Stmt>> {
        self.scope_mut(name);
        for s in &m.body {
            match &s.kind {
                StmtKind::FunctionDef(f) => {
                    self.bind(name, &f.name, Binding::Function(format!("{name}@{}", f.name)), s.loc)?
                }
                StmtKind::ClassDef(c) => {
                    let q = format!("{name}@{}", c.name);
                    self.bind(name, &c.name, Binding::Class(q.clone()), s.loc)?;
                    self.env.classes.insert(
                        q.clone(),
                        ClassInfo {
                            qualified: q,
                            module: name.to_string(),
                            name: c.name.clone(),
                            bases: Vec::new(),
                            attributes: IndexMap::new(),
                            methods: IndexMap::new(),
                            loc: c.loc,
                        },
                    );
                }
                StmtKind::Import(aliases) => {
                    for a in aliases {
                        if a.name.contains('.') {
                            return err("dotted module imports are not supported", s.loc);
                        }
                        self.bind(name, a.bound_name(), Binding::Module(a.name.clone()), s.loc)?;
                    }
                }
                StmtKind::ImportFrom { module, names } => {
                    for a in names {
                        let b = self.imported_binding(module, &a.name, s.loc)?;
                        self.bind(name, a.bound_name(), b, s.loc)?;
                    }
                }
                _ => {}
            }
        }
        for s in &m.body {
            if let StmtKind::FunctionDef(f) = &s.kind {
                let q = format!("{name}@{}", f.name);
                self.register_function(name, None, f, q)?;
            }
        }
        for s in &m.body {
            if let StmtKind::ClassDef(c) = &s.kind {
                let q = format!("{name}@{}", c.name);
                self.class_def(name, &q, c)?;
            }
        }

        let mut frame = Frame::top(name);
        let mut top = Vec::with_capacity(m.body.len());
        for s in &m.body {
            match &s.kind {
                StmtKind::FunctionDef(_) | StmtKind::ClassDef(_) => top.push(None),
                _ => top.push(Some(self.stmt_recover(&mut frame, s)?)),
            }
        }
        let pending: Vec<String> = self
            .sources
            .iter()
            .filter(|(q, src)| src.module == name && self.status[*q] == Status::Pending)
            .map(|(q, _)| q.clone())
            .collect();
        for q in pending {
            if let Err(e) = self.ensure_function(&q) {
                if !self.recover {
                    return Err(e);
                }
                self.diag(name, e);
            }
        }

        let mut body = Vec::with_capacity(m.body.len());
        for (s, out) in m.body.iter().zip(top) {
            match &s.kind {
                StmtKind::FunctionDef(f) => {
                    let q = format!("{name}@{}", f.name);
                    let f = self.out_functions.remove(&q).unwrap_or_else(|| f.clone());
                    body.push(Stmt {
                        kind: StmtKind::FunctionDef(f),
                        loc: s.loc,
                    });
                }
                StmtKind::ClassDef(c) => {
                    let q = format!("{name}@{}", c.name);
                    let mut c = c.clone();
                    for (j, cs) in c.body.iter_mut().enumerate() {
                        if let StmtKind::FunctionDef(f) = &cs.kind {
                            let mq = format!("{q}@{}", f.name);
                            if let Some(nf) = self.out_functions.remove(&mq) {
                                cs.kind = StmtKind::FunctionDef(nf);
                            }
                        } else if let Some(ns) = self.out_class_stmts.remove(&(q.clone(), j)) {
                            *cs = ns;
                        }
                    }
                    body.push(Stmt {
                        kind: StmtKind::ClassDef(c),
                        loc: s.loc,
                    });
                }
                _ => body.push(out.expect("statement processed")),
            }
        }
        Ok(body)
    }

    fn imported_binding(&self, module: &str, name: &str, loc: Location) -> R<Binding> {
        let scope = self.env.modules.get(module).ok_or_else(|| TypeError::UnknownName {
            name: module.to_string(),
            loc,
        })?;
        if let Some(b) = scope.bindings.get(name) {
            return Ok(b.clone());
        }
        if scope.globals.contains_key(name) {
            return Ok(Binding::Global {
                module: module.to_string(),
                name: name.to_string(),
            });
        }
        Err(TypeError::UnknownName {
            name: format!("{module}.{name}"),
            loc,
        })
    }

    fn register_function(
        &mut self,
        module: &str,
        class: Option<&str>,
        f: &'u FunctionDef,
        q: String,
    ) -> R<()> {
        let empty = IndexMap::new();
        let ctx = Ctx {
            module,
            locals: &empty,
        };
        let mut params = Vec::new();
        for (i, a) in f.args.args.iter().enumerate() {
            let ty = if let Some(ann) = &a.annotation {
                let t = self.env.parse_annotation(module, ann)?;
                if t == VerifierType::None {
                    return Err(TypeError::BadAnnotation {
                        text: "None".into(),
                        loc: ann.loc,
                    });
                }
                Some(t)
            } else if i == 0 && class.is_some() {
                Some(VerifierType::Class(class.unwrap().to_string()))
            } else if let Some(d) = f.args.default_for(i) {
                Some(self.env.type_of(&ctx, d, None)?)
            } else {
                None
            };
            if let (Some(t), Some(d)) = (&ty, f.args.default_for(i)) {
                let dt = self.env.type_of(&ctx, d, Some(t))?;
                if !self.env.assignable(t, &dt) {
                    return Err(TypeError::TypeConflict {
                        name: a.name.clone(),
                        first: t.to_string(),
                        second: dt.to_string(),
                        loc: d.loc,
                    });
                }
            }
            params.push((a.name.clone(), ty));
        }
        let ret = match &f.returns {
            Some(r) => Some(self.env.parse_annotation(module, r)?),
            None => None,
        };
        let locals = params
            .iter()
            .filter_map(|(n, t)| Some((n.clone(), t.clone()?)))
            .collect();
        self.env.functions.insert(
            q.clone(),
            FunctionInfo {
                qualified: q.clone(),
                module: module.to_string(),
                class: class.map(str::to_string),
                name: f.name.clone(),
                params,
                defaults: f.args.defaults.len(),
                ret,
                locals,
                loc: f.loc,
            },
        );
        self.sources.insert(
            q.clone(),
            FnSource {
                module: module.to_string(),
                class: class.map(str::to_string),
                def: f,
            },
        );
        self.status.insert(q, Status::Pending);
        Ok(())
    }

    fn resolve_base(&self, module: &str, b: &Expr) -> R<Option<String>> {
        match b.dotted_path().as_deref() {
            Some(["object"]) => Ok(None),
            Some([n]) => match self.env.binding(module, n) {
                Some(Binding::Class(q)) => Ok(Some(q.clone())),
                _ => Err(TypeError::UnknownName {
                    name: n.to_string(),
                    loc: b.loc,
                }),
            },
            Some([m, n]) => match self.env.binding(module, m) {
                Some(Binding::Module(target)) => match self.env.binding(target, n) {
                    Some(Binding::Class(q)) => Ok(Some(q.clone())),
                    _ => Err(TypeError::UnknownName {
                        name: format!("{m}.{n}"),
                        loc: b.loc,
                    }),
                },
                _ => Err(TypeError::UnknownName {
                    name: m.to_string(),
                    loc: b.loc,
                }),
            },
            _ => err("unsupported base class expression", b.loc),
        }
    }

    fn class_def(&mut self, module: &str, q: &str, c: &'u crate::ast::ClassDef) -> R<()> {
        let mut bases = Vec::new();
        for b in &c.bases {
            if let Some(base) = self.resolve_base(module, b)? {
                if base == q || self.env.is_subclass(&base, q) {
                    return err(format!("class `{}` inherits from itself", c.name), b.loc);
                }
                if bases.contains(&base) {
                    return err("duplicate base class", b.loc);
                }
                bases.push(base);
            }
        }
        self.env.classes[q].bases = bases;
        let empty = IndexMap::new();
        for (j, s) in c.body.iter().enumerate() {
            match &s.kind {
                StmtKind::FunctionDef(f) => {
                    if f.args.args.is_empty() {
                        return err(
                            format!("method `{}` needs a receiver parameter", f.name),
                            f.loc,
                        );
                    }
                    let mq = format!("{q}@{}", f.name);
                    if self.env.classes[q].methods.contains_key(&f.name) {
                        return Err(TypeError::TypeConflict {
                            name: f.name.clone(),
                            first: "method".into(),
                            second: "method".into(),
                            loc: f.loc,
                        });
                    }
                    self.env.classes[q].methods.insert(f.name.clone(), mq.clone());
                    self.register_function(module, Some(q), f, mq)?;
                }
                StmtKind::AnnAssign {
                    target,
                    annotation,
                    value,
                } => {
                    let Some(name) = target.as_name() else {
                        return err("unsupported class attribute target", target.loc);
                    };
                    let ty = self.env.parse_annotation(module, annotation)?;
                    if let Some(v) = value {
                        let ctx = Ctx {
                            module,
                            locals: &empty,
                        };
                        let vt = self.env.type_of(&ctx, v, Some(&ty))?;
                        if !self.env.assignable(&ty, &vt) {
                            return Err(TypeError::TypeConflict {
                                name: name.to_string(),
                                first: ty.to_string(),
                                second: vt.to_string(),
                                loc: v.loc,
                            });
                        }
                    }
                    self.class_attr(q, name, ty, value.clone(), s.loc)?;
                }
                StmtKind::Assign { targets, value } => {
                    let [target] = &targets[..] else {
                        return err("chained assignment is not supported", s.loc);
                    };
                    let Some(name) = target.as_name() else {
                        return err("unsupported class attribute target", target.loc);
                    };
                    let ctx = Ctx {
                        module,
                        locals: &empty,
                    };
                    let ty = self.env.type_of(&ctx, value, None)?;
                    self.class_attr(q, name, ty.clone(), Some(value.clone()), s.loc)?;
                    let annotation = self.annotation(module, &ty, target.loc);
                    self.out_class_stmts.insert(
                        (q.to_string(), j),
                        Stmt {
                            kind: StmtKind::AnnAssign {
                                target: target.clone(),
                                annotation,
                                value: Some(value.clone()),
                            },
                            loc: s.loc,
                        },
                    );
                }
                StmtKind::Pass => {}
                StmtKind::Expr(Expr {
                    kind: ExprKind::Constant(Constant::Str(_)),
                    ..
                }) => {}
                _ => return err("unsupported statement in class body", s.loc),
            }
        }
        Ok(())
    }

    fn class_attr(
        &mut self,
        q: &str,
        name: &str,
        ty: VerifierType,
        default: Option<Expr>,
        loc: Location,
    ) -> R<()> {
        if !ty.is_scalar() {
            return err(format!("class attribute of type {ty} is not supported"), loc);
        }
        let attrs = &mut self.env.classes[q].attributes;
        if let Some(prev) = attrs.get(name) {
            if prev.ty != ty {
                return Err(TypeError::TypeConflict {
                    name: name.to_string(),
                    first: prev.ty.to_string(),
                    second: ty.to_string(),
                    loc,
                });
            }
        }
        attrs.insert(
            name.to_string(),
            AttrInfo {
                ty,
                default,
                class_level: true,
                loc,
            },
        );
        Ok(())
    }

    fn ensure_function(&mut self, q: &str) -> R<()> {
        match self.status.get(q) {
            Some(Status::Pending) => {}
            _ => return Ok(()),
        }
        self.status.insert(q.to_string(), Status::InProgress);
        let (module, class, def) = {
            let s = &self.sources[q];
            (s.module.clone(), s.class.clone(), s.def)
        };
        let info = self.env.functions[q].clone();
        for (i, (name, ty)) in info.params.iter().enumerate() {
            if ty.is_none() {
                return Err(TypeError::untypeable(
                    format!(
                        "cannot infer the type of parameter `{name}` of `{}`; add an annotation",
                        info.name
                    ),
                    def.args.args[i].loc,
                ));
            }
        }
        let mut frame = Frame {
            module: module.clone(),
            function: Some(q.to_string()),
            receiver: class.map(|c| (info.params[0].0.clone(), c)),
            locals: info.locals.clone(),
            ret: info.ret.clone(),
            top_level: false,
        };
        let body = self.block(&mut frame, &def.body)?;
        let ret = frame.ret.clone().unwrap_or(VerifierType::None);
        {
            let f = &mut self.env.functions[q];
            f.locals = frame.locals;
            f.ret = Some(ret.clone());
        }
        let info = self.env.functions[q].clone();
        let args = def
            .args
            .args
            .iter()
            .zip(&info.params)
            .map(|(a, (_, t))| Arg {
                name: a.name.clone(),
                annotation: a.annotation.clone().or_else(|| {
                    t.as_ref().map(|t| self.annotation(&module, t, a.loc))
                }),
                loc: a.loc,
            })
            .collect();
        let returns = def
            .returns
            .clone()
            .unwrap_or_else(|| self.annotation(&module, &ret, def.loc));
        self.out_functions.insert(
            q.to_string(),
            FunctionDef {
                name: def.name.clone(),
                args: Arguments {
                    args,
                    defaults: def.args.defaults.clone(),
                },
                body,
                returns: Some(returns),
                loc: def.loc,
            },
        );
        self.status.insert(q.to_string(), Status::Done);
        Ok(())
    }

    /// Processes every pending method of `class` and its bases, so that
    /// attributes they introduce become known.
    fn ensure_all_methods(&mut self, class: &str) -> R<()> {
        let mut order = Vec::new();
        let mut stack = vec![class.to_string()];
        while let Some(c) = stack.pop() {
            if order.contains(&c) {
                continue;
            }
            if let Some(info) = self.env.classes.get(&c) {
                stack.extend(info.bases.iter().rev().cloned());
                order.push(c);
            }
        }
        for c in order {
            let methods: Vec<String> = self.env.classes[&c].methods.values().cloned().collect();
            for m in methods {
                self.ensure_function(&m)?;
            }
        }
        Ok(())
    }

    fn block(&mut self, frame: &mut Frame, stmts: &[Stmt]) -> R<Vec<Stmt>> {
        stmts.iter().map(|s| self.stmt_recover(frame, s)).collect()
    }

    fn stmt_recover(&mut self, frame: &mut Frame, s: &Stmt) -> R<Stmt> {
        match self.stmt(frame, s) {
            Ok(s) => Ok(s),
            Err(e) if self.recover => {
                let m = frame.module.clone();
                self.diag(&m, e);
                Ok(s.clone())
            }
            Err(e) => Err(e),
        }
    }

    fn type_in(&self, frame: &Frame, e: &Expr, expected: Option<&VerifierType>) -> R<VerifierType> {
        self.env.type_of(&frame.ctx(), e, expected)
    }

    fn condition(&mut self, frame: &mut Frame, e: &Expr) -> R<()> {
        self.prepare(frame, e)?;
        let t = self.type_in(frame, e, None)?;
        if !self.env.condition_ok(&t) {
            return err(format!("condition has type {t}"), e.loc);
        }
        Ok(())
    }

    fn stmt(&mut self, frame: &mut Frame, s: &Stmt) -> R<Stmt> {
        match &s.kind {
            StmtKind::AnnAssign {
                target,
                annotation,
                value,
            } => {
                let ty = self.env.parse_annotation(&frame.module, annotation)?;
                if !matches!(
                    ty,
                    VerifierType::Bool
                        | VerifierType::Int(_)
                        | VerifierType::Float
                        | VerifierType::List { .. }
                        | VerifierType::Class(_)
                ) {
                    return Err(TypeError::BadAnnotation {
                        text: unparse_expr(annotation),
                        loc: annotation.loc,
                    });
                }
                let vt = match value {
                    Some(v) => {
                        self.prepare(frame, v)?;
                        Some(self.type_in(frame, v, Some(&ty))?)
                    }
                    None => None,
                };
                self.prepare_target(frame, target)?;
                self.bind_target(frame, target, ty, vt.as_ref())?;
                Ok(s.clone())
            }
            StmtKind::Assign { targets, value } => {
                let [target] = &targets[..] else {
                    return err("chained assignment is not supported", s.loc);
                };
                self.prepare(frame, value)?;
                self.prepare_target(frame, target)?;
                let declared = self.target_type(frame, target)?;
                let vt = self.type_in(frame, value, declared.as_ref())?;
                if !matches!(
                    vt,
                    VerifierType::Bool
                        | VerifierType::Int(_)
                        | VerifierType::Float
                        | VerifierType::List { .. }
                        | VerifierType::Class(_)
                ) {
                    return err(format!("cannot assign a value of type {vt}"), value.loc);
                }
                let ty = declared.unwrap_or_else(|| vt.clone());
                let ty = self.bind_target(frame, target, ty, Some(&vt))?;
                let annotation = self.annotation(&frame.module, &ty, target.loc);
                Ok(Stmt {
                    kind: StmtKind::AnnAssign {
                        target: target.clone(),
                        annotation,
                        value: Some(value.clone()),
                    },
                    loc: s.loc,
                })
            }
            StmtKind::AugAssign { target, op, value } => {
                self.prepare(frame, value)?;
                self.prepare_target(frame, target)?;
                let tt = self.type_in(frame, target, None)?;
                let combined = Expr::new(
                    ExprKind::BinOp {
                        left: Box::new(target.clone()),
                        op: *op,
                        right: Box::new(value.clone()),
                    },
                    s.loc,
                );
                let rt = self.type_in(frame, &combined, Some(&tt))?;
                if !self.env.assignable(&tt, &rt) {
                    return Err(TypeError::TypeConflict {
                        name: unparse_expr(target),
                        first: tt.to_string(),
                        second: rt.to_string(),
                        loc: s.loc,
                    });
                }
                Ok(s.clone())
            }
            StmtKind::If { test, body, orelse } => {
                self.condition(frame, test)?;
                let body = self.block(frame, body)?;
                let orelse = self.block(frame, orelse)?;
                Ok(Stmt {
                    kind: StmtKind::If {
                        test: test.clone(),
                        body,
                        orelse,
                    },
                    loc: s.loc,
                })
            }
            StmtKind::While { test, body, orelse } => {
                self.condition(frame, test)?;
                let body = self.block(frame, body)?;
                let orelse = self.block(frame, orelse)?;
                Ok(Stmt {
                    kind: StmtKind::While {
                        test: test.clone(),
                        body,
                        orelse,
                    },
                    loc: s.loc,
                })
            }
            StmtKind::For {
                target,
                iter,
                body,
                orelse,
            } => {
                let Some(var) = target.as_name() else {
                    return err("for-loop target must be a plain name", target.loc);
                };
                let vt = self.for_iter_type(frame, iter)?;
                self.declare(frame, var, vt, target.loc)?;
                let body = self.block(frame, body)?;
                let orelse = self.block(frame, orelse)?;
                Ok(Stmt {
                    kind: StmtKind::For {
                        target: target.clone(),
                        iter: iter.clone(),
                        body,
                        orelse,
                    },
                    loc: s.loc,
                })
            }
            StmtKind::Return(v) => {
                if frame.top_level {
                    return err("`return` outside a function", s.loc);
                }
                let vt = match v {
                    Some(v) => {
                        self.prepare(frame, v)?;
                        self.type_in(frame, v, frame.ret.as_ref())?
                    }
                    None => VerifierType::None,
                };
                match &frame.ret {
                    None => {
                        if matches!(vt, VerifierType::List { .. } | VerifierType::Class(_)) {
                            return err(format!("returning a value of type {vt} is not supported"), s.loc);
                        }
                        frame.ret = Some(vt.clone());
                        let q = frame.function.clone().expect("inside a function");
                        self.env.functions[&q].ret = Some(vt);
                    }
                    Some(rt) => {
                        if !self.env.assignable(rt, &vt) {
                            return Err(TypeError::TypeConflict {
                                name: "return".into(),
                                first: rt.to_string(),
                                second: vt.to_string(),
                                loc: s.loc,
                            });
                        }
                    }
                }
                Ok(s.clone())
            }
            StmtKind::Expr(e) => {
                if !matches!(e.kind, ExprKind::Constant(Constant::Str(_))) {
                    self.prepare(frame, e)?;
                    self.type_in(frame, e, None)?;
                }
                Ok(s.clone())
            }
            StmtKind::Assert { test, .. } => {
                self.condition(frame, test)?;
                Ok(s.clone())
            }
            StmtKind::Pass | StmtKind::Break | StmtKind::Continue => Ok(s.clone()),
            StmtKind::Import(_) | StmtKind::ImportFrom { .. } => {
                if frame.top_level {
                    Ok(s.clone())
                } else {
                    err("imports inside functions are not supported", s.loc)
                }
            }
            StmtKind::FunctionDef(_) | StmtKind::ClassDef(_) => {
                err("nested definitions are not supported", s.loc)
            }
        }
    }

    fn for_iter_type(&mut self, frame: &mut Frame, iter: &Expr) -> R<VerifierType> {
        if let ExprKind::Call { func, args } = &iter.kind {
            if func.as_name() == Some("range") && self.env.variable_type(&frame.ctx(), "range").is_none() {
                if args.is_empty() || args.len() > 3 {
                    return err("range() takes 1 to 3 arguments", iter.loc);
                }
                let mut ty: Option<VerifierType> = None;
                for a in args {
                    self.prepare(frame, a)?;
                }
                for a in args.iter().filter(|a| !super::env::is_int_literal(a)) {
                    let t = self.type_in(frame, a, None)?;
                    if !t.is_int() {
                        return err(format!("range() argument has type {t}"), a.loc);
                    }
                    match &ty {
                        Some(p) if *p != t => {
                            return err(format!("range() arguments of types {p} and {t}"), a.loc)
                        }
                        _ => ty = Some(t),
                    }
                }
                let ty = ty.unwrap_or_else(|| self.env.default_int());
                for a in args.iter().filter(|a| super::env::is_int_literal(a)) {
                    self.type_in(frame, a, Some(&ty))?;
                }
                if let Some(step) = args.get(2) {
                    if super::env::literal_value(step).is_some_and(|v| v == 0.into()) {
                        return err("range() step must not be zero", step.loc);
                    }
                }
                return Ok(ty);
            }
        }
        self.prepare(frame, iter)?;
        match self.type_in(frame, iter, None)? {
            VerifierType::List { elem, .. } => Ok(*elem),
            t => err(
                format!("for loops iterate over range() or a list, not {t}"),
                iter.loc,
            ),
        }
    }

    /// Current type of an assignment target, or `None` if the assignment
    /// declares it.
    fn target_type(&self, frame: &Frame, target: &Expr) -> R<Option<VerifierType>> {
        match &target.kind {
            ExprKind::Name(n) => Ok(if frame.top_level {
                self.env.modules[&frame.module].globals.get(n).cloned()
            } else {
                frame.locals.get(n).cloned()
            }),
            ExprKind::Attribute { value, attr } => {
                if let (Some(base), Some((recv, class))) = (value.as_name(), &frame.receiver) {
                    if base == recv && self.env.find_attribute(class, attr).is_none() {
                        return Ok(None);
                    }
                }
                self.type_in(frame, target, None).map(Some)
            }
            ExprKind::Subscript { .. } => self.type_in(frame, target, None).map(Some),
            _ => err("unsupported assignment target", target.loc),
        }
    }

    fn prepare_target(&mut self, frame: &mut Frame, target: &Expr) -> R<()> {
        match &target.kind {
            ExprKind::Attribute { value, .. } => self.prepare(frame, value),
            ExprKind::Subscript { value, index } => {
                self.prepare(frame, value)?;
                self.prepare(frame, index)
            }
            _ => Ok(()),
        }
    }

    /// Binds an assignment target to `ty`, checking the value type, and
    /// returns the type actually recorded.
    fn bind_target(
        &mut self,
        frame: &mut Frame,
        target: &Expr,
        ty: VerifierType,
        vt: Option<&VerifierType>,
    ) -> R<VerifierType> {
        let conflict = |first: &VerifierType, second: &VerifierType| TypeError::TypeConflict {
            name: unparse_expr(target),
            first: first.to_string(),
            second: second.to_string(),
            loc: target.loc,
        };
        if let Some(vt) = vt {
            if !self.env.assignable(&ty, vt) {
                return Err(conflict(&ty, vt));
            }
        }
        let ty = match (&ty, vt) {
            (
                VerifierType::List { elem, len: None },
                Some(VerifierType::List { len: Some(n), .. }),
            ) => VerifierType::list((**elem).clone(), Some(*n)),
            _ => ty,
        };
        match &target.kind {
            ExprKind::Name(n) => {
                if let VerifierType::List { len: None, .. } = ty {
                    return err("list variables need a list value", target.loc);
                }
                self.declare(frame, n, ty.clone(), target.loc)?;
                Ok(ty)
            }
            ExprKind::Attribute { value, attr } => {
                if let (Some(base), Some((recv, class))) = (value.as_name(), frame.receiver.clone()) {
                    if base == recv && self.env.find_attribute(&class, attr).is_none() {
                        if !ty.is_scalar() {
                            return err(
                                format!("attribute of type {ty} is not supported"),
                                target.loc,
                            );
                        }
                        self.env.classes[&class].attributes.insert(
                            attr.clone(),
                            AttrInfo {
                                ty: ty.clone(),
                                default: None,
                                class_level: false,
                                loc: target.loc,
                            },
                        );
                    }
                }
                let at = self.type_in(frame, target, None)?;
                if at != ty {
                    return Err(conflict(&at, &ty));
                }
                Ok(ty)
            }
            ExprKind::Subscript { .. } => {
                let et = self.type_in(frame, target, None)?;
                if et != ty && !self.env.assignable(&et, &ty) {
                    return Err(conflict(&et, &ty));
                }
                Ok(et)
            }
            _ => err("unsupported assignment target", target.loc),
        }
    }

    fn declare(&mut self, frame: &mut Frame, name: &str, ty: VerifierType, loc: Location) -> R<()> {
        if frame.top_level {
            if let Some(b) = self.env.binding(&frame.module, name) {
                return Err(TypeError::TypeConflict {
                    name: name.to_string(),
                    first: format!("{b:?}"),
                    second: ty.to_string(),
                    loc,
                });
            }
        }
        let map = if frame.top_level {
            &mut self.scope_mut(&frame.module).globals
        } else {
            &mut frame.locals
        };
        match map.get(name) {
            Some(t) if *t == ty => Ok(()),
            Some(t) => Err(TypeError::TypeConflict {
                name: name.to_string(),
                first: t.to_string(),
                second: ty.to_string(),
                loc,
            }),
            None => {
                map.insert(name.to_string(), ty);
                Ok(())
            }
        }
    }

    /// Makes sure every function called inside `e` has been typed, inferring
    /// unannotated parameters from the arguments of the first call seen.
    fn prepare(&mut self, frame: &mut Frame, e: &Expr) -> R<()> {
        match &e.kind {
            ExprKind::Call { func, args } => {
                if let ExprKind::Attribute { value, .. } = &func.kind {
                    self.prepare(frame, value)?;
                }
                for a in args {
                    self.prepare(frame, a)?;
                }
                let callee = self.env.resolve_callee(&frame.ctx(), func)?;
                self.prepare_call(frame, &callee, args)
            }
            ExprKind::Attribute { value, attr } => {
                self.prepare(frame, value)?;
                if let Ok(VerifierType::Class(c)) = self.type_in(frame, value, None) {
                    if self.env.find_attribute(&c, attr).is_none() {
                        self.ensure_all_methods(&c)?;
                    }
                }
                Ok(())
            }
            ExprKind::Name(_) | ExprKind::Constant(_) => Ok(()),
            ExprKind::BinOp { left, right, .. } => {
                self.prepare(frame, left)?;
                self.prepare(frame, right)
            }
            ExprKind::BoolOp { values, .. } | ExprKind::List(values) => {
                for v in values {
                    self.prepare(frame, v)?;
                }
                Ok(())
            }
            ExprKind::UnaryOp { operand, .. } => self.prepare(frame, operand),
            ExprKind::Compare {
                left, comparators, ..
            } => {
                self.prepare(frame, left)?;
                for c in comparators {
                    self.prepare(frame, c)?;
                }
                Ok(())
            }
            ExprKind::Subscript { value, index } => {
                self.prepare(frame, value)?;
                self.prepare(frame, index)
            }
        }
    }

    fn prepare_call(&mut self, frame: &mut Frame, callee: &Callee, args: &[Expr]) -> R<()> {
        let (q, offset) = match callee {
            Callee::Function(q) | Callee::ExplicitMethod(q) => (q.clone(), 0),
            Callee::Method { function, .. } => (function.clone(), 1),
            Callee::Constructor(c) => match self.env.find_method(c, "__init__") {
                Some(f) => (f.to_string(), 1),
                None => return Ok(()),
            },
            Callee::Builtin(_) => return Ok(()),
        };
        let params = self.env.functions[&q].params.clone();
        for (i, arg) in args.iter().enumerate() {
            let pi = i + offset;
            if pi >= params.len() || params[pi].1.is_some() {
                continue;
            }
            let t = match self.type_in(frame, arg, None)? {
                VerifierType::List { elem, .. } => VerifierType::List { elem, len: None },
                t @ (VerifierType::Bool
                | VerifierType::Int(_)
                | VerifierType::Float
                | VerifierType::Class(_)) => t,
                t => return err(format!("cannot pass a value of type {t}"), arg.loc),
            };
            let f = &mut self.env.functions[&q];
            f.params[pi].1 = Some(t.clone());
            f.locals.insert(params[pi].0.clone(), t);
        }
        self.ensure_function(&q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::load_ast_str;

    fn unit(src: &str) -> ProgramUnit {
        ProgramUnit::new("main", load_ast_str(src).unwrap(), "main.json")
    }

    // x = 5
    const ASSIGN_FIVE: &str = r#"{"_type":"Module","body":[{"_type":"Assign",
        "targets":[{"_type":"Name","id":"x","ctx":{"_type":"Store"},"lineno":1,"col_offset":0}],
        "value":{"_type":"Constant","value":5,"lineno":1,"col_offset":4},
        "lineno":1,"col_offset":0}]}"#;

    #[test]
    fn literal_assignment_becomes_int_annotation() {
        let out = infer_and_annotate(&unit(ASSIGN_FIVE), TypeOptions::default()).unwrap();
        match &out.main.body[0].kind {
            StmtKind::AnnAssign { annotation, .. } => assert_eq!(annotation.as_name(), Some("int")),
            other => panic!("expected AnnAssign, got {other:?}"),
        }
        let again = infer_and_annotate(&out, TypeOptions::default()).unwrap();
        assert_eq!(again, out);
    }

    // True + 3.0
    const BOOL_PLUS_FLOAT: &str = r#"{"_type":"Module","body":[{"_type":"Expr",
        "value":{"_type":"BinOp","op":{"_type":"Add"},
          "left":{"_type":"Constant","value":true,"lineno":1,"col_offset":0},
          "right":{"_type":"Constant","value":3.0,"lineno":1,"col_offset":7},
          "lineno":1,"col_offset":0},
        "lineno":1,"col_offset":0}]}"#;

    #[test]
    fn bool_does_not_widen_to_float() {
        let d = check_types(&unit(BOOL_PLUS_FLOAT), TypeOptions::default());
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].loc.line, 1);
    }
}

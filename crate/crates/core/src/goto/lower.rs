//! Lowering of the annotated program to GOTO functions.
//!
//! Objects are flattened into one variable per field and lists into one
//! variable per element. Functions taking lists or objects are specialized
//! per call-site shape (list lengths, concrete receiver classes), so method
//! dispatch is resolved here.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::{
    CallArg, GotoFunction, GotoProgram, Instr, Instruction, IrBinOp, IrExpr, IrType, IrUnOp,
    ParamSlot, PropertyClass, VarId, VarInfo, VarRole, VarTable, Visibility,
};
use crate::ast::{
    unparse_expr, BinOpKind, BoolOpKind, CmpOpKind, Constant, Expr, ExprKind, Location, Stmt,
    StmtKind, UnaryOpKind,
};
use crate::bv::BitVec;
use crate::symtab::{Entry, FunctionDecl, SymbolTable, HARNESS, TOPLEVEL};
use crate::term::Value;
use crate::types::{
    is_int_literal, literal_value, short_name, Binding, Builtin, Callee, Ctx, IntType,
    TypeEnvironment, VerifierType,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowerError {
    #[error("{module}.py {loc}: {reason}")]
    Unsupported {
        module: String,
        loc: Location,
        reason: String,
    },
}

type R<T> = Result<T, LowerError>;

#[derive(Debug, Clone)]
enum Bound {
    Scalar(VarId, IrType),
    List { elems: Vec<VarId>, ty: IrType },
    Object {
        class: String,
        fields: IndexMap<String, (VarId, IrType)>,
    },
}

impl Bound {
    fn vars(&self) -> Vec<VarId> {
        match self {
            Bound::Scalar(v, _) => vec![*v],
            Bound::List { elems, .. } => elems.clone(),
            Bound::Object { fields, .. } => fields.values().map(|(v, _)| *v).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Shape {
    Scalar,
    List(usize),
    Object(String),
}

/// State of the function being lowered.
struct Fx {
    module: String,
    owner: Option<String>,
    display: String,
    locals_ty: IndexMap<String, VerifierType>,
    locals: HashMap<String, Bound>,
    code: Vec<Instruction>,
    labels: Vec<Option<usize>>,
    /// (break, continue) labels of enclosing loops.
    loops: Vec<(usize, usize)>,
    ret: Option<(VarId, IrType)>,
    end_label: usize,
    loc: Location,
}

impl Fx {
    fn new(module: &str, owner: Option<String>, display: &str) -> Self {
        Fx {
            module: module.to_string(),
            owner,
            display: display.to_string(),
            locals_ty: IndexMap::new(),
            locals: HashMap::new(),
            code: Vec::new(),
            labels: vec![None],
            loops: Vec::new(),
            ret: None,
            end_label: 0,
            loc: Location::default(),
        }
    }

    fn label(&mut self) -> usize {
        self.labels.push(None);
        self.labels.len() - 1
    }

    fn place(&mut self, l: usize) {
        self.labels[l] = Some(self.code.len());
    }

    fn emit(&mut self, kind: Instr) {
        let ins = Instruction::new(kind, self.loc, &self.module);
        self.code.push(ins);
    }

    fn goto(&mut self, label: usize, guard: Option<IrExpr>) {
        self.emit(Instr::Goto {
            target: label,
            guard,
            loop_exit: false,
        });
    }

    /// Replaces label ids in jumps with instruction indices.
    fn finish(mut self) -> Vec<Instruction> {
        let labels = self.labels;
        for ins in &mut self.code {
            if let Instr::Goto { target, .. } = &mut ins.kind {
                *target = labels[*target].expect("label placed");
            }
        }
        self.code
    }
}

struct Lowerer<'a> {
    st: &'a SymbolTable,
    env: &'a TypeEnvironment,
    vars: VarTable,
    functions: IndexMap<String, GotoFunction>,
    queue: Vec<(String, String, Vec<Shape>)>,
    requested: HashSet<String>,
    globals: HashMap<String, HashMap<String, Bound>>,
    class_attrs: HashMap<(String, String), (VarId, IrType)>,
    temps: usize,
}

/// Lowers every reachable function body and the entry point.
pub fn lower_to_goto(st: &SymbolTable) -> Result<GotoProgram, LowerError> {
    let mut lw = Lowerer {
        st,
        env: &st.env,
        vars: VarTable::default(),
        functions: IndexMap::new(),
        queue: Vec::new(),
        requested: HashSet::new(),
        globals: HashMap::new(),
        class_attrs: HashMap::new(),
        temps: 0,
    };
    lw.create_globals()?;
    let entry = lw.lower_entry()?;
    lw.drain()?;
    // Functions nobody calls are still lowered when their shape is fixed by
    // their signature, so every property in them is instrumented.
    for (q, d) in &st.functions {
        let mut shapes = Vec::new();
        for (_, t) in &d.params {
            match t {
                VerifierType::List { .. } => break,
                VerifierType::Class(c) => shapes.push(Shape::Object(c.clone())),
                _ => shapes.push(Shape::Scalar),
            }
        }
        if shapes.len() == d.params.len()
            && !lw.functions.keys().any(|k| k == q || k.starts_with(&format!("{q}<")))
        {
            lw.request(q, shapes);
        }
    }
    lw.drain()?;
    let mut functions = IndexMap::new();
    functions.insert(entry.key.clone(), entry);
    functions.extend(lw.functions);
    Ok(GotoProgram {
        vars: lw.vars,
        functions,
        entry: st.entry_name.clone(),
        unwound: None,
    })
}

fn scalar_type(t: &VerifierType) -> Option<IrType> {
    IrType::from_verifier(t)
}

impl<'a> Lowerer<'a> {
    fn err<T>(&self, fx: &Fx, loc: Location, reason: impl Into<String>) -> R<T> {
        Err(LowerError::Unsupported {
            module: fx.module.clone(),
            loc,
            reason: reason.into(),
        })
    }

    fn add_var(&mut self, name: String, display: String, ty: IrType, role: VarRole, owner: &Option<String>) -> VarId {
        self.vars.add(VarInfo {
            name,
            display,
            ty,
            role,
            owner: owner.clone(),
        })
    }

    /// Creates the variables backing a binding of type `ty`.
    #[allow(clippy::too_many_arguments)]
    fn make_bound(
        &mut self,
        name: &str,
        display: &str,
        ty: &VerifierType,
        role: VarRole,
        owner: &Option<String>,
        concrete: Option<&str>,
        len: Option<usize>,
    ) -> Option<Bound> {
        match ty {
            VerifierType::List { elem, len: l } => {
                let et = scalar_type(elem)?;
                let n = len.or(*l)?;
                let elems = (0..n)
                    .map(|i| {
                        self.add_var(format!("{name}[{i}]"), format!("{display}[{i}]"), et, role, owner)
                    })
                    .collect();
                Some(Bound::List { elems, ty: et })
            }
            VerifierType::Class(c) => {
                let class = concrete.unwrap_or(c).to_string();
                let mut fields = IndexMap::new();
                for (f, attr) in self.env.record_fields(&class) {
                    let ft = scalar_type(&attr.ty)?;
                    let v = self.add_var(format!("{name}.{f}"), format!("{display}.{f}"), ft, role, owner);
                    fields.insert(f, (v, ft));
                }
                Some(Bound::Object { class, fields })
            }
            t => {
                let it = scalar_type(t)?;
                Some(Bound::Scalar(
                    self.add_var(name.to_string(), display.to_string(), it, role, owner),
                    it,
                ))
            }
        }
    }

    fn global_name(&self, module: &str, name: &str) -> String {
        if module == self.st.main_module {
            name.to_string()
        } else {
            format!("{module}.{name}")
        }
    }

    fn create_globals(&mut self) -> R<()> {
        let env = self.env;
        for (m, scope) in &env.modules {
            let mut map = HashMap::new();
            for (g, ty) in &scope.globals {
                let concrete = self.toplevel_constructor(m, g);
                let name = self.global_name(m, g);
                let b = self
                    .make_bound(&name, g, ty, VarRole::Global, &None, concrete.as_deref(), None)
                    .ok_or_else(|| LowerError::Unsupported {
                        module: m.clone(),
                        loc: Location::default(),
                        reason: format!("global `{g}` of type {ty} cannot be represented"),
                    })?;
                map.insert(g.clone(), b);
            }
            self.globals.insert(m.clone(), map);
        }
        for c in self.st.classes.keys() {
            let info = &env.classes[c];
            for (a, attr) in &info.attributes {
                if !attr.class_level {
                    continue;
                }
                let Some(t) = scalar_type(&attr.ty) else { continue };
                let display = format!("{}.{a}", info.name);
                let name = self.global_name(&info.module, &display);
                let v = self.add_var(name, display, t, VarRole::Global, &None);
                self.class_attrs.insert((c.clone(), a.clone()), (v, t));
            }
        }
        Ok(())
    }

    /// Class of the first constructor assigned to global `g` of `module`.
    fn toplevel_constructor(&self, module: &str, g: &str) -> Option<String> {
        let empty = IndexMap::new();
        let ctx = Ctx {
            module,
            locals: &empty,
        };
        self.st.toplevel.get(module)?.iter().find_map(|s| match &s.kind {
            StmtKind::AnnAssign { value: Some(v), .. } | StmtKind::Assign { value: v, .. }
                if stmt_target_name(s) == Some(g) =>
            {
                match &v.kind {
                    ExprKind::Call { func, .. } => match self.env.resolve_callee(&ctx, func) {
                        Ok(Callee::Constructor(c)) => Some(c),
                        _ => None,
                    },
                    _ => None,
                }
            }
            _ => None,
        })
    }

    fn request(&mut self, q: &str, shapes: Vec<Shape>) -> String {
        let key = if shapes.iter().all(|s| *s == Shape::Scalar) {
            q.to_string()
        } else {
            let parts: Vec<String> = shapes
                .iter()
                .map(|s| match s {
                    Shape::Scalar => "_".to_string(),
                    Shape::List(n) => n.to_string(),
                    Shape::Object(c) => short_name(c).to_string(),
                })
                .collect();
            format!("{q}<{}>", parts.join(","))
        };
        if self.requested.insert(key.clone()) {
            self.queue.push((key.clone(), q.to_string(), shapes));
        }
        key
    }

    fn drain(&mut self) -> R<()> {
        while let Some((key, q, shapes)) = self.queue.pop() {
            let f = self.lower_function(&key, &q, &shapes)?;
            self.functions.insert(key, f);
        }
        Ok(())
    }

    fn decl(&self, q: &str) -> &'a FunctionDecl {
        &self.st.functions[q]
    }

    fn lower_function(&mut self, key: &str, q: &str, shapes: &[Shape]) -> R<GotoFunction> {
        let d = self.decl(q);
        let display = match &d.class {
            Some(c) => format!("{}.{}", short_name(c), d.name),
            None => d.name.clone(),
        };
        let owner = Some(key.to_string());
        let mut fx = Fx::new(&d.module, owner.clone(), &display);
        fx.loc = d.loc;
        fx.locals_ty = self.env.functions[q].locals.clone();
        let mut params = Vec::new();
        for ((pname, pty), shape) in d.params.iter().zip(shapes) {
            let (concrete, len) = match shape {
                Shape::Scalar => (None, None),
                Shape::List(n) => (None, Some(*n)),
                Shape::Object(c) => (Some(c.as_str()), None),
            };
            let b = self
                .make_bound(
                    &format!("{display}@{pname}"),
                    pname,
                    pty,
                    VarRole::Param,
                    &owner,
                    concrete,
                    len,
                )
                .ok_or_else(|| LowerError::Unsupported {
                    module: d.module.clone(),
                    loc: d.loc,
                    reason: format!("parameter `{pname}` of type {pty}"),
                })?;
            params.push(match &b {
                Bound::Scalar(v, _) => ParamSlot::Scalar(*v),
                other => ParamSlot::Ref(other.vars()),
            });
            fx.locals.insert(pname.clone(), b);
        }
        if let Some(t) = scalar_type(&d.ret) {
            let v = self.add_var(format!("{display}@$return"), "$return".into(), t, VarRole::Return, &owner);
            fx.ret = Some((v, t));
        }
        fx.end_label = fx.label();
        self.block(&mut fx, &d.body)?;
        let end = fx.end_label;
        fx.place(end);
        fx.emit(Instr::End);
        Ok(GotoFunction {
            key: key.to_string(),
            display,
            params: params.clone(),
            ret: fx.ret.map(|r| r.0),
            body: fx.finish(),
        })
    }

    fn lower_entry(&mut self) -> R<GotoFunction> {
        let st = self.st;
        let main = st.main_module.clone();
        match &st.entry {
            Entry::TopLevel { modules } => {
                let mut fx = Fx::new(&main, None, TOPLEVEL);
                fx.end_label = fx.label();
                for m in modules {
                    fx.module = m.clone();
                    self.init_class_attrs(&mut fx, m)?;
                    if let Some(body) = st.toplevel.get(m) {
                        self.block(&mut fx, body)?;
                    }
                }
                fx.module = main;
                let end = fx.end_label;
                fx.place(end);
                fx.emit(Instr::End);
                Ok(GotoFunction {
                    key: st.entry_name.clone(),
                    display: TOPLEVEL.into(),
                    params: Vec::new(),
                    ret: None,
                    body: fx.finish(),
                })
            }
            Entry::Harness {
                target,
                params,
                receiver,
                modules,
            } => {
                let mut fx = Fx::new(&main, None, HARNESS);
                fx.end_label = fx.label();
                for m in modules {
                    fx.module = m.clone();
                    self.init_class_attrs(&mut fx, m)?;
                    let body = st.toplevel.get(m).cloned().unwrap_or_default();
                    for s in &body {
                        let plain = match &s.kind {
                            StmtKind::AnnAssign {
                                target,
                                value: Some(v),
                                ..
                            } => target.as_name().is_some() && !v.contains_call(),
                            _ => false,
                        };
                        if plain {
                            self.stmt(&mut fx, s)?;
                        }
                    }
                }
                fx.module = main.clone();
                let d = self.decl(target);
                fx.loc = d.loc;
                let mut args = Vec::new();
                let mut shapes = Vec::new();
                if let Some(class) = receiver {
                    let b = self.nondet_object(&mut fx, "self", class)?;
                    args.push(CallArg::Ref(b.vars()));
                    shapes.push(Shape::Object(class.clone()));
                }
                let skip = usize::from(receiver.is_some());
                for ((_, ty), (pname, _)) in params.iter().zip(&d.params[skip..]) {
                    match ty {
                        VerifierType::Class(c) => {
                            let b = self.nondet_object(&mut fx, pname, c)?;
                            args.push(CallArg::Ref(b.vars()));
                            shapes.push(Shape::Object(c.clone()));
                        }
                        t => {
                            let it = scalar_type(t).expect("scalar harness parameter");
                            let v = self.add_var(
                                format!("{HARNESS}@{pname}"),
                                pname.clone(),
                                it,
                                VarRole::Local,
                                &None,
                            );
                            fx.emit(Instr::Assign {
                                lhs: v,
                                rhs: IrExpr::Nondet(it),
                                vis: Visibility::Shown,
                            });
                            args.push(CallArg::Value(IrExpr::Var(v, it)));
                            shapes.push(Shape::Scalar);
                        }
                    }
                }
                let key = self.request(target, shapes);
                fx.emit(Instr::Call {
                    lhs: None,
                    callee: key,
                    args,
                });
                let end = fx.end_label;
                fx.place(end);
                fx.emit(Instr::End);
                Ok(GotoFunction {
                    key: st.entry_name.clone(),
                    display: HARNESS.into(),
                    params: Vec::new(),
                    ret: None,
                    body: fx.finish(),
                })
            }
        }
    }

    /// An object of `class` whose fields all start nondeterministic.
    fn nondet_object(&mut self, fx: &mut Fx, pname: &str, class: &str) -> R<Bound> {
        let ty = VerifierType::Class(class.to_string());
        let Some(b) = self.make_bound(
            &format!("{HARNESS}@{pname}"),
            pname,
            &ty,
            VarRole::Local,
            &None,
            Some(class),
            None,
        ) else {
            return self.err(fx, fx.loc, format!("cannot build a nondeterministic {}", short_name(class)));
        };
        if let Bound::Object { fields, .. } = &b {
            for (v, t) in fields.values() {
                fx.emit(Instr::Assign {
                    lhs: *v,
                    rhs: IrExpr::Nondet(*t),
                    vis: Visibility::Shown,
                });
            }
        }
        Ok(b)
    }

    /// Evaluates class-level attribute initializers of `module`'s classes.
    fn init_class_attrs(&mut self, fx: &mut Fx, module: &str) -> R<()> {
        let env = self.env;
        for c in self.st.classes.keys() {
            let info = &env.classes[c];
            if info.module != module {
                continue;
            }
            for (a, attr) in &info.attributes {
                let (Some(default), Some(&(v, t))) =
                    (&attr.default, self.class_attrs.get(&(c.clone(), a.clone())))
                else {
                    continue;
                };
                fx.loc = attr.loc;
                let e = self.expr(fx, default, Some(t))?;
                let e = coerce(e, t);
                fx.emit(Instr::Assign {
                    lhs: v,
                    rhs: e,
                    vis: Visibility::Hidden,
                });
            }
        }
        Ok(())
    }

    fn ctx<'f>(&self, fx: &'f Fx) -> Ctx<'f> {
        Ctx {
            module: &fx.module,
            locals: &fx.locals_ty,
        }
    }

    fn temp(&mut self, fx: &Fx, ty: IrType) -> VarId {
        self.temps += 1;
        let name = format!("$t{}", self.temps);
        let name = match &fx.owner {
            Some(_) => format!("{}@{name}", fx.display),
            None => name,
        };
        self.add_var(name, format!("$t{}", self.temps), ty, VarRole::Temp, &fx.owner)
    }

    fn hoist(&mut self, fx: &mut Fx, e: IrExpr) -> IrExpr {
        if e.is_atomic() {
            return e;
        }
        let t = e.ty();
        let v = self.temp(fx, t);
        fx.emit(Instr::Assign {
            lhs: v,
            rhs: e,
            vis: Visibility::Hidden,
        });
        IrExpr::Var(v, t)
    }

    // ---- name resolution ----

    fn global_bound(&self, module: &str, name: &str) -> Option<Bound> {
        if let Some(b) = self.globals.get(module).and_then(|m| m.get(name)) {
            return Some(b.clone());
        }
        match self.env.binding(module, name) {
            Some(Binding::Global { module: m, name: n }) => {
                self.globals.get(m).and_then(|g| g.get(n)).cloned()
            }
            _ => None,
        }
    }

    fn local_bound(&mut self, fx: &mut Fx, name: &str, concrete: Option<&str>) -> Option<Bound> {
        if let Some(b) = fx.locals.get(name) {
            return Some(b.clone());
        }
        let ty = fx.locals_ty.get(name)?.clone();
        let b = self.make_bound(
            &format!("{}@{name}", fx.display),
            name,
            &ty,
            VarRole::Local,
            &fx.owner.clone(),
            concrete,
            None,
        )?;
        fx.locals.insert(name.to_string(), b.clone());
        Some(b)
    }

    fn lookup(&mut self, fx: &mut Fx, name: &str, loc: Location) -> R<Bound> {
        if let Some(b) = self.local_bound(fx, name, None) {
            return Ok(b);
        }
        match self.global_bound(&fx.module, name) {
            Some(b) => Ok(b),
            None => self.err(fx, loc, format!("`{name}` has no storage")),
        }
    }

    /// Storage of `value.attr` for scalar attributes, module globals and
    /// class attributes.
    fn attr_var(&mut self, fx: &mut Fx, value: &Expr, attr: &str, loc: Location) -> R<(VarId, IrType)> {
        let env = self.env;
        if let Some(base) = value.as_name() {
            if env.variable_type(&self.ctx(fx), base).is_none() {
                match env.binding(&fx.module, base) {
                    Some(Binding::Module(m)) => {
                        return match self.global_bound(m, attr) {
                            Some(Bound::Scalar(v, t)) => Ok((v, t)),
                            _ => self.err(fx, loc, format!("`{base}.{attr}` is not a scalar global")),
                        };
                    }
                    Some(Binding::Class(c)) => {
                        let owner = env.dfs_find(c, &|ci| {
                            ci.attributes.get(attr).is_some_and(|a| a.class_level)
                        });
                        return match owner.and_then(|o| self.class_attrs.get(&(o.qualified.clone(), attr.to_string()))) {
                            Some(&(v, t)) => Ok((v, t)),
                            None => self.err(fx, loc, format!("class attribute `{base}.{attr}` not found")),
                        };
                    }
                    _ => {}
                }
            }
        }
        match self.object(fx, value)? {
            Bound::Object { fields, class } => match fields.get(attr) {
                Some(&(v, t)) => Ok((v, t)),
                None => self.err(fx, loc, format!("`{}` object has no field `{attr}`", short_name(&class))),
            },
            _ => self.err(fx, loc, "attribute of a non-object"),
        }
    }

    /// Storage of an object-valued expression, building a temporary for
    /// constructor calls.
    fn object(&mut self, fx: &mut Fx, e: &Expr) -> R<Bound> {
        match &e.kind {
            ExprKind::Name(n) => {
                let b = self.lookup(fx, n, e.loc)?;
                match b {
                    Bound::Object { .. } => Ok(b),
                    _ => self.err(fx, e.loc, format!("`{n}` is not an object")),
                }
            }
            ExprKind::Attribute { value, attr } => {
                if let Some(base) = value.as_name() {
                    if let Some(Binding::Module(m)) = self.env.binding(&fx.module, base) {
                        if let Some(b @ Bound::Object { .. }) = self.global_bound(m, attr) {
                            return Ok(b);
                        }
                    }
                }
                self.err(fx, e.loc, "objects cannot be stored in attributes")
            }
            ExprKind::Call { func, args } => {
                match self.env.resolve_callee(&self.ctx(fx), func) {
                    Ok(Callee::Constructor(c)) => {
                        self.temps += 1;
                        let name = format!("{}@$obj{}", fx.display, self.temps);
                        let ty = VerifierType::Class(c.clone());
                        let b = self
                            .make_bound(&name, &format!("$obj{}", self.temps), &ty, VarRole::Temp, &fx.owner.clone(), Some(&c), None)
                            .expect("object fields are scalars");
                        self.construct(fx, &b, args, e.loc)?;
                        Ok(b)
                    }
                    _ => self.err(fx, e.loc, "functions cannot return objects"),
                }
            }
            _ => self.err(fx, e.loc, "unsupported object expression"),
        }
    }

    fn list(&mut self, fx: &mut Fx, e: &Expr) -> R<(Vec<VarId>, IrType)> {
        match &e.kind {
            ExprKind::Name(n) => match self.lookup(fx, n, e.loc)? {
                Bound::List { elems, ty } => Ok((elems, ty)),
                _ => self.err(fx, e.loc, format!("`{n}` is not a list")),
            },
            ExprKind::Attribute { value, attr } => {
                if let Some(base) = value.as_name() {
                    if let Some(Binding::Module(m)) = self.env.binding(&fx.module, base) {
                        if let Some(Bound::List { elems, ty }) = self.global_bound(m, attr) {
                            return Ok((elems, ty));
                        }
                    }
                }
                self.err(fx, e.loc, "lists cannot be stored in attributes")
            }
            ExprKind::List(elts) => {
                let lt = self
                    .env
                    .type_of(&self.ctx(fx), e, None)
                    .map_err(|er| LowerError::Unsupported {
                        module: fx.module.clone(),
                        loc: e.loc,
                        reason: er.to_string(),
                    })?;
                let VerifierType::List { elem, .. } = lt else { unreachable!() };
                let et = scalar_type(&elem).expect("scalar elements");
                let vals = self.list_values(fx, elts, et)?;
                let mut elems = Vec::new();
                for v in vals {
                    let t = self.temp(fx, et);
                    fx.emit(Instr::Assign {
                        lhs: t,
                        rhs: v,
                        vis: Visibility::Hidden,
                    });
                    elems.push(t);
                }
                Ok((elems, et))
            }
            _ => self.err(fx, e.loc, "unsupported list expression"),
        }
    }

    /// Element values of a list literal, all evaluated before any store.
    fn list_values(&mut self, fx: &mut Fx, elts: &[Expr], et: IrType) -> R<Vec<IrExpr>> {
        let mut vals = Vec::new();
        for x in elts {
            let v = self.expr(fx, x, Some(et))?;
            let v = coerce(v, et);
            let v = if matches!(v, IrExpr::Const(..)) { v } else { self.hoist_var(fx, v) };
            vals.push(v);
        }
        Ok(vals)
    }

    /// Like `hoist` but also copies plain variables.
    fn hoist_var(&mut self, fx: &mut Fx, e: IrExpr) -> IrExpr {
        let t = e.ty();
        let v = self.temp(fx, t);
        fx.emit(Instr::Assign {
            lhs: v,
            rhs: e,
            vis: Visibility::Hidden,
        });
        IrExpr::Var(v, t)
    }

    fn index(&mut self, fx: &mut Fx, index: &Expr, n: usize) -> R<IrExpr> {
        let it = self.env.opts.default_int();
        if let Some(v) = literal_value(index) {
            let n = BigInt::from(n);
            let v = if v < BigInt::from(0) && v >= -n.clone() { v + n } else { v };
            return Ok(IrExpr::Const(
                Value::BV(BitVec::from_bigint(it.width, &v)),
                IrType::Int(it),
            ));
        }
        self.expr(fx, index, None)
    }

    // ---- statements ----

    fn block(&mut self, fx: &mut Fx, stmts: &[Stmt]) -> R<()> {
        for s in stmts {
            self.stmt(fx, s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, fx: &mut Fx, s: &Stmt) -> R<()> {
        fx.loc = s.loc;
        match &s.kind {
            StmtKind::AnnAssign { target, value, .. } => match value {
                Some(v) => self.assign(fx, target, v),
                None => Ok(()),
            },
            StmtKind::Assign { targets, value } => match &targets[..] {
                [t] => self.assign(fx, t, value),
                _ => self.err(fx, s.loc, "chained assignment"),
            },
            StmtKind::AugAssign { target, op, value } => self.aug_assign(fx, target, *op, value),
            StmtKind::If { test, body, orelse } => {
                let c = self.condition(fx, test)?;
                let l_else = fx.label();
                fx.goto(l_else, Some(IrExpr::not(c)));
                self.block(fx, body)?;
                if orelse.is_empty() {
                    fx.place(l_else);
                } else {
                    let l_end = fx.label();
                    fx.loc = s.loc;
                    fx.goto(l_end, None);
                    fx.place(l_else);
                    self.block(fx, orelse)?;
                    fx.place(l_end);
                }
                Ok(())
            }
            StmtKind::While { test, body, orelse } => {
                let (l_head, l_exit, l_break) = (fx.label(), fx.label(), fx.label());
                fx.place(l_head);
                let c = self.condition(fx, test)?;
                fx.emit(Instr::Goto {
                    target: l_exit,
                    guard: Some(IrExpr::not(c)),
                    loop_exit: true,
                });
                fx.loops.push((l_break, l_head));
                self.block(fx, body)?;
                fx.loops.pop();
                fx.loc = s.loc;
                fx.goto(l_head, None);
                fx.place(l_exit);
                self.block(fx, orelse)?;
                fx.place(l_break);
                Ok(())
            }
            StmtKind::For {
                target,
                iter,
                body,
                orelse,
            } => self.for_loop(fx, s, target, iter, body, orelse),
            StmtKind::Return(v) => {
                if let Some(v) = v {
                    match fx.ret {
                        Some((rv, rt)) => {
                            let e = self.expr(fx, v, Some(rt))?;
                            fx.emit(Instr::Assign {
                                lhs: rv,
                                rhs: coerce(e, rt),
                                vis: Visibility::Hidden,
                            });
                        }
                        None => {
                            self.effect(fx, v)?;
                        }
                    }
                }
                let end = fx.end_label;
                fx.goto(end, None);
                Ok(())
            }
            StmtKind::Expr(e) => {
                if matches!(e.kind, ExprKind::Constant(Constant::Str(_))) {
                    return Ok(());
                }
                self.effect(fx, e)
            }
            StmtKind::Pass | StmtKind::Import(_) | StmtKind::ImportFrom { .. } => Ok(()),
            StmtKind::Break => match fx.loops.last() {
                Some(&(b, _)) => {
                    fx.goto(b, None);
                    Ok(())
                }
                None => self.err(fx, s.loc, "`break` outside a loop"),
            },
            StmtKind::Continue => match fx.loops.last() {
                Some(&(_, c)) => {
                    fx.goto(c, None);
                    Ok(())
                }
                None => self.err(fx, s.loc, "`continue` outside a loop"),
            },
            StmtKind::Assert { test, .. } => {
                let c = self.condition(fx, test)?;
                fx.loc = s.loc;
                fx.emit(Instr::Assert {
                    cond: c,
                    class: PropertyClass::UserAssertion,
                    message: unparse_expr(test),
                });
                Ok(())
            }
            StmtKind::FunctionDef(_) | StmtKind::ClassDef(_) => Ok(()),
        }
    }

    fn for_loop(
        &mut self,
        fx: &mut Fx,
        s: &Stmt,
        target: &Expr,
        iter: &Expr,
        body: &[Stmt],
        orelse: &[Stmt],
    ) -> R<()> {
        let Some(var) = target.as_name() else {
            return self.err(fx, target.loc, "for-loop target must be a name");
        };
        let (tv, tt) = match self.lookup(fx, var, target.loc)? {
            Bound::Scalar(v, t) => (v, t),
            _ => return self.err(fx, target.loc, "for-loop target must be a scalar"),
        };
        let (l_head, l_cont, l_exit, l_break) = (fx.label(), fx.label(), fx.label(), fx.label());
        let is_range = matches!(&iter.kind, ExprKind::Call { func, .. }
            if func.as_name() == Some("range") && self.env.variable_type(&self.ctx(fx), "range").is_none());
        let step_instr;
        if is_range {
            let ExprKind::Call { args, .. } = &iter.kind else { unreachable!() };
            let IrType::Int(it) = tt else {
                return self.err(fx, iter.loc, "range() loop variable must be an integer");
            };
            let mut vals = Vec::new();
            for a in args {
                let v = self.expr(fx, a, Some(tt))?;
                vals.push(v);
            }
            let one = IrExpr::int(1, it);
            let zero = IrExpr::int(0, it);
            let (start, end, step) = match vals.len() {
                1 => (zero.clone(), vals.remove(0), one),
                2 => {
                    let e = vals.remove(1);
                    (vals.remove(0), e, one)
                }
                _ => {
                    let st = vals.remove(2);
                    let e = vals.remove(1);
                    (vals.remove(0), e, st)
                }
            };
            let start = self.hoist(fx, start);
            let end = self.hoist(fx, end);
            let step = self.hoist(fx, step);
            let ind = self.temp(fx, tt);
            fx.emit(Instr::Assign {
                lhs: ind,
                rhs: start,
                vis: Visibility::Hidden,
            });
            let iv = IrExpr::Var(ind, tt);
            let up = IrExpr::bin(IrBinOp::Lt, iv.clone(), end.clone());
            let down = IrExpr::bin(IrBinOp::Gt, iv.clone(), end);
            let cond = match &step {
                IrExpr::Const(Value::BV(b), _) => {
                    if it.signed && b.msb() {
                        down
                    } else {
                        up
                    }
                }
                _ if !it.signed => up,
                _ => IrExpr::ite(IrExpr::bin(IrBinOp::Gt, step.clone(), zero), up, down),
            };
            fx.place(l_head);
            fx.emit(Instr::Goto {
                target: l_exit,
                guard: Some(IrExpr::not(cond)),
                loop_exit: true,
            });
            fx.emit(Instr::Assign {
                lhs: tv,
                rhs: iv.clone(),
                vis: Visibility::Shown,
            });
            step_instr = Instr::Assign {
                lhs: ind,
                rhs: IrExpr::bin(IrBinOp::Add, iv, step),
                vis: Visibility::Hidden,
            };
        } else {
            let (elems, et) = self.list(fx, iter)?;
            let it = self.env.opts.default_int();
            let ind = self.temp(fx, IrType::Int(it));
            fx.emit(Instr::Assign {
                lhs: ind,
                rhs: IrExpr::int(0, it),
                vis: Visibility::Hidden,
            });
            let iv = IrExpr::Var(ind, IrType::Int(it));
            fx.place(l_head);
            let n = IrExpr::int(elems.len() as i64, it);
            fx.emit(Instr::Goto {
                target: l_exit,
                guard: Some(IrExpr::bin(IrBinOp::Ge, iv.clone(), n)),
                loop_exit: true,
            });
            fx.emit(Instr::Assign {
                lhs: tv,
                rhs: coerce(
                    IrExpr::Index {
                        elems,
                        index: Box::new(iv.clone()),
                        ty: et,
                    },
                    tt,
                ),
                vis: Visibility::Shown,
            });
            step_instr = Instr::Assign {
                lhs: ind,
                rhs: IrExpr::bin(IrBinOp::Add, iv, IrExpr::int(1, it)),
                vis: Visibility::Hidden,
            };
        }
        fx.loops.push((l_break, l_cont));
        self.block(fx, body)?;
        fx.loops.pop();
        fx.loc = s.loc;
        fx.place(l_cont);
        fx.emit(step_instr);
        fx.goto(l_head, None);
        fx.place(l_exit);
        self.block(fx, orelse)?;
        fx.place(l_break);
        Ok(())
    }

    /// Evaluates an expression statement for its effects.
    fn effect(&mut self, fx: &mut Fx, e: &Expr) -> R<()> {
        if let ExprKind::Call { func, args } = &e.kind {
            let callee = self.resolve(fx, func)?;
            match callee {
                Callee::Builtin(Builtin::Assume) => {
                    let c = self.condition(fx, &args[0])?;
                    fx.emit(Instr::Assume(c));
                    return Ok(());
                }
                Callee::Builtin(_) => {}
                Callee::Constructor(_) => {
                    self.object(fx, e)?;
                    return Ok(());
                }
                other => return self.call(fx, other, args, None, e.loc),
            }
        }
        let v = self.expr(fx, e, None)?;
        if !v.is_atomic() && !matches!(v, IrExpr::Nondet(_)) {
            self.hoist(fx, v);
        }
        Ok(())
    }

    fn resolve(&self, fx: &Fx, func: &Expr) -> R<Callee> {
        self.env
            .resolve_callee(&self.ctx(fx), func)
            .map_err(|e| LowerError::Unsupported {
                module: fx.module.clone(),
                loc: func.loc,
                reason: e.to_string(),
            })
    }

    /// Direct user call whose scalar result can be written straight into a
    /// variable of type `t`.
    fn direct_call(&self, fx: &Fx, value: &Expr, t: IrType) -> Option<(Callee, Vec<Expr>)> {
        let ExprKind::Call { func, args } = &value.kind else {
            return None;
        };
        let callee = self.resolve(fx, func).ok()?;
        let q = match &callee {
            Callee::Function(q) | Callee::ExplicitMethod(q) => q.clone(),
            Callee::Method {
                class, method, ..
            } => self.env.find_method(class, method)?.to_string(),
            _ => return None,
        };
        let ret = scalar_type(&self.st.functions.get(&q)?.ret)?;
        (ret == t).then(|| (callee, args.clone()))
    }

    fn assign_scalar(&mut self, fx: &mut Fx, v: VarId, t: IrType, value: &Expr) -> R<()> {
        if let Some((callee, args)) = self.direct_call(fx, value, t) {
            return self.call(fx, callee, &args, Some((v, Visibility::Counted)), value.loc);
        }
        let e = self.expr(fx, value, Some(t))?;
        fx.emit(Instr::Assign {
            lhs: v,
            rhs: coerce(e, t),
            vis: Visibility::Shown,
        });
        Ok(())
    }

    fn assign(&mut self, fx: &mut Fx, target: &Expr, value: &Expr) -> R<()> {
        match &target.kind {
            ExprKind::Name(n) => {
                let ctor = match &value.kind {
                    ExprKind::Call { func, args } => match self.resolve(fx, func)? {
                        Callee::Constructor(c) => Some((c, args)),
                        _ => None,
                    },
                    _ => None,
                };
                if let Some((class, args)) = ctor {
                    let b = match self.local_bound(fx, n, Some(&class)) {
                        Some(b) => b,
                        None => self.lookup(fx, n, target.loc)?,
                    };
                    match &b {
                        Bound::Object { class: have, .. } if *have == class => {}
                        Bound::Object { class: have, .. } => {
                            return self.err(
                                fx,
                                target.loc,
                                format!(
                                    "`{n}` holds a {} and cannot be rebound to a {}",
                                    short_name(have),
                                    short_name(&class)
                                ),
                            )
                        }
                        _ => return self.err(fx, target.loc, format!("`{n}` is not an object")),
                    }
                    return self.construct(fx, &b, args, value.loc);
                }
                match self.lookup(fx, n, target.loc)? {
                    Bound::Scalar(v, t) => self.assign_scalar(fx, v, t, value),
                    Bound::List { elems, ty } => match &value.kind {
                        ExprKind::List(elts) if elts.len() == elems.len() => {
                            let vals = self.list_values(fx, elts, ty)?;
                            for (v, x) in elems.iter().zip(vals) {
                                fx.emit(Instr::Assign {
                                    lhs: *v,
                                    rhs: x,
                                    vis: Visibility::Shown,
                                });
                            }
                            Ok(())
                        }
                        ExprKind::List(_) => self.err(fx, value.loc, "list length changes are not supported"),
                        _ => self.err(fx, value.loc, "list aliasing is not supported; assign a list literal"),
                    },
                    Bound::Object { .. } => {
                        self.err(fx, value.loc, "object aliasing is not supported; assign a constructor call")
                    }
                }
            }
            ExprKind::Attribute { value: obj, attr } => {
                let (v, t) = self.attr_var(fx, obj, attr, target.loc)?;
                self.assign_scalar(fx, v, t, value)
            }
            ExprKind::Subscript { value: list, index } => {
                let (elems, ty) = self.list(fx, list)?;
                let val = self.expr(fx, value, Some(ty))?;
                let mut val = coerce(val, ty);
                if index.contains_call() {
                    val = self.hoist(fx, val);
                }
                let idx = self.index(fx, index, elems.len())?;
                fx.emit(Instr::Store {
                    elems,
                    index: idx,
                    value: val,
                });
                Ok(())
            }
            _ => self.err(fx, target.loc, "unsupported assignment target"),
        }
    }

    fn aug_assign(&mut self, fx: &mut Fx, target: &Expr, op: BinOpKind, value: &Expr) -> R<()> {
        match &target.kind {
            ExprKind::Name(_) | ExprKind::Attribute { .. } => {
                let (v, t) = match &target.kind {
                    ExprKind::Name(n) => match self.lookup(fx, n, target.loc)? {
                        Bound::Scalar(v, t) => (v, t),
                        _ => return self.err(fx, target.loc, "augmented assignment to a non-scalar"),
                    },
                    ExprKind::Attribute { value: obj, attr } => self.attr_var(fx, obj, attr, target.loc)?,
                    _ => unreachable!(),
                };
                let r = self.rhs_for(fx, IrExpr::Var(v, t).ty(), value)?;
                let e = self.combine(fx, op, IrExpr::Var(v, t), r, value)?;
                fx.emit(Instr::Assign {
                    lhs: v,
                    rhs: coerce(e, t),
                    vis: Visibility::Shown,
                });
                Ok(())
            }
            ExprKind::Subscript { value: list, index } => {
                let (elems, ty) = self.list(fx, list)?;
                let idx = self.index(fx, index, elems.len())?;
                let idx = self.hoist(fx, idx);
                let cur = IrExpr::Index {
                    elems: elems.clone(),
                    index: Box::new(idx.clone()),
                    ty,
                };
                let r = self.rhs_for(fx, ty, value)?;
                let e = self.combine(fx, op, cur, r, value)?;
                fx.emit(Instr::Store {
                    elems,
                    index: idx,
                    value: coerce(e, ty),
                });
                Ok(())
            }
            _ => self.err(fx, target.loc, "unsupported augmented assignment target"),
        }
    }

    fn rhs_for(&mut self, fx: &mut Fx, lt: IrType, value: &Expr) -> R<IrExpr> {
        if is_int_literal(value) {
            self.expr(fx, value, Some(lt))
        } else {
            self.expr(fx, value, None)
        }
    }

    /// Initializes the fields of `obj` and runs `__init__` on it.
    fn construct(&mut self, fx: &mut Fx, obj: &Bound, args: &[Expr], loc: Location) -> R<()> {
        let Bound::Object { class, fields } = obj else {
            return self.err(fx, loc, "constructor target is not an object");
        };
        let env = self.env;
        for (f, &(v, t)) in fields {
            let owner = env.dfs_find(class, &|c| c.attributes.contains_key(f));
            let Some(owner) = owner else { continue };
            if !owner.attributes[f].class_level {
                continue;
            }
            if let Some(&(cv, ct)) = self.class_attrs.get(&(owner.qualified.clone(), f.clone())) {
                fx.emit(Instr::Assign {
                    lhs: v,
                    rhs: coerce(IrExpr::Var(cv, ct), t),
                    vis: Visibility::Shown,
                });
            }
        }
        match env.find_method(class, "__init__") {
            Some(init) => {
                let d = self.decl(init);
                let (key, cargs) = self.call_args(fx, d, Some((obj.vars(), class.clone())), args, loc)?;
                fx.emit(Instr::Call {
                    lhs: None,
                    callee: key,
                    args: cargs,
                });
                Ok(())
            }
            None if args.is_empty() => Ok(()),
            None => self.err(fx, loc, format!("`{}` takes no arguments", short_name(class))),
        }
    }

    fn call(
        &mut self,
        fx: &mut Fx,
        callee: Callee,
        args: &[Expr],
        lhs: Option<(VarId, Visibility)>,
        loc: Location,
    ) -> R<()> {
        let (key, cargs) = match callee {
            Callee::Function(q) | Callee::ExplicitMethod(q) => {
                let d = self.decl(&q);
                self.call_args(fx, d, None, args, loc)?
            }
            Callee::Method {
                receiver, method, ..
            } => {
                let obj = self.object(fx, &receiver)?;
                let Bound::Object { class, .. } = &obj else { unreachable!() };
                let Some(q) = self.env.find_method(class, &method) else {
                    return self.err(fx, loc, format!("`{}` has no method `{method}`", short_name(class)));
                };
                let d = self.decl(q);
                self.call_args(fx, d, Some((obj.vars(), class.clone())), args, loc)?
            }
            _ => return self.err(fx, loc, "not a user function"),
        };
        fx.emit(Instr::Call {
            lhs,
            callee: key,
            args: cargs,
        });
        Ok(())
    }

    fn call_args(
        &mut self,
        fx: &mut Fx,
        d: &'a FunctionDecl,
        receiver: Option<(Vec<VarId>, String)>,
        args: &[Expr],
        loc: Location,
    ) -> R<(String, Vec<CallArg>)> {
        let mut shapes = Vec::new();
        let mut out = Vec::new();
        let skip = usize::from(receiver.is_some());
        if let Some((vars, class)) = receiver {
            out.push(CallArg::Ref(vars));
            shapes.push(Shape::Object(class));
        }
        let params = &d.params[skip..];
        if args.len() > params.len() {
            return self.err(fx, loc, format!("too many arguments for `{}`", d.name));
        }
        let first_default = d.params.len() - d.defaults.len();
        for (i, (pname, pty)) in params.iter().enumerate() {
            let idx = i + skip;
            let (arg, from_default) = match args.get(i) {
                Some(a) => (a, false),
                None if idx >= first_default => (&d.defaults[idx - first_default], true),
                None => return self.err(fx, loc, format!("missing argument `{pname}` for `{}`", d.name)),
            };
            let later_call = args.iter().skip(i + 1).any(Expr::contains_call);
            let lowered = if from_default {
                self.in_scope(fx, &d.module, |lw, fx| lw.arg(fx, arg, pty))?
            } else {
                self.arg(fx, arg, pty)?
            };
            match lowered {
                (CallArg::Value(e), s) => {
                    let e = if later_call { self.hoist(fx, e) } else { e };
                    out.push(CallArg::Value(e));
                    shapes.push(s);
                }
                (r, s) => {
                    out.push(r);
                    shapes.push(s);
                }
            }
        }
        let key = self.request(&d.qualified, shapes);
        Ok((key, out))
    }

    fn arg(&mut self, fx: &mut Fx, arg: &Expr, pty: &VerifierType) -> R<(CallArg, Shape)> {
        match pty {
            VerifierType::List { .. } => {
                let (elems, _) = self.list(fx, arg)?;
                let n = elems.len();
                Ok((CallArg::Ref(elems), Shape::List(n)))
            }
            VerifierType::Class(_) => {
                let obj = self.object(fx, arg)?;
                let Bound::Object { class, .. } = &obj else { unreachable!() };
                let class = class.clone();
                Ok((CallArg::Ref(obj.vars()), Shape::Object(class)))
            }
            t => {
                let it = scalar_type(t).expect("scalar parameter");
                let e = self.expr(fx, arg, Some(it))?;
                Ok((CallArg::Value(coerce(e, it)), Shape::Scalar))
            }
        }
    }

    /// Runs `f` with name resolution switched to `module`'s globals.
    fn in_scope<T>(
        &mut self,
        fx: &mut Fx,
        module: &str,
        f: impl FnOnce(&mut Self, &mut Fx) -> R<T>,
    ) -> R<T> {
        let saved_module = std::mem::replace(&mut fx.module, module.to_string());
        let saved_locals = std::mem::take(&mut fx.locals);
        let saved_ty = std::mem::take(&mut fx.locals_ty);
        let r = f(self, fx);
        fx.module = saved_module;
        fx.locals = saved_locals;
        fx.locals_ty = saved_ty;
        r
    }

    // ---- expressions ----

    fn condition(&mut self, fx: &mut Fx, e: &Expr) -> R<IrExpr> {
        let v = self.expr(fx, e, None)?;
        Ok(truthy(v))
    }

    fn int_const(&self, v: &BigInt, expected: Option<IrType>) -> IrExpr {
        match expected {
            Some(IrType::Float) => IrExpr::Const(Value::FP(v.to_f64().unwrap_or(f64::NAN)), IrType::Float),
            Some(IrType::Int(t)) => IrExpr::Const(Value::BV(BitVec::from_bigint(t.width, v)), IrType::Int(t)),
            _ => {
                let t = self.env.opts.default_int();
                IrExpr::Const(Value::BV(BitVec::from_bigint(t.width, v)), IrType::Int(t))
            }
        }
    }

    fn expr(&mut self, fx: &mut Fx, e: &Expr, expected: Option<IrType>) -> R<IrExpr> {
        let expected = expected.filter(|t| !matches!(t, IrType::Bool));
        match &e.kind {
            ExprKind::Constant(c) => match c {
                Constant::Bool(b) => Ok(IrExpr::bool(*b)),
                Constant::Int(v) => Ok(self.int_const(v, expected)),
                Constant::Float(f) => Ok(IrExpr::Const(Value::FP(*f), IrType::Float)),
                Constant::None | Constant::Str(_) => self.err(fx, e.loc, "only numeric and boolean constants are values"),
            },
            ExprKind::Name(n) => match self.lookup(fx, n, e.loc)? {
                Bound::Scalar(v, t) => Ok(IrExpr::Var(v, t)),
                _ => self.err(fx, e.loc, format!("`{n}` is not a scalar")),
            },
            ExprKind::Attribute { value, attr } => {
                let (v, t) = self.attr_var(fx, value, attr, e.loc)?;
                Ok(IrExpr::Var(v, t))
            }
            ExprKind::BinOp { left, op, right } => {
                if *op == BinOpKind::Pow {
                    let base = if is_int_literal(e) {
                        self.expr(fx, left, expected)?
                    } else {
                        self.expr(fx, left, expected)?
                    };
                    let r = IrExpr::Const(Value::Bool(false), IrType::Bool);
                    return self.combine(fx, BinOpKind::Pow, base, r, right);
                }
                let (l, r) = self.operands(fx, left, right, expected)?;
                self.combine(fx, *op, l, r, right)
            }
            ExprKind::BoolOp { op, values } => self.bool_op(fx, *op, values),
            ExprKind::UnaryOp { op, operand } => match op {
                UnaryOpKind::Not => {
                    let v = self.expr(fx, operand, None)?;
                    Ok(IrExpr::not(truthy(v)))
                }
                UnaryOpKind::UAdd => self.expr(fx, operand, expected),
                UnaryOpKind::USub => {
                    if let ExprKind::Constant(Constant::Int(v)) = &operand.kind {
                        return Ok(self.int_const(&-v.clone(), expected));
                    }
                    if let ExprKind::Constant(Constant::Float(f)) = &operand.kind {
                        return Ok(IrExpr::Const(Value::FP(-f), IrType::Float));
                    }
                    let v = self.expr(fx, operand, expected)?;
                    Ok(IrExpr::Un(IrUnOp::Neg, Box::new(v)))
                }
                UnaryOpKind::Invert => {
                    let v = self.expr(fx, operand, expected)?;
                    Ok(IrExpr::Un(IrUnOp::BitNot, Box::new(v)))
                }
            },
            ExprKind::Compare {
                left,
                ops,
                comparators,
            } => self.compare(fx, left, ops, comparators),
            ExprKind::Call { func, args } => {
                let callee = self.resolve(fx, func)?;
                match callee {
                    Callee::Builtin(b) => self.builtin(fx, b, args, expected, e.loc),
                    Callee::Constructor(_) => self.err(fx, e.loc, "an object is not a scalar value"),
                    other => {
                        let q = match &other {
                            Callee::Function(q) | Callee::ExplicitMethod(q) => q.clone(),
                            Callee::Method { .. } => String::new(),
                            _ => unreachable!(),
                        };
                        let ret = if q.is_empty() {
                            let Callee::Method { receiver, method, .. } = &other else { unreachable!() };
                            let cls = match self.env.type_of(&self.ctx(fx), receiver, None) {
                                Ok(VerifierType::Class(c)) => c,
                                _ => return self.err(fx, e.loc, "method call on a non-object"),
                            };
                            let f = self.env.find_method(&cls, method).unwrap_or_default().to_string();
                            self.st.functions.get(&f).map(|d| d.ret.clone())
                        } else {
                            self.st.functions.get(&q).map(|d| d.ret.clone())
                        };
                        let Some(rt) = ret.as_ref().and_then(scalar_type) else {
                            return self.err(fx, e.loc, "the called function does not return a value");
                        };
                        let t = self.temp(fx, rt);
                        self.call(fx, other, args, Some((t, Visibility::Hidden)), e.loc)?;
                        Ok(IrExpr::Var(t, rt))
                    }
                }
            }
            ExprKind::Subscript { value, index } => {
                let (elems, ty) = self.list(fx, value)?;
                let idx = self.index(fx, index, elems.len())?;
                Ok(IrExpr::Index {
                    elems,
                    index: Box::new(idx),
                    ty,
                })
            }
            ExprKind::List(_) => self.err(fx, e.loc, "a list is not a scalar value"),
        }
    }

    /// Lowers both operands, letting integer literals adopt the type of the
    /// other side.
    fn operands(
        &mut self,
        fx: &mut Fx,
        left: &Expr,
        right: &Expr,
        expected: Option<IrType>,
    ) -> R<(IrExpr, IrExpr)> {
        match (is_int_literal(left), is_int_literal(right)) {
            (true, false) => {
                let r = self.expr(fx, right, None)?;
                let l = self.expr(fx, left, Some(r.ty()))?;
                Ok((l, r))
            }
            (false, true) => {
                let l = self.expr(fx, left, None)?;
                let r = self.expr(fx, right, Some(l.ty()))?;
                Ok((l, r))
            }
            (true, true) => Ok((self.expr(fx, left, expected)?, self.expr(fx, right, expected)?)),
            (false, false) => {
                let l = self.expr(fx, left, None)?;
                let l = if right.contains_call() { self.hoist(fx, l) } else { l };
                let r = self.expr(fx, right, None)?;
                Ok((l, r))
            }
        }
    }

    /// Builds `l op r`. For `**`, `right` holds the constant exponent.
    fn combine(&mut self, fx: &mut Fx, op: BinOpKind, l: IrExpr, r: IrExpr, right: &Expr) -> R<IrExpr> {
        let (l, r) = if op != BinOpKind::Pow && l.ty() != r.ty() {
            if l.ty() == IrType::Float || r.ty() == IrType::Float || op == BinOpKind::Div {
                (coerce(l, IrType::Float), coerce(r, IrType::Float))
            } else {
                (l, r)
            }
        } else {
            (l, r)
        };
        let ir = match op {
            BinOpKind::Add => IrBinOp::Add,
            BinOpKind::Sub => IrBinOp::Sub,
            BinOpKind::Mult => IrBinOp::Mul,
            BinOpKind::Div => {
                return Ok(IrExpr::bin(
                    IrBinOp::Div,
                    coerce(l, IrType::Float),
                    coerce(r, IrType::Float),
                ))
            }
            BinOpKind::FloorDiv => IrBinOp::FloorDiv,
            BinOpKind::Mod => IrBinOp::Mod,
            BinOpKind::LShift => IrBinOp::Shl,
            BinOpKind::RShift => IrBinOp::Shr,
            BinOpKind::BitOr => IrBinOp::BitOr,
            BinOpKind::BitXor => IrBinOp::BitXor,
            BinOpKind::BitAnd => IrBinOp::BitAnd,
            BinOpKind::Pow => {
                let k = literal_value(right)
                    .and_then(|v| v.to_u32())
                    .filter(|k| *k <= 64);
                let Some(k) = k else {
                    return self.err(fx, right.loc, "exponent must be a constant between 0 and 64");
                };
                let t = l.ty();
                if k == 0 {
                    return Ok(match t {
                        IrType::Float => IrExpr::Const(Value::FP(1.0), t),
                        IrType::Int(it) => IrExpr::int(1, it),
                        IrType::Bool => IrExpr::bool(true),
                    });
                }
                let base = self.hoist(fx, l);
                let mut acc = base.clone();
                for _ in 1..k {
                    acc = IrExpr::bin(IrBinOp::Mul, acc, base.clone());
                }
                return Ok(acc);
            }
        };
        Ok(IrExpr::bin(ir, l, r))
    }

    fn bool_op(&mut self, fx: &mut Fx, op: BoolOpKind, values: &[Expr]) -> R<IrExpr> {
        let ir = match op {
            BoolOpKind::And => IrBinOp::And,
            BoolOpKind::Or => IrBinOp::Or,
        };
        if values[1..].iter().any(Expr::contains_call) {
            // Short-circuit through control flow so later calls only run
            // when reached.
            let t = self.temp(fx, IrType::Bool);
            let end = fx.label();
            for (i, v) in values.iter().enumerate() {
                let c = self.expr(fx, v, None)?;
                fx.emit(Instr::Assign {
                    lhs: t,
                    rhs: truthy(c),
                    vis: Visibility::Hidden,
                });
                if i + 1 < values.len() {
                    let tv = IrExpr::Var(t, IrType::Bool);
                    let g = match op {
                        BoolOpKind::And => IrExpr::not(tv),
                        BoolOpKind::Or => tv,
                    };
                    fx.goto(end, Some(g));
                }
            }
            fx.place(end);
            return Ok(IrExpr::Var(t, IrType::Bool));
        }
        let mut acc: Option<IrExpr> = None;
        for v in values {
            let c = truthy(self.expr(fx, v, None)?);
            acc = Some(match acc {
                None => c,
                Some(a) => IrExpr::bin(ir, a, c),
            });
        }
        Ok(acc.expect("non-empty operands"))
    }

    fn compare(&mut self, fx: &mut Fx, left: &Expr, ops: &[CmpOpKind], comparators: &[Expr]) -> R<IrExpr> {
        let mut parts = Vec::new();
        let mut prev: Option<IrExpr> = None;
        for (i, (op, next)) in ops.iter().zip(comparators).enumerate() {
            let (mut a, mut b) = match prev.take() {
                None => self.operands(fx, left, next, None)?,
                Some(a) => {
                    let b = if is_int_literal(next) {
                        self.expr(fx, next, Some(a.ty()))?
                    } else {
                        self.expr(fx, next, None)?
                    };
                    (a, b)
                }
            };
            if a.ty() != b.ty() && (a.ty() == IrType::Float || b.ty() == IrType::Float) {
                a = coerce(a, IrType::Float);
                b = coerce(b, IrType::Float);
            }
            if i + 1 < ops.len() {
                b = self.hoist(fx, b);
                prev = Some(b.clone());
            }
            let ir = match op {
                CmpOpKind::Eq => IrBinOp::Eq,
                CmpOpKind::NotEq => IrBinOp::Ne,
                CmpOpKind::Lt => IrBinOp::Lt,
                CmpOpKind::LtE => IrBinOp::Le,
                CmpOpKind::Gt => IrBinOp::Gt,
                CmpOpKind::GtE => IrBinOp::Ge,
            };
            parts.push(IrExpr::bin(ir, a, b));
        }
        let mut it = parts.into_iter();
        let first = it.next().expect("at least one comparison");
        Ok(it.fold(first, |acc, p| IrExpr::bin(IrBinOp::And, acc, p)))
    }

    fn builtin(&mut self, fx: &mut Fx, b: Builtin, args: &[Expr], expected: Option<IrType>, loc: Location) -> R<IrExpr> {
        let def = IrType::Int(self.env.opts.default_int());
        match b {
            Builtin::NondetInt => Ok(IrExpr::Nondet(match expected {
                Some(IrType::Int(t)) if t.signed => IrType::Int(t),
                _ => def,
            })),
            Builtin::NondetBool => Ok(IrExpr::Nondet(IrType::Bool)),
            Builtin::NondetFloat => Ok(IrExpr::Nondet(IrType::Float)),
            Builtin::NondetUint(w) => Ok(IrExpr::Nondet(IrType::Int(IntType::unsigned(w)))),
            Builtin::Abs => {
                let x = self.expr(fx, &args[0], expected)?;
                let x = self.hoist(fx, x);
                let t = x.ty();
                let zero = IrExpr::Const(t.zero(), t);
                Ok(IrExpr::ite(
                    IrExpr::bin(IrBinOp::Lt, x.clone(), zero),
                    IrExpr::Un(IrUnOp::Neg, Box::new(x.clone())),
                    x,
                ))
            }
            Builtin::Min | Builtin::Max => {
                let mut vals: Vec<Option<IrExpr>> = vec![None; args.len()];
                let mut ty: Option<IrType> = None;
                for (i, a) in args.iter().enumerate() {
                    if !is_int_literal(a) {
                        let v = self.expr(fx, a, None)?;
                        let v = self.hoist(fx, v);
                        ty = Some(match ty {
                            Some(IrType::Float) => IrType::Float,
                            _ if v.ty() == IrType::Float => IrType::Float,
                            _ => v.ty(),
                        });
                        vals[i] = Some(v);
                    }
                }
                let ty = ty.or(expected).unwrap_or(def);
                for (i, a) in args.iter().enumerate() {
                    if vals[i].is_none() {
                        vals[i] = Some(self.expr(fx, a, Some(ty))?);
                    }
                }
                let cmp = if b == Builtin::Min { IrBinOp::Lt } else { IrBinOp::Gt };
                let mut it = vals.into_iter().map(|v| coerce(v.expect("lowered"), ty));
                let mut acc = it.next().expect("two or more arguments");
                for v in it {
                    let a = self.hoist(fx, acc);
                    acc = IrExpr::ite(IrExpr::bin(cmp, v.clone(), a.clone()), v, a);
                }
                Ok(acc)
            }
            Builtin::Int => {
                let v = self.expr(fx, &args[0], Some(def))?;
                Ok(coerce_explicit(v, def))
            }
            Builtin::Float => {
                let v = self.expr(fx, &args[0], Some(IrType::Float))?;
                Ok(coerce_explicit(v, IrType::Float))
            }
            Builtin::Bool => {
                let v = self.expr(fx, &args[0], None)?;
                Ok(truthy(v))
            }
            Builtin::ToUint(w) => {
                let t = IrType::Int(IntType::unsigned(w));
                let v = self.expr(fx, &args[0], Some(t))?;
                Ok(coerce_explicit(v, t))
            }
            Builtin::Len => {
                let (elems, _) = self.list(fx, &args[0])?;
                let IrType::Int(it) = def else { unreachable!() };
                Ok(IrExpr::int(elems.len() as i64, it))
            }
            Builtin::Assume => self.err(fx, loc, "assume() has no value"),
            Builtin::Range => self.err(fx, loc, "range() is only supported in for loops"),
        }
    }
}

/// Boolean view of a scalar: numbers are true when non-zero.
fn truthy(e: IrExpr) -> IrExpr {
    match e.ty() {
        IrType::Bool => e,
        t => IrExpr::bin(IrBinOp::Ne, e, IrExpr::Const(t.zero(), t)),
    }
}

/// Implicit widening (int to float); other types pass unchanged.
fn coerce(e: IrExpr, to: IrType) -> IrExpr {
    if e.ty() == to {
        return e;
    }
    match (&e, to) {
        (IrExpr::Const(Value::BV(b), IrType::Int(it)), IrType::Float) => {
            let v = if it.signed { b.to_signed() } else { b.to_unsigned() };
            IrExpr::Const(Value::FP(v.to_f64().unwrap_or(f64::NAN)), IrType::Float)
        }
        (_, IrType::Float) if e.ty().width() > 0 && matches!(e.ty(), IrType::Int(_)) => {
            IrExpr::Cast(IrType::Float, Box::new(e))
        }
        _ => e,
    }
}

/// Conversions requested by `int()`, `float()` and `uintN()`.
fn coerce_explicit(e: IrExpr, to: IrType) -> IrExpr {
    if e.ty() == to {
        e
    } else {
        IrExpr::Cast(to, Box::new(e))
    }
}

fn stmt_target_name(s: &Stmt) -> Option<&str> {
    target_of(s).and_then(Expr::as_name)
}

fn target_of(s: &Stmt) -> Option<&Expr> {
    match &s.kind {
        StmtKind::AnnAssign { target, .. } => Some(target),
        StmtKind::Assign { targets, .. } => targets.first(),
        _ => None,
    }
}

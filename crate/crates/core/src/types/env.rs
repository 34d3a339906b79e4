use std::collections::HashSet;

use indexmap::IndexMap;
use num_bigint::BigInt;
use serde::Serialize;

use super::{scalar_from_name, FunctionSig, IntType, TypeError, TypeOptions, VerifierType};
use crate::ast::{
    BinOpKind, CmpOpKind, Constant, Expr, ExprKind, Location, UnaryOpKind,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionInfo {
    pub qualified: String,
    pub module: String,
    /// Qualified name of the defining class for methods.
    pub class: Option<String>,
    pub name: String,
    /// Parameter names and types; a type is `None` only while inference is
    /// still looking for it.
    pub params: Vec<(String, Option<VerifierType>)>,
    pub defaults: usize,
    pub ret: Option<VerifierType>,
    /// Types of parameters and locals.
    pub locals: IndexMap<String, VerifierType>,
    pub loc: Location,
}

impl FunctionInfo {
    pub fn sig(&self) -> Option<FunctionSig> {
        let params = self
            .params
            .iter()
            .map(|(_, t)| t.clone())
            .collect::<Option<Vec<_>>>()?;
        Some(FunctionSig {
            params,
            ret: Box::new(self.ret.clone()?),
        })
    }

    pub fn param_types(&self) -> impl Iterator<Item = &VerifierType> {
        self.params.iter().filter_map(|(_, t)| t.as_ref())
    }

    pub fn is_method(&self) -> bool {
        self.class.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttrInfo {
    pub ty: VerifierType,
    /// Initializer of a class-level attribute; instances start with it.
    #[serde(skip)]
    pub default: Option<Expr>,
    pub class_level: bool,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassInfo {
    pub qualified: String,
    pub module: String,
    pub name: String,
    /// Qualified base names in source order.
    pub bases: Vec<String>,
    pub attributes: IndexMap<String, AttrInfo>,
    /// Method name to qualified function name.
    pub methods: IndexMap<String, String>,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Binding {
    Function(String),
    Class(String),
    Module(String),
    Global { module: String, name: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModuleScope {
    pub globals: IndexMap<String, VerifierType>,
    pub bindings: IndexMap<String, Binding>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Builtin {
    NondetInt,
    NondetBool,
    NondetFloat,
    NondetUint(u32),
    Assume,
    Abs,
    Min,
    Max,
    Int,
    Float,
    Bool,
    Len,
    Range,
    ToUint(u32),
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "nondet_int" => Builtin::NondetInt,
            "nondet_bool" => Builtin::NondetBool,
            "nondet_float" => Builtin::NondetFloat,
            "nondet_uint64" => Builtin::NondetUint(64),
            "nondet_uint128" => Builtin::NondetUint(128),
            "nondet_uint256" => Builtin::NondetUint(256),
            "__ESBMC_assume" | "__VERIFIER_assume" => Builtin::Assume,
            "abs" => Builtin::Abs,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "int" => Builtin::Int,
            "float" => Builtin::Float,
            "bool" => Builtin::Bool,
            "len" => Builtin::Len,
            "range" => Builtin::Range,
            "uint64" => Builtin::ToUint(64),
            "uint128" => Builtin::ToUint(128),
            "uint256" => Builtin::ToUint(256),
            _ => return None,
        })
    }

    pub fn is_nondet(self) -> bool {
        matches!(
            self,
            Builtin::NondetInt | Builtin::NondetBool | Builtin::NondetFloat | Builtin::NondetUint(_)
        )
    }

    /// Name of the nondet builtin producing values of `ty`.
    pub fn nondet_name_for(ty: &VerifierType) -> Option<String> {
        match ty {
            VerifierType::Bool => Some("nondet_bool".into()),
            VerifierType::Float => Some("nondet_float".into()),
            VerifierType::Int(t) if t.signed => Some("nondet_int".into()),
            VerifierType::Int(t) => Some(format!("nondet_uint{}", t.width)),
            _ => None,
        }
    }
}

/// Target of a call expression after name resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Callee {
    Builtin(Builtin),
    Function(String),
    Constructor(String),
    /// `receiver.method(...)`; dispatched on the receiver's runtime class.
    Method {
        receiver: Expr,
        class: String,
        method: String,
        function: String,
    },
    /// `Class.method(self, ...)`; resolved statically.
    ExplicitMethod(String),
}

/// Global registries plus per-module bindings. Local scopes are passed in by
/// callers so the same environment serves inference, checking, and lowering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeEnvironment {
    #[serde(skip)]
    pub opts: TypeOptions,
    pub modules: IndexMap<String, ModuleScope>,
    pub functions: IndexMap<String, FunctionInfo>,
    pub classes: IndexMap<String, ClassInfo>,
}

/// Where an expression is being typed: its module and the enclosing
/// function's locals (empty at module level).
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    pub module: &'a str,
    pub locals: &'a IndexMap<String, VerifierType>,
}

fn err<T>(reason: impl Into<String>, loc: Location) -> Result<T, TypeError> {
    Err(TypeError::untypeable(reason, loc))
}

/// True for integer constant expressions whose type follows their context.
pub fn is_int_literal(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Constant(Constant::Int(_)) => true,
        ExprKind::UnaryOp { op, operand } => {
            !matches!(op, UnaryOpKind::Not) && is_int_literal(operand)
        }
        ExprKind::BinOp { left, op, right } => {
            !matches!(op, BinOpKind::Div) && is_int_literal(left) && is_int_literal(right)
        }
        _ => false,
    }
}

/// Value of an integer constant expression under unbounded semantics.
pub fn literal_value(e: &Expr) -> Option<BigInt> {
    use num_integer_like::*;
    match &e.kind {
        ExprKind::Constant(Constant::Int(i)) => Some(i.clone()),
        ExprKind::UnaryOp { op, operand } => {
            let v = literal_value(operand)?;
            match op {
                UnaryOpKind::USub => Some(-v),
                UnaryOpKind::UAdd => Some(v),
                UnaryOpKind::Invert => Some(-v - 1),
                UnaryOpKind::Not => None,
            }
        }
        ExprKind::BinOp { left, op, right } => {
            let (l, r) = (literal_value(left)?, literal_value(right)?);
            match op {
                BinOpKind::Add => Some(l + r),
                BinOpKind::Sub => Some(l - r),
                BinOpKind::Mult => Some(l * r),
                BinOpKind::FloorDiv => floor_div(&l, &r),
                BinOpKind::Mod => floor_mod(&l, &r),
                BinOpKind::Pow => {
                    let e: u32 = r.try_into().ok()?;
                    (e <= 512).then(|| num_traits::pow(l, e as usize))
                }
                BinOpKind::LShift => {
                    let s: u32 = r.try_into().ok()?;
                    (s <= 512).then(|| l << s)
                }
                BinOpKind::RShift => {
                    let s: u32 = r.try_into().ok()?;
                    Some(l >> s)
                }
                BinOpKind::BitAnd => Some(l & r),
                BinOpKind::BitOr => Some(l | r),
                BinOpKind::BitXor => Some(l ^ r),
                BinOpKind::Div => None,
            }
        }
        _ => None,
    }
}

mod num_integer_like {
    use num_bigint::BigInt;
    use num_traits::{Signed, Zero};

    pub fn floor_div(a: &BigInt, b: &BigInt) -> Option<BigInt> {
        if b.is_zero() {
            return None;
        }
        let q = a / b;
        let r = a - &q * b;
        if !r.is_zero() && (r.is_negative() != b.is_negative()) {
            Some(q - 1)
        } else {
            Some(q)
        }
    }

    pub fn floor_mod(a: &BigInt, b: &BigInt) -> Option<BigInt> {
        let q = floor_div(a, b)?;
        Some(a - q * b)
    }
}

/// Whether `v` is representable in `t`.
pub fn fits(v: &BigInt, t: IntType) -> bool {
    let w = t.width as usize;
    if t.signed {
        let lim = BigInt::from(1) << (w - 1);
        *v >= -lim.clone() && *v < lim
    } else {
        *v >= BigInt::from(0) && *v < (BigInt::from(1) << w)
    }
}

impl TypeEnvironment {
    pub fn new(opts: TypeOptions) -> Self {
        TypeEnvironment {
            opts,
            modules: IndexMap::new(),
            functions: IndexMap::new(),
            classes: IndexMap::new(),
        }
    }

    pub fn default_int(&self) -> VerifierType {
        VerifierType::Int(self.opts.default_int())
    }

    pub fn scope(&self, module: &str) -> Option<&ModuleScope> {
        self.modules.get(module)
    }

    /// Depth-first, left-to-right search of `class` and its bases for the
    /// first class satisfying `pred`.
    pub fn dfs_find(&self, class: &str, pred: &dyn Fn(&ClassInfo) -> bool) -> Option<&ClassInfo> {
        let mut seen = HashSet::new();
        self.dfs_inner(class, pred, &mut seen)
    }

    fn dfs_inner<'a>(
        &'a self,
        class: &str,
        pred: &dyn Fn(&ClassInfo) -> bool,
        seen: &mut HashSet<String>,
    ) -> Option<&'a ClassInfo> {
        if !seen.insert(class.to_string()) {
            return None;
        }
        let info = self.classes.get(class)?;
        if pred(info) {
            return Some(info);
        }
        info.bases
            .iter()
            .find_map(|b| self.dfs_inner(b, pred, seen))
    }

    pub fn find_method(&self, class: &str, name: &str) -> Option<&str> {
        self.dfs_find(class, &|c| c.methods.contains_key(name))
            .map(|c| c.methods[name].as_str())
    }

    pub fn find_attribute(&self, class: &str, name: &str) -> Option<&AttrInfo> {
        self.dfs_find(class, &|c| c.attributes.contains_key(name))
            .map(|c| &c.attributes[name])
    }

    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        self.dfs_find(sub, &|c| c.qualified == sup).is_some()
    }

    /// Union of own and inherited attributes, in DFS order with the most
    /// derived definition winning.
    pub fn record_fields(&self, class: &str) -> IndexMap<String, AttrInfo> {
        let mut out = IndexMap::new();
        let mut order = Vec::new();
        let mut seen = HashSet::new();
        self.collect_classes(class, &mut order, &mut seen);
        for c in order {
            for (name, attr) in &self.classes[&c].attributes {
                out.entry(name.clone()).or_insert_with(|| attr.clone());
            }
        }
        out
    }

    fn collect_classes(&self, class: &str, order: &mut Vec<String>, seen: &mut HashSet<String>) {
        if !seen.insert(class.to_string()) {
            return;
        }
        if let Some(info) = self.classes.get(class) {
            order.push(class.to_string());
            for b in &info.bases {
                self.collect_classes(b, order, seen);
            }
        }
    }

    /// Whether a value of type `from` may be stored where `to` is expected.
    pub fn assignable(&self, to: &VerifierType, from: &VerifierType) -> bool {
        match (to, from) {
            (a, b) if a == b => true,
            (VerifierType::Float, VerifierType::Int(_)) => true,
            (VerifierType::Class(a), VerifierType::Class(b)) => self.is_subclass(b, a),
            (
                VerifierType::List { elem: e1, len: None },
                VerifierType::List { elem: e2, .. },
            ) => e1 == e2,
            _ => false,
        }
    }

    /// Resolves a type annotation in the context of `module`.
    pub fn parse_annotation(&self, module: &str, e: &Expr) -> Result<VerifierType, TypeError> {
        let bad = || TypeError::BadAnnotation {
            text: crate::ast::unparse_expr(e),
            loc: e.loc,
        };
        match &e.kind {
            ExprKind::Constant(Constant::None) => Ok(VerifierType::None),
            ExprKind::Name(n) => {
                if let Some(t) = scalar_from_name(n, &self.opts) {
                    return Ok(t);
                }
                match self.binding(module, n) {
                    Some(Binding::Class(q)) => Ok(VerifierType::Class(q.clone())),
                    _ => Err(bad()),
                }
            }
            ExprKind::Attribute { value, attr } => {
                let Some(m) = value.as_name() else {
                    return Err(bad());
                };
                match self.binding(module, m) {
                    Some(Binding::Module(target)) => match self.binding(target, attr) {
                        Some(Binding::Class(q)) if self.classes[q].module == *target => {
                            Ok(VerifierType::Class(q.clone()))
                        }
                        _ => Err(bad()),
                    },
                    _ => Err(bad()),
                }
            }
            ExprKind::Subscript { value, index } => match value.as_name() {
                Some("list" | "List") => {
                    let elem = self.parse_annotation(module, index)?;
                    if !elem.is_scalar() {
                        return Err(bad());
                    }
                    Ok(VerifierType::list(elem, None))
                }
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }

    pub fn binding(&self, module: &str, name: &str) -> Option<&Binding> {
        self.modules.get(module)?.bindings.get(name)
    }

    fn global_type(&self, module: &str, name: &str) -> Option<&VerifierType> {
        self.modules.get(module)?.globals.get(name)
    }

    /// Type of a variable reference, following imports of module globals.
    pub fn variable_type(&self, ctx: &Ctx, name: &str) -> Option<VerifierType> {
        if let Some(t) = ctx.locals.get(name) {
            return Some(t.clone());
        }
        if let Some(t) = self.global_type(ctx.module, name) {
            return Some(t.clone());
        }
        match self.binding(ctx.module, name) {
            Some(Binding::Global { module, name }) => self.global_type(module, name).cloned(),
            _ => None,
        }
    }

    /// Resolves the function position of a call.
    pub fn resolve_callee(&self, ctx: &Ctx, func: &Expr) -> Result<Callee, TypeError> {
        match &func.kind {
            ExprKind::Name(n) => {
                if self.variable_type(ctx, n).is_some() {
                    return err(format!("`{n}` is not callable"), func.loc);
                }
                match self.binding(ctx.module, n) {
                    Some(Binding::Function(q)) => Ok(Callee::Function(q.clone())),
                    Some(Binding::Class(q)) => Ok(Callee::Constructor(q.clone())),
                    Some(_) => err(format!("`{n}` is not callable"), func.loc),
                    None => match Builtin::from_name(n) {
                        Some(b) => Ok(Callee::Builtin(b)),
                        None => Err(TypeError::UnknownName {
                            name: n.clone(),
                            loc: func.loc,
                        }),
                    },
                }
            }
            ExprKind::Attribute { value, attr } => {
                if let Some(base) = value.as_name() {
                    if self.variable_type(ctx, base).is_none() {
                        match self.binding(ctx.module, base) {
                            Some(Binding::Module(m)) => {
                                return match self.binding(m, attr) {
                                    Some(Binding::Function(q)) => Ok(Callee::Function(q.clone())),
                                    Some(Binding::Class(q)) => Ok(Callee::Constructor(q.clone())),
                                    _ => Err(TypeError::UnknownName {
                                        name: format!("{base}.{attr}"),
                                        loc: func.loc,
                                    }),
                                };
                            }
                            Some(Binding::Class(c)) => {
                                return match self.find_method(c, attr) {
                                    Some(f) => Ok(Callee::ExplicitMethod(f.to_string())),
                                    None => err(
                                        format!("class `{base}` has no method `{attr}`"),
                                        func.loc,
                                    ),
                                };
                            }
                            _ => {}
                        }
                    }
                }
                let recv_ty = self.type_of(ctx, value, None)?;
                let VerifierType::Class(class) = &recv_ty else {
                    return err(
                        format!("method call on non-object of type {recv_ty}"),
                        func.loc,
                    );
                };
                match self.find_method(class, attr) {
                    Some(f) => Ok(Callee::Method {
                        receiver: (**value).clone(),
                        class: class.clone(),
                        method: attr.clone(),
                        function: f.to_string(),
                    }),
                    None => err(
                        format!("`{}` has no method `{attr}`", super::short_name(class)),
                        func.loc,
                    ),
                }
            }
            _ => err("unsupported call target", func.loc),
        }
    }

    /// Parameter list of a user-level callee after dropping the implicit
    /// receiver, with the underlying function's qualified name.
    pub fn callee_params<'a>(
        &'a self,
        callee: &Callee,
    ) -> Option<(&'a FunctionInfo, &'a [(String, Option<VerifierType>)])> {
        match callee {
            Callee::Function(q) | Callee::ExplicitMethod(q) => {
                let f = self.functions.get(q)?;
                Some((f, &f.params[..]))
            }
            Callee::Method { function, .. } => {
                let f = self.functions.get(function)?;
                Some((f, f.params.get(1..).unwrap_or(&[])))
            }
            Callee::Constructor(c) => {
                let init = self.find_method(c, "__init__")?;
                let f = self.functions.get(init)?;
                Some((f, f.params.get(1..).unwrap_or(&[])))
            }
            Callee::Builtin(_) => None,
        }
    }

    /// Types both operands of a binary arithmetic or comparison node, letting
    /// integer literals take the type of the other side.
    pub fn operand_types(
        &self,
        ctx: &Ctx,
        l: &Expr,
        r: &Expr,
        expected: Option<&VerifierType>,
    ) -> Result<(VerifierType, VerifierType), TypeError> {
        match (is_int_literal(l), is_int_literal(r)) {
            (true, false) => {
                let rt = self.type_of(ctx, r, None)?;
                let lt = self.type_of(ctx, l, Some(&rt))?;
                Ok((lt, rt))
            }
            (false, true) => {
                let lt = self.type_of(ctx, l, None)?;
                let rt = self.type_of(ctx, r, Some(&lt))?;
                Ok((lt, rt))
            }
            (true, true) => {
                let exp = expected.filter(|t| t.is_numeric());
                Ok((self.type_of(ctx, l, exp)?, self.type_of(ctx, r, exp)?))
            }
            (false, false) => Ok((self.type_of(ctx, l, None)?, self.type_of(ctx, r, None)?)),
        }
    }

    pub fn binop_result(
        &self,
        op: BinOpKind,
        lt: &VerifierType,
        rt: &VerifierType,
        loc: Location,
    ) -> Result<VerifierType, TypeError> {
        use VerifierType as T;
        match (lt, rt) {
            (T::Int(a), T::Int(b)) => {
                if a != b {
                    return err(
                        format!(
                            "mixed-width integer arithmetic ({lt} {} {rt}) needs an explicit conversion",
                            op.symbol()
                        ),
                        loc,
                    );
                }
                if op == BinOpKind::Div {
                    return err("true division `/` on integers is not supported; use `//`", loc);
                }
                Ok(lt.clone())
            }
            (T::Float, T::Float) | (T::Float, T::Int(_)) | (T::Int(_), T::Float) => match op {
                BinOpKind::Add
                | BinOpKind::Sub
                | BinOpKind::Mult
                | BinOpKind::Div
                | BinOpKind::Pow => Ok(T::Float),
                _ => err(format!("operator `{}` is not supported on float", op.symbol()), loc),
            },
            (T::Bool, T::Bool)
                if matches!(op, BinOpKind::BitAnd | BinOpKind::BitOr | BinOpKind::BitXor) =>
            {
                Ok(T::Bool)
            }
            _ => err(
                format!("unsupported operand types for `{}`: {lt} and {rt}", op.symbol()),
                loc,
            ),
        }
    }

    pub fn comparable(&self, op: CmpOpKind, a: &VerifierType, b: &VerifierType) -> bool {
        use VerifierType as T;
        match (a, b) {
            (T::Int(x), T::Int(y)) => x == y,
            (T::Float, T::Float) | (T::Float, T::Int(_)) | (T::Int(_), T::Float) => true,
            (T::Bool, T::Bool) => matches!(op, CmpOpKind::Eq | CmpOpKind::NotEq),
            _ => false,
        }
    }

    /// Checks that `e` can serve as a branch or assertion condition.
    pub fn condition_ok(&self, t: &VerifierType) -> bool {
        t.is_scalar()
    }

    /// Types an expression. `expected` only influences integer literals and
    /// empty list literals.
    pub fn type_of(
        &self,
        ctx: &Ctx,
        e: &Expr,
        expected: Option<&VerifierType>,
    ) -> Result<VerifierType, TypeError> {
        use VerifierType as T;
        match &e.kind {
            ExprKind::Constant(c) => match c {
                Constant::None => Ok(T::None),
                Constant::Bool(_) => Ok(T::Bool),
                Constant::Float(_) => Ok(T::Float),
                Constant::Int(v) => {
                    let t = match expected {
                        Some(T::Int(t)) => *t,
                        Some(T::Float) => return Ok(T::Float),
                        _ => self.opts.default_int(),
                    };
                    if !fits(v, t) {
                        return err(format!("literal {v} does not fit in {}", T::Int(t)), e.loc);
                    }
                    Ok(T::Int(t))
                }
                Constant::Str(_) => err("string values are not supported", e.loc),
            },
            ExprKind::Name(n) => match self.variable_type(ctx, n) {
                Some(t) => Ok(t),
                None => {
                    if self.binding(ctx.module, n).is_some() || Builtin::from_name(n).is_some() {
                        err(format!("`{n}` cannot be used as a value"), e.loc)
                    } else {
                        Err(TypeError::UnknownName {
                            name: n.clone(),
                            loc: e.loc,
                        })
                    }
                }
            },
            ExprKind::Attribute { value, attr } => self.attribute_type(ctx, value, attr, e.loc),
            ExprKind::BinOp { left, op, right } => {
                if let (BinOpKind::Pow, false) = (op, is_int_literal(e)) {
                    let lt = self.type_of(ctx, left, expected)?;
                    match literal_value(right) {
                        Some(v) if v >= BigInt::from(0) && v <= BigInt::from(64) => {}
                        _ => {
                            return err(
                                "exponent must be an integer constant between 0 and 64",
                                right.loc,
                            )
                        }
                    }
                    if !lt.is_numeric() {
                        return err(format!("unsupported operand type for `**`: {lt}"), e.loc);
                    }
                    return Ok(lt);
                }
                if matches!(op, BinOpKind::LShift | BinOpKind::RShift) {
                    let (lt, rt) = self.operand_types(ctx, left, right, expected)?;
                    return match (&lt, &rt) {
                        (T::Int(a), T::Int(b)) if a == b => Ok(lt),
                        _ => err(
                            format!("unsupported operand types for `{}`: {lt} and {rt}", op.symbol()),
                            e.loc,
                        ),
                    };
                }
                let (lt, rt) = self.operand_types(ctx, left, right, expected)?;
                self.binop_result(*op, &lt, &rt, e.loc)
            }
            ExprKind::BoolOp { values, .. } => {
                for v in values {
                    let t = self.type_of(ctx, v, None)?;
                    if t != T::Bool {
                        return err(format!("`and`/`or` operand has type {t}, expected bool"), v.loc);
                    }
                }
                Ok(T::Bool)
            }
            ExprKind::UnaryOp { op, operand } => {
                let t = self.type_of(ctx, operand, expected)?;
                match (op, &t) {
                    (UnaryOpKind::Not, t) if t.is_scalar() => Ok(T::Bool),
                    (UnaryOpKind::USub | UnaryOpKind::UAdd, T::Int(_) | T::Float) => Ok(t),
                    (UnaryOpKind::Invert, T::Int(_)) => Ok(t),
                    _ => err(format!("bad operand type for unary {op:?}: {t}"), e.loc),
                }
            }
            ExprKind::Compare {
                left,
                ops,
                comparators,
            } => {
                let mut prev = &**left;
                for (op, next) in ops.iter().zip(comparators) {
                    let (a, b) = self.operand_types(ctx, prev, next, None)?;
                    if !self.comparable(*op, &a, &b) {
                        return err(
                            format!("cannot compare {a} {} {b}", op.symbol()),
                            e.loc,
                        );
                    }
                    prev = next;
                }
                Ok(T::Bool)
            }
            ExprKind::Call { func, args } => {
                let callee = self.resolve_callee(ctx, func)?;
                self.call_type(ctx, &callee, args, expected, e.loc)
            }
            ExprKind::Subscript { value, index } => {
                let vt = self.type_of(ctx, value, None)?;
                let T::List { elem, .. } = vt else {
                    return err(format!("subscript of non-list type {vt}"), e.loc);
                };
                let it = self.type_of(ctx, index, None)?;
                if !it.is_int() {
                    return err(format!("list index has type {it}, expected an integer"), index.loc);
                }
                Ok(*elem)
            }
            ExprKind::List(elts) => {
                let exp_elem = match expected {
                    Some(T::List { elem, .. }) => Some(&**elem),
                    _ => None,
                };
                let mut elem_ty: Option<T> = exp_elem.cloned();
                // Non-literal elements fix the element type first.
                for x in elts.iter().filter(|x| !is_int_literal(x)) {
                    let t = self.type_of(ctx, x, elem_ty.as_ref())?;
                    match &elem_ty {
                        None => elem_ty = Some(t),
                        Some(et) if self.assignable(et, &t) => {}
                        Some(et) => {
                            return err(format!("list elements of types {et} and {t}"), x.loc)
                        }
                    }
                }
                for x in elts.iter().filter(|x| is_int_literal(x)) {
                    let t = self.type_of(ctx, x, elem_ty.as_ref())?;
                    if elem_ty.is_none() {
                        elem_ty = Some(t);
                    }
                }
                let Some(elem) = elem_ty else {
                    return err("cannot infer the element type of an empty list", e.loc);
                };
                if !elem.is_scalar() {
                    return err(format!("lists of {elem} are not supported"), e.loc);
                }
                Ok(T::list(elem, Some(elts.len())))
            }
        }
    }

    fn attribute_type(
        &self,
        ctx: &Ctx,
        value: &Expr,
        attr: &str,
        loc: Location,
    ) -> Result<VerifierType, TypeError> {
        if let Some(base) = value.as_name() {
            if self.variable_type(ctx, base).is_none() {
                match self.binding(ctx.module, base) {
                    Some(Binding::Module(m)) => {
                        return match self.global_type(m, attr) {
                            Some(t) => Ok(t.clone()),
                            None => Err(TypeError::UnknownName {
                                name: format!("{base}.{attr}"),
                                loc,
                            }),
                        };
                    }
                    Some(Binding::Class(c)) => {
                        return match self.find_attribute(c, attr) {
                            Some(a) if a.class_level => Ok(a.ty.clone()),
                            _ => err(format!("class `{base}` has no class attribute `{attr}`"), loc),
                        };
                    }
                    _ => {}
                }
            }
        }
        let t = self.type_of(ctx, value, None)?;
        match &t {
            VerifierType::Class(c) => match self.find_attribute(c, attr) {
                Some(a) => Ok(a.ty.clone()),
                None => err(
                    format!("`{}` object has no attribute `{attr}`", super::short_name(c)),
                    loc,
                ),
            },
            _ => err(format!("attribute access on value of type {t}"), loc),
        }
    }

    fn arity(&self, b: Builtin, args: &[Expr], n: usize, loc: Location) -> Result<(), TypeError> {
        if args.len() == n {
            Ok(())
        } else {
            err(
                format!("{b:?} expects {n} argument(s), got {}", args.len()),
                loc,
            )
        }
    }

    pub fn call_type(
        &self,
        ctx: &Ctx,
        callee: &Callee,
        args: &[Expr],
        expected: Option<&VerifierType>,
        loc: Location,
    ) -> Result<VerifierType, TypeError> {
        use VerifierType as T;
        match callee {
            Callee::Builtin(b) => match b {
                Builtin::NondetInt => self.arity(*b, args, 0, loc).map(|_| match expected {
                    Some(T::Int(t)) if t.signed => T::Int(*t),
                    _ => self.default_int(),
                }),
                Builtin::NondetBool => self.arity(*b, args, 0, loc).map(|_| T::Bool),
                Builtin::NondetFloat => self.arity(*b, args, 0, loc).map(|_| T::Float),
                Builtin::NondetUint(w) => self
                    .arity(*b, args, 0, loc)
                    .map(|_| T::Int(IntType::unsigned(*w))),
                Builtin::Assume => {
                    self.arity(*b, args, 1, loc)?;
                    let t = self.type_of(ctx, &args[0], None)?;
                    if !self.condition_ok(&t) {
                        return err(format!("assumption has type {t}"), args[0].loc);
                    }
                    Ok(T::None)
                }
                Builtin::Abs => {
                    self.arity(*b, args, 1, loc)?;
                    let t = self.type_of(ctx, &args[0], expected)?;
                    if !t.is_numeric() {
                        return err(format!("abs() of {t}"), loc);
                    }
                    Ok(t)
                }
                Builtin::Min | Builtin::Max => {
                    if args.len() < 2 {
                        return err("min()/max() need at least two arguments", loc);
                    }
                    self.unify_numeric(ctx, args, expected, loc)
                }
                Builtin::Int | Builtin::Float | Builtin::Bool => {
                    self.arity(*b, args, 1, loc)?;
                    let target = match b {
                        Builtin::Int => self.default_int(),
                        Builtin::Float => T::Float,
                        _ => T::Bool,
                    };
                    let t = self.type_of(ctx, &args[0], Some(&target))?;
                    if !t.is_scalar() {
                        return err(format!("cannot convert {t} to {target}"), loc);
                    }
                    Ok(target)
                }
                Builtin::ToUint(w) => {
                    self.arity(*b, args, 1, loc)?;
                    let target = T::Int(IntType::unsigned(*w));
                    let t = self.type_of(ctx, &args[0], Some(&target))?;
                    if !matches!(t, T::Int(_) | T::Bool) {
                        return err(format!("cannot convert {t} to {target}"), loc);
                    }
                    Ok(target)
                }
                Builtin::Len => {
                    self.arity(*b, args, 1, loc)?;
                    match self.type_of(ctx, &args[0], None)? {
                        T::List { .. } => Ok(self.default_int()),
                        t => err(format!("len() of {t}"), loc),
                    }
                }
                Builtin::Range => err("range() is only supported as a for-loop iterable", loc),
            },
            _ => {
                let (f, params) = match self.callee_params(callee) {
                    Some(p) => p,
                    None => {
                        return match callee {
                            // Classes without any __init__ take no arguments.
                            Callee::Constructor(c) if args.is_empty() => Ok(T::Class(c.clone())),
                            _ => err("call to an unknown function", loc),
                        }
                    }
                };
                let required = params.len() - f.defaults.min(params.len());
                if args.len() < required || args.len() > params.len() {
                    return err(
                        format!(
                            "`{}` expects {} argument(s), got {}",
                            f.name,
                            params.len(),
                            args.len()
                        ),
                        loc,
                    );
                }
                for (arg, (pname, pty)) in args.iter().zip(params) {
                    let Some(pty) = pty else {
                        return err(format!("parameter `{pname}` of `{}` has no type", f.name), loc);
                    };
                    let at = self.type_of(ctx, arg, Some(pty))?;
                    if !self.assignable(pty, &at) {
                        return err(
                            format!(
                                "argument `{pname}` of `{}` expects {pty}, got {at}",
                                f.name
                            ),
                            arg.loc,
                        );
                    }
                }
                match callee {
                    Callee::Constructor(c) => Ok(T::Class(c.clone())),
                    _ => match &f.ret {
                        Some(t) => Ok(t.clone()),
                        None => err(format!("return type of `{}` is not known yet", f.name), loc),
                    },
                }
            }
        }
    }

    fn unify_numeric(
        &self,
        ctx: &Ctx,
        args: &[Expr],
        expected: Option<&VerifierType>,
        loc: Location,
    ) -> Result<VerifierType, TypeError> {
        let mut ty: Option<VerifierType> = None;
        for a in args.iter().filter(|a| !is_int_literal(a)) {
            let t = self.type_of(ctx, a, None)?;
            ty = Some(match ty {
                None => t,
                Some(prev) => self.join_numeric(&prev, &t, loc)?,
            });
        }
        let ty = ty.or_else(|| expected.filter(|t| t.is_numeric()).cloned());
        let ty = ty.unwrap_or_else(|| self.default_int());
        for a in args.iter().filter(|a| is_int_literal(a)) {
            self.type_of(ctx, a, Some(&ty))?;
        }
        if !ty.is_numeric() {
            return err(format!("min()/max() of {ty}"), loc);
        }
        Ok(ty)
    }

    fn join_numeric(
        &self,
        a: &VerifierType,
        b: &VerifierType,
        loc: Location,
    ) -> Result<VerifierType, TypeError> {
        use VerifierType as T;
        match (a, b) {
            (T::Int(x), T::Int(y)) if x == y => Ok(a.clone()),
            (T::Float, T::Float) | (T::Float, T::Int(_)) | (T::Int(_), T::Float) => Ok(T::Float),
            _ => err(format!("incompatible types {a} and {b}"), loc),
        }
    }
}

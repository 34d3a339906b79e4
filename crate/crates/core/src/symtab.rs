//! Flat symbol table built from the annotated program, plus the synthesized
//! verification entry point.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::ast::{Expr, ExprKind, FunctionDef, Location, Stmt, StmtKind};
use crate::types::{Callee, FunctionSig, TypeEnvironment, VerifierType};
use crate::unit::ProgramUnit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymtabError {
    #[error("duplicate definition of `{name}` at {loc}")]
    DuplicateDefinition { name: String, loc: Location },
    #[error("unresolved name `{name}` at {loc}")]
    UnresolvedName { name: String, loc: Location },
    #[error("class `{class}` has no member `{member}`")]
    MemberNotFound { class: String, member: String },
    #[error("function `{0}` not found")]
    FunctionNotFound(String),
    #[error("cannot synthesize a nondeterministic {ty} for parameter `{param}`")]
    UnsupportedHarnessParam { param: String, ty: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymbolKind {
    Variable,
    Parameter,
    Function,
    Class,
    Attribute,
    Method,
}

impl SymbolKind {
    pub fn name(self) -> &'static str {
        match self {
            SymbolKind::Variable => "variable",
            SymbolKind::Parameter => "parameter",
            SymbolKind::Function => "function",
            SymbolKind::Class => "class",
            SymbolKind::Attribute => "attribute",
            SymbolKind::Method => "method",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Symbol {
    /// `module@class@function@identifier`, omitting absent parts.
    pub qualified_name: String,
    pub ty: VerifierType,
    pub kind: SymbolKind,
    pub module: String,
    pub location: Location,
    #[serde(skip)]
    pub value: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMeta {
    pub qualified: String,
    pub bases: Vec<String>,
    pub attributes: Vec<String>,
    pub methods: Vec<String>,
}

/// A function body ready for lowering.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub qualified: String,
    pub module: String,
    pub class: Option<String>,
    pub name: String,
    pub params: Vec<(String, VerifierType)>,
    pub ret: VerifierType,
    /// Default values of the trailing parameters.
    pub defaults: Vec<Expr>,
    pub body: Vec<Stmt>,
    pub loc: Location,
}

/// How verification starts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Entry {
    /// Run module top-levels (imports first, main last).
    TopLevel { modules: Vec<String> },
    /// Call one function with nondeterministic arguments.
    Harness {
        target: String,
        params: Vec<(String, VerifierType)>,
        /// Class of the receiver when the target is a method.
        receiver: Option<String>,
        /// Modules whose call-free global initializers run first.
        modules: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    pub symbols: IndexMap<String, Symbol>,
    pub classes: IndexMap<String, ClassMeta>,
    pub functions: IndexMap<String, FunctionDecl>,
    /// Top-level statements per module.
    pub toplevel: IndexMap<String, Vec<Stmt>>,
    pub entry_name: String,
    pub entry: Entry,
    pub env: TypeEnvironment,
    pub main_module: String,
}

pub const TOPLEVEL: &str = "__toplevel__";
pub const HARNESS: &str = "__harness__";

impl SymbolTable {
    fn insert(&mut self, sym: Symbol) -> Result<(), SymtabError> {
        if self.symbols.contains_key(&sym.qualified_name) {
            return Err(SymtabError::DuplicateDefinition {
                name: sym.qualified_name,
                loc: sym.location,
            });
        }
        self.symbols.insert(sym.qualified_name.clone(), sym);
        Ok(())
    }

    pub fn get(&self, qualified: &str) -> Option<&Symbol> {
        self.symbols.get(qualified)
    }

    /// Text listing used by `--show-symbol-table`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in self.symbols.values() {
            let _ = writeln!(out, "{:<10} {} : {}", s.kind.name(), s.qualified_name, s.ty);
        }
        for c in self.classes.values() {
            let _ = writeln!(
                out,
                "class {} bases [{}]",
                c.qualified,
                c.bases.join(", ")
            );
        }
        let _ = writeln!(out, "entry {}", self.entry_name);
        out
    }
}

/// Looks `member` up in `class`, then depth-first left-to-right in its bases.
pub fn resolve_member<'a>(
    st: &'a SymbolTable,
    class: &str,
    member: &str,
) -> Result<&'a Symbol, SymtabError> {
    let found = st
        .env
        .dfs_find(class, &|c| {
            c.methods.contains_key(member) || c.attributes.contains_key(member)
        })
        .ok_or_else(|| SymtabError::MemberNotFound {
            class: class.to_string(),
            member: member.to_string(),
        })?;
    st.symbols
        .get(&format!("{}@{member}", found.qualified))
        .ok_or_else(|| SymtabError::MemberNotFound {
            class: class.to_string(),
            member: member.to_string(),
        })
}

fn sig_type(sig: Option<FunctionSig>) -> VerifierType {
    VerifierType::Function(sig.unwrap_or(FunctionSig {
        params: Vec::new(),
        ret: Box::new(VerifierType::None),
    }))
}

/// Builds one symbol per declaration of the annotated unit. With an isolated
/// function only it, its transitive callees, and the classes they need are
/// retained.
pub fn build_symbol_table(
    unit: &ProgramUnit,
    env: &TypeEnvironment,
) -> Result<SymbolTable, SymtabError> {
    let mut st = SymbolTable {
        symbols: IndexMap::new(),
        classes: IndexMap::new(),
        functions: IndexMap::new(),
        toplevel: IndexMap::new(),
        entry_name: String::new(),
        entry: Entry::TopLevel {
            modules: Vec::new(),
        },
        env: env.clone(),
        main_module: unit.main_name.clone(),
    };

    let mut decls: IndexMap<String, FunctionDecl> = IndexMap::new();
    for (mname, module) in unit.modules() {
        let mut top = Vec::new();
        for s in &module.body {
            match &s.kind {
                StmtKind::FunctionDef(f) => {
                    let q = format!("{mname}@{}", f.name);
                    decls.insert(q.clone(), decl(env, &q, mname, None, f));
                }
                StmtKind::ClassDef(c) => {
                    let cq = format!("{mname}@{}", c.name);
                    for cs in &c.body {
                        if let StmtKind::FunctionDef(f) = &cs.kind {
                            let q = format!("{cq}@{}", f.name);
                            decls.insert(q.clone(), decl(env, &q, mname, Some(&cq), f));
                        }
                    }
                }
                _ => top.push(s.clone()),
            }
        }
        st.toplevel.insert(mname.to_string(), top);
    }

    let retained: Option<HashSet<String>> = match &unit.isolated_function {
        None => None,
        Some(name) => {
            let target = isolated_target(unit, name)?;
            Some(reachable_functions(env, &decls, &[target]))
        }
    };
    let keep_fn = |q: &str| retained.as_ref().is_none_or(|r| r.contains(q));

    // Classes needed: all when not isolated, else the enclosing classes of
    // retained methods, classes instantiated or named in retained code, and
    // their bases.
    let mut class_set: Vec<String> = Vec::new();
    match &retained {
        None => class_set.extend(env.classes.keys().cloned()),
        Some(r) => {
            let mut queue: VecDeque<String> = VecDeque::new();
            for q in r {
                if let Some(c) = &decls[q].class {
                    queue.push_back(c.clone());
                }
                for v in decls[q].params.iter().map(|p| &p.1).chain(env.functions[q].locals.values()) {
                    if let VerifierType::Class(c) = v {
                        queue.push_back(c.clone());
                    }
                }
            }
            while let Some(c) = queue.pop_front() {
                if class_set.contains(&c) {
                    continue;
                }
                if let Some(info) = env.classes.get(&c) {
                    queue.extend(info.bases.iter().cloned());
                    class_set.push(c);
                }
            }
            class_set.sort_by_key(|c| env.classes.get_index_of(c));
        }
    }

    for (mname, scope) in &env.modules {
        for (g, ty) in &scope.globals {
            let value = st.toplevel[mname].iter().find_map(|s| match &s.kind {
                StmtKind::AnnAssign {
                    target,
                    value: Some(v),
                    ..
                } if target.as_name() == Some(g) => Some(v.clone()),
                _ => None,
            });
            let loc = st.toplevel[mname]
                .iter()
                .find_map(|s| match &s.kind {
                    StmtKind::AnnAssign { target, .. } if target.as_name() == Some(g) => {
                        Some(s.loc)
                    }
                    _ => None,
                })
                .unwrap_or_default();
            st.insert(Symbol {
                qualified_name: format!("{mname}@{g}"),
                ty: ty.clone(),
                kind: SymbolKind::Variable,
                module: mname.clone(),
                location: loc,
                value,
            })?;
        }
    }

    for c in &class_set {
        let info = &env.classes[c];
        st.insert(Symbol {
            qualified_name: c.clone(),
            ty: VerifierType::Class(c.clone()),
            kind: SymbolKind::Class,
            module: info.module.clone(),
            location: info.loc,
            value: None,
        })?;
        for (a, attr) in &info.attributes {
            st.insert(Symbol {
                qualified_name: format!("{c}@{a}"),
                ty: attr.ty.clone(),
                kind: SymbolKind::Attribute,
                module: info.module.clone(),
                location: attr.loc,
                value: attr.default.clone(),
            })?;
        }
        st.classes.insert(
            c.clone(),
            ClassMeta {
                qualified: c.clone(),
                bases: info.bases.clone(),
                attributes: info.attributes.keys().cloned().collect(),
                methods: info.methods.keys().cloned().collect(),
            },
        );
    }

    for (q, d) in &decls {
        if !keep_fn(q) {
            continue;
        }
        let info = &env.functions[q];
        st.insert(Symbol {
            qualified_name: q.clone(),
            ty: sig_type(info.sig()),
            kind: if d.class.is_some() {
                SymbolKind::Method
            } else {
                SymbolKind::Function
            },
            module: d.module.clone(),
            location: d.loc,
            value: None,
        })?;
        for (name, ty) in &info.locals {
            let is_param = d.params.iter().any(|(p, _)| p == name);
            st.insert(Symbol {
                qualified_name: format!("{q}@{name}"),
                ty: ty.clone(),
                kind: if is_param {
                    SymbolKind::Parameter
                } else {
                    SymbolKind::Variable
                },
                module: d.module.clone(),
                location: d.loc,
                value: None,
            })?;
        }
        st.functions.insert(q.clone(), d.clone());
    }

    for (mname, _) in unit.modules() {
        if unit.isolated_function.is_none() || mname == unit.main_name {
            st.insert(Symbol {
                qualified_name: format!("{mname}@{TOPLEVEL}"),
                ty: sig_type(None),
                kind: SymbolKind::Function,
                module: mname.to_string(),
                location: Location::default(),
                value: None,
            })?;
        }
    }
    synthesize_entry(st, unit)
}

fn decl(
    env: &TypeEnvironment,
    q: &str,
    module: &str,
    class: Option<&str>,
    f: &FunctionDef,
) -> FunctionDecl {
    let info = &env.functions[q];
    FunctionDecl {
        qualified: q.to_string(),
        module: module.to_string(),
        class: class.map(str::to_string),
        name: f.name.clone(),
        params: info
            .params
            .iter()
            .map(|(n, t)| (n.clone(), t.clone().unwrap_or(VerifierType::None)))
            .collect(),
        ret: info.ret.clone().unwrap_or(VerifierType::None),
        defaults: f.args.defaults.clone(),
        body: f.body.clone(),
        loc: f.loc,
    }
}

fn isolated_target(unit: &ProgramUnit, name: &str) -> Result<String, SymtabError> {
    let q = match name.split_once('.') {
        Some((c, m)) => format!("{}@{c}@{m}", unit.main_name),
        None => format!("{}@{name}", unit.main_name),
    };
    Ok(q)
}

/// Functions reachable from `roots` through calls, including every override
/// that virtual dispatch might select.
pub fn reachable_functions(
    env: &TypeEnvironment,
    decls: &IndexMap<String, FunctionDecl>,
    roots: &[String],
) -> HashSet<String> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut queue: VecDeque<String> = roots.iter().cloned().collect();
    while let Some(q) = queue.pop_front() {
        if !seen.insert(q.clone()) {
            continue;
        }
        let Some(d) = decls.get(&q) else { continue };
        let info = &env.functions[&q];
        let ctx = crate::types::Ctx {
            module: &d.module,
            locals: &info.locals,
        };
        let mut calls = Vec::new();
        crate::ast::visit_stmts(&d.body, &mut |_| {}, &mut |e: &Expr| {
            if let ExprKind::Call { func, .. } = &e.kind {
                calls.push(func.as_ref().clone());
            }
        }, &mut |_| {});
        for func in calls {
            match env.resolve_callee(&ctx, &func) {
                Ok(Callee::Function(f)) | Ok(Callee::ExplicitMethod(f)) => queue.push_back(f),
                Ok(Callee::Method { class, method, .. }) => {
                    for (cq, _) in env.classes.iter() {
                        if env.is_subclass(cq, &class) {
                            if let Some(f) = env.find_method(cq, &method) {
                                queue.push_back(f.to_string());
                            }
                        }
                    }
                }
                Ok(Callee::Constructor(c)) => {
                    if let Some(f) = env.find_method(&c, "__init__") {
                        queue.push_back(f.to_string());
                    }
                }
                _ => {}
            }
        }
    }
    seen
}

/// Sets the entry point: the main top-level, or a harness calling the
/// isolated function with one nondeterministic value per parameter.
pub fn synthesize_entry(
    mut st: SymbolTable,
    unit: &ProgramUnit,
) -> Result<SymbolTable, SymtabError> {
    let modules: Vec<String> = unit.modules().map(|(m, _)| m.to_string()).collect();
    let Some(name) = &unit.isolated_function else {
        st.entry_name = format!("{}@{TOPLEVEL}", unit.main_name);
        st.entry = Entry::TopLevel { modules };
        return Ok(st);
    };
    let target = isolated_target(unit, name)?;
    let d = st
        .functions
        .get(&target)
        .ok_or_else(|| SymtabError::FunctionNotFound(name.clone()))?
        .clone();
    let harness = format!("{}@{HARNESS}", unit.main_name);
    let mut params = Vec::new();
    let skip = usize::from(d.class.is_some());
    for (i, (pname, ty)) in d.params.iter().enumerate().skip(skip) {
        let ok = ty.is_scalar() || matches!(ty, VerifierType::Class(_));
        if !ok {
            return Err(SymtabError::UnsupportedHarnessParam {
                param: pname.clone(),
                ty: ty.to_string(),
            });
        }
        let p = format!("p{}", i - skip);
        st.insert(Symbol {
            qualified_name: format!("{harness}@{p}"),
            ty: ty.clone(),
            kind: SymbolKind::Variable,
            module: unit.main_name.clone(),
            location: d.loc,
            value: None,
        })?;
        params.push((p, ty.clone()));
    }
    st.insert(Symbol {
        qualified_name: harness.clone(),
        ty: sig_type(None),
        kind: SymbolKind::Function,
        module: unit.main_name.clone(),
        location: d.loc,
        value: None,
    })?;
    st.entry_name = harness;
    st.entry = Entry::Harness {
        target,
        params,
        receiver: d.class.clone(),
        modules,
    };
    Ok(st)
}

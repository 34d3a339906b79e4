//! Typed view over the JSON AST produced by the `ast-dump` helper.
//!
//! Only the subset of Python the verifier understands is representable here;
//! [`load_ast`] rejects everything else with the offending node's location.

pub(crate) mod json;
mod render;

use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

pub use json::{load_ast, load_ast_str, to_json, AstError, TESTED_PYTHON_VERSIONS};
pub use render::{format_float, render_module_tree, unparse_expr};

/// Source position copied verbatim from the JSON document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Location {
    pub line: u32,
    pub column: u32,
    pub end_line: Option<u32>,
    pub end_column: Option<u32>,
}

impl Location {
    pub fn new(line: u32, column: u32) -> Self {
        Location {
            line,
            column,
            end_line: None,
            end_column: None,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {} column {}", self.line, self.column)
    }
}

/// Every node kind accepted by the loader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AstKind {
    Module,
    FunctionDef,
    ClassDef,
    AnnAssign,
    Assign,
    AugAssign,
    If,
    While,
    For,
    Return,
    Expr,
    Pass,
    Break,
    Continue,
    Assert,
    Import,
    ImportFrom,
    Call,
    Name,
    Attribute,
    Constant,
    BinOp,
    BoolOp,
    UnaryOp,
    Compare,
    Subscript,
    List,
    Arguments,
    Arg,
}

impl AstKind {
    pub fn name(self) -> &'static str {
        match self {
            AstKind::Module => "Module",
            AstKind::FunctionDef => "FunctionDef",
            AstKind::ClassDef => "ClassDef",
            AstKind::AnnAssign => "AnnAssign",
            AstKind::Assign => "Assign",
            AstKind::AugAssign => "AugAssign",
            AstKind::If => "If",
            AstKind::While => "While",
            AstKind::For => "For",
            AstKind::Return => "Return",
            AstKind::Expr => "Expr",
            AstKind::Pass => "Pass",
            AstKind::Break => "Break",
            AstKind::Continue => "Continue",
            AstKind::Assert => "Assert",
            AstKind::Import => "Import",
            AstKind::ImportFrom => "ImportFrom",
            AstKind::Call => "Call",
            AstKind::Name => "Name",
            AstKind::Attribute => "Attribute",
            AstKind::Constant => "Constant",
            AstKind::BinOp => "BinOp",
            AstKind::BoolOp => "BoolOp",
            AstKind::UnaryOp => "UnaryOp",
            AstKind::Compare => "Compare",
            AstKind::Subscript => "Subscript",
            AstKind::List => "List",
            AstKind::Arguments => "arguments",
            AstKind::Arg => "arg",
        }
    }
}

impl fmt::Display for AstKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub body: Vec<Stmt>,
    pub python_version: Option<String>,
}

impl Module {
    pub fn empty() -> Self {
        Module {
            body: Vec::new(),
            python_version: None,
        }
    }

    /// Number of typed nodes, counting the module itself.
    pub fn node_count(&self) -> usize {
        let count = std::cell::Cell::new(1);
        visit_stmts(
            &self.body,
            &mut |_| count.set(count.get() + 1),
            &mut |_| count.set(count.get() + 1),
            &mut |n| count.set(count.get() + n),
        );
        count.get()
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.body.iter().filter_map(|s| match &s.kind {
            StmtKind::FunctionDef(f) => Some(f),
            _ => None,
        })
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.body.iter().filter_map(|s| match &s.kind {
            StmtKind::ClassDef(c) => Some(c),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    FunctionDef(FunctionDef),
    ClassDef(ClassDef),
    AnnAssign {
        target: Expr,
        annotation: Expr,
        value: Option<Expr>,
    },
    Assign {
        targets: Vec<Expr>,
        value: Expr,
    },
    AugAssign {
        target: Expr,
        op: BinOpKind,
        value: Expr,
    },
    If {
        test: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
    },
    While {
        test: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
    },
    For {
        target: Expr,
        iter: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
    },
    Return(Option<Expr>),
    Expr(Expr),
    Pass,
    Break,
    Continue,
    Assert {
        test: Expr,
        msg: Option<Expr>,
    },
    Import(Vec<Alias>),
    ImportFrom {
        module: String,
        names: Vec<Alias>,
    },
}

impl StmtKind {
    pub fn kind(&self) -> AstKind {
        match self {
            StmtKind::FunctionDef(_) => AstKind::FunctionDef,
            StmtKind::ClassDef(_) => AstKind::ClassDef,
            StmtKind::AnnAssign { .. } => AstKind::AnnAssign,
            StmtKind::Assign { .. } => AstKind::Assign,
            StmtKind::AugAssign { .. } => AstKind::AugAssign,
            StmtKind::If { .. } => AstKind::If,
            StmtKind::While { .. } => AstKind::While,
            StmtKind::For { .. } => AstKind::For,
            StmtKind::Return(_) => AstKind::Return,
            StmtKind::Expr(_) => AstKind::Expr,
            StmtKind::Pass => AstKind::Pass,
            StmtKind::Break => AstKind::Break,
            StmtKind::Continue => AstKind::Continue,
            StmtKind::Assert { .. } => AstKind::Assert,
            StmtKind::Import(_) => AstKind::Import,
            StmtKind::ImportFrom { .. } => AstKind::ImportFrom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alias {
    pub name: String,
    pub asname: Option<String>,
}

impl Alias {
    /// Name bound in the importing module.
    pub fn bound_name(&self) -> &str {
        self.asname.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub args: Arguments,
    pub body: Vec<Stmt>,
    pub returns: Option<Expr>,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Arguments {
    pub args: Vec<Arg>,
    pub defaults: Vec<Expr>,
}

impl Arguments {
    /// Default value for positional parameter `index`, if any.
    pub fn default_for(&self, index: usize) -> Option<&Expr> {
        let first_default = self.args.len().checked_sub(self.defaults.len())?;
        index
            .checked_sub(first_default)
            .and_then(|i| self.defaults.get(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: String,
    pub annotation: Option<Expr>,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDef {
    pub name: String,
    pub bases: Vec<Expr>,
    pub body: Vec<Stmt>,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Call { func: Box<Expr>, args: Vec<Expr> },
    Name(String),
    Attribute { value: Box<Expr>, attr: String },
    Constant(Constant),
    BinOp { left: Box<Expr>, op: BinOpKind, right: Box<Expr> },
    BoolOp { op: BoolOpKind, values: Vec<Expr> },
    UnaryOp { op: UnaryOpKind, operand: Box<Expr> },
    Compare { left: Box<Expr>, ops: Vec<CmpOpKind>, comparators: Vec<Expr> },
    Subscript { value: Box<Expr>, index: Box<Expr> },
    List(Vec<Expr>),
}

impl ExprKind {
    pub fn kind(&self) -> AstKind {
        match self {
            ExprKind::Call { .. } => AstKind::Call,
            ExprKind::Name(_) => AstKind::Name,
            ExprKind::Attribute { .. } => AstKind::Attribute,
            ExprKind::Constant(_) => AstKind::Constant,
            ExprKind::BinOp { .. } => AstKind::BinOp,
            ExprKind::BoolOp { .. } => AstKind::BoolOp,
            ExprKind::UnaryOp { .. } => AstKind::UnaryOp,
            ExprKind::Compare { .. } => AstKind::Compare,
            ExprKind::Subscript { .. } => AstKind::Subscript,
            ExprKind::List(_) => AstKind::List,
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Location) -> Self {
        Expr { kind, loc }
    }

    pub fn name(id: &str, loc: Location) -> Self {
        Expr::new(ExprKind::Name(id.to_string()), loc)
    }

    pub fn as_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Name(n) => Some(n),
            _ => None,
        }
    }

    /// Dotted path for `a`, `a.b`, `a.b.c`.
    pub fn dotted_path(&self) -> Option<Vec<&str>> {
        match &self.kind {
            ExprKind::Name(n) => Some(vec![n.as_str()]),
            ExprKind::Attribute { value, attr } => {
                let mut p = value.dotted_path()?;
                p.push(attr.as_str());
                Some(p)
            }
            _ => None,
        }
    }

    /// Pre-order walk over this expression and its sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Call { func, args } => {
                func.walk(f);
                for a in args {
                    a.walk(f);
                }
            }
            ExprKind::Name(_) | ExprKind::Constant(_) => {}
            ExprKind::Attribute { value, .. } => value.walk(f),
            ExprKind::BinOp { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            ExprKind::BoolOp { values, .. } | ExprKind::List(values) => {
                for v in values {
                    v.walk(f);
                }
            }
            ExprKind::UnaryOp { operand, .. } => operand.walk(f),
            ExprKind::Compare {
                left, comparators, ..
            } => {
                left.walk(f);
                for c in comparators {
                    c.walk(f);
                }
            }
            ExprKind::Subscript { value, index } => {
                value.walk(f);
                index.walk(f);
            }
        }
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e.kind, ExprKind::Call { .. }) {
                found = true;
            }
        });
        found
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constant {
    None,
    Bool(bool),
    Int(BigInt),
    Float(f64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOpKind {
    Add,
    Sub,
    Mult,
    Div,
    FloorDiv,
    Mod,
    Pow,
    LShift,
    RShift,
    BitOr,
    BitXor,
    BitAnd,
}

impl BinOpKind {
    pub fn name(self) -> &'static str {
        match self {
            BinOpKind::Add => "Add",
            BinOpKind::Sub => "Sub",
            BinOpKind::Mult => "Mult",
            BinOpKind::Div => "Div",
            BinOpKind::FloorDiv => "FloorDiv",
            BinOpKind::Mod => "Mod",
            BinOpKind::Pow => "Pow",
            BinOpKind::LShift => "LShift",
            BinOpKind::RShift => "RShift",
            BinOpKind::BitOr => "BitOr",
            BinOpKind::BitXor => "BitXor",
            BinOpKind::BitAnd => "BitAnd",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOpKind::Add => "+",
            BinOpKind::Sub => "-",
            BinOpKind::Mult => "*",
            BinOpKind::Div => "/",
            BinOpKind::FloorDiv => "//",
            BinOpKind::Mod => "%",
            BinOpKind::Pow => "**",
            BinOpKind::LShift => "<<",
            BinOpKind::RShift => ">>",
            BinOpKind::BitOr => "|",
            BinOpKind::BitXor => "^",
            BinOpKind::BitAnd => "&",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "Add" => BinOpKind::Add,
            "Sub" => BinOpKind::Sub,
            "Mult" => BinOpKind::Mult,
            "Div" => BinOpKind::Div,
            "FloorDiv" => BinOpKind::FloorDiv,
            "Mod" => BinOpKind::Mod,
            "Pow" => BinOpKind::Pow,
            "LShift" => BinOpKind::LShift,
            "RShift" => BinOpKind::RShift,
            "BitOr" => BinOpKind::BitOr,
            "BitXor" => BinOpKind::BitXor,
            "BitAnd" => BinOpKind::BitAnd,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BoolOpKind {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOpKind {
    Not,
    USub,
    UAdd,
    Invert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOpKind {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
}

impl CmpOpKind {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOpKind::Eq => "==",
            CmpOpKind::NotEq => "!=",
            CmpOpKind::Lt => "<",
            CmpOpKind::LtE => "<=",
            CmpOpKind::Gt => ">",
            CmpOpKind::GtE => ">=",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CmpOpKind::Eq => "Eq",
            CmpOpKind::NotEq => "NotEq",
            CmpOpKind::Lt => "Lt",
            CmpOpKind::LtE => "LtE",
            CmpOpKind::Gt => "Gt",
            CmpOpKind::GtE => "GtE",
        }
    }
}

/// Walks statements recursively, calling `on_stmt` for every statement,
/// `on_expr` for every expression and `on_extra` with the number of
/// `arguments`/`arg` nodes owned by function definitions.
pub fn visit_stmts<'a>(
    stmts: &'a [Stmt],
    on_stmt: &mut dyn FnMut(&'a Stmt),
    on_expr: &mut dyn FnMut(&'a Expr),
    on_extra: &mut dyn FnMut(usize),
) {
    for s in stmts {
        on_stmt(s);
        let mut exprs: Vec<&'a Expr> = Vec::new();
        match &s.kind {
            StmtKind::FunctionDef(f) => {
                on_extra(1 + f.args.args.len());
                for a in &f.args.args {
                    exprs.extend(a.annotation.iter());
                }
                exprs.extend(f.args.defaults.iter());
                exprs.extend(f.returns.iter());
                for e in exprs.drain(..) {
                    e.walk(on_expr);
                }
                visit_stmts(&f.body, on_stmt, on_expr, on_extra);
            }
            StmtKind::ClassDef(c) => {
                for b in &c.bases {
                    b.walk(on_expr);
                }
                visit_stmts(&c.body, on_stmt, on_expr, on_extra);
            }
            StmtKind::AnnAssign {
                target,
                annotation,
                value,
            } => {
                target.walk(on_expr);
                annotation.walk(on_expr);
                if let Some(v) = value {
                    v.walk(on_expr);
                }
            }
            StmtKind::Assign { targets, value } => {
                for t in targets {
                    t.walk(on_expr);
                }
                value.walk(on_expr);
            }
            StmtKind::AugAssign { target, value, .. } => {
                target.walk(on_expr);
                value.walk(on_expr);
            }
            StmtKind::If { test, body, orelse } | StmtKind::While { test, body, orelse } => {
                test.walk(on_expr);
                visit_stmts(body, on_stmt, on_expr, on_extra);
                visit_stmts(orelse, on_stmt, on_expr, on_extra);
            }
            StmtKind::For {
                target,
                iter,
                body,
                orelse,
            } => {
                target.walk(on_expr);
                iter.walk(on_expr);
                visit_stmts(body, on_stmt, on_expr, on_extra);
                visit_stmts(orelse, on_stmt, on_expr, on_extra);
            }
            StmtKind::Return(v) => {
                if let Some(v) = v {
                    v.walk(on_expr);
                }
            }
            StmtKind::Expr(e) => e.walk(on_expr),
            StmtKind::Assert { test, msg } => {
                test.walk(on_expr);
                if let Some(m) = msg {
                    m.walk(on_expr);
                }
            }
            StmtKind::Pass
            | StmtKind::Break
            | StmtKind::Continue
            | StmtKind::Import(_)
            | StmtKind::ImportFrom { .. } => {}
        }
    }
}

/// Counts the `//` and `%` operator nodes (including augmented forms).
pub fn count_division_nodes(stmts: &[Stmt]) -> usize {
    let count = std::cell::Cell::new(0);
    visit_stmts(
        stmts,
        &mut |s| {
            if let StmtKind::AugAssign { op, .. } = &s.kind {
                if matches!(op, BinOpKind::FloorDiv | BinOpKind::Mod) {
                    count.set(count.get() + 1);
                }
            }
        },
        &mut |e| {
            if let ExprKind::BinOp { op, .. } = &e.kind {
                if matches!(op, BinOpKind::FloorDiv | BinOpKind::Mod) {
                    count.set(count.get() + 1);
                }
            }
        },
        &mut |_| {},
    );
    count.get()
}

use std::path::Path;

use num_bigint::BigInt;
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::*;

/// Interpreter versions whose AST shapes the loader has been tested with.
pub const TESTED_PYTHON_VERSIONS: &[(u32, u32)] = &[(3, 9), (3, 10), (3, 11), (3, 12), (3, 13)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AstError {
    #[error("unsupported construct `{kind}` at {loc}")]
    UnsupportedConstruct { kind: String, loc: Location },
    #[error("malformed AST: {0}")]
    MalformedAst(String),
    #[error("AST produced by Python {0} which is outside the tested range 3.9-3.13")]
    UnsupportedDialect(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

type Result<T> = std::result::Result<T, AstError>;

/// Parses a JSON AST document into a [`Module`].
pub fn load_ast(doc: &Value) -> Result<Module> {
    let obj = doc
        .as_object()
        .ok_or_else(|| AstError::MalformedAst("document root is not an object".into()))?;
    let ty = node_type(obj)?;
    if ty != "Module" {
        return Err(AstError::MalformedAst(format!(
            "document root has _type `{ty}`, expected `Module`"
        )));
    }
    let python_version = match obj.get("python_version") {
        Some(Value::String(v)) => {
            check_dialect(v)?;
            Some(v.clone())
        }
        Some(_) => {
            return Err(AstError::MalformedAst(
                "python_version is not a string".into(),
            ))
        }
        None => None,
    };
    let body = stmts(obj, "body")?;
    Ok(Module {
        body,
        python_version,
    })
}

pub fn load_ast_str(text: &str) -> Result<Module> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| AstError::MalformedAst(format!("invalid JSON: {e}")))?;
    load_ast(&doc)
}

pub(crate) fn load_ast_file(path: &Path) -> Result<Module> {
    let text = std::fs::read_to_string(path).map_err(|e| AstError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    load_ast_str(&text)
}

fn check_dialect(version: &str) -> Result<()> {
    let mut parts = version.split('.').map(|p| p.parse::<u32>());
    match (parts.next(), parts.next()) {
        (Some(Ok(major)), Some(Ok(minor))) if TESTED_PYTHON_VERSIONS.contains(&(major, minor)) => {
            Ok(())
        }
        _ => Err(AstError::UnsupportedDialect(version.to_string())),
    }
}

fn node_type(obj: &Map<String, Value>) -> Result<&str> {
    obj.get("_type")
        .and_then(Value::as_str)
        .ok_or_else(|| AstError::MalformedAst("node without `_type`".into()))
}

fn location(obj: &Map<String, Value>) -> Result<Location> {
    let get = |k: &str| obj.get(k).and_then(Value::as_u64).map(|v| v as u32);
    let line = get("lineno").ok_or_else(|| {
        AstError::MalformedAst(format!(
            "`{}` node without lineno",
            node_type(obj).unwrap_or("?")
        ))
    })?;
    if line == 0 {
        return Err(AstError::MalformedAst("lineno must be >= 1".into()));
    }
    Ok(Location {
        line,
        column: get("col_offset").unwrap_or(0),
        end_line: get("end_lineno"),
        end_column: get("end_col_offset"),
    })
}

fn loose_location(obj: &Map<String, Value>) -> Location {
    location(obj).unwrap_or_default()
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| {
        AstError::MalformedAst(format!(
            "`{}` node missing field `{key}`",
            node_type(obj).unwrap_or("?")
        ))
    })
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| AstError::MalformedAst(format!("{what} is not a node object")))
}

fn list<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a [Value]> {
    match obj.get(key) {
        Some(Value::Array(a)) => Ok(a),
        Some(Value::Null) | None => Ok(&[]),
        Some(_) => Err(AstError::MalformedAst(format!("field `{key}` is not a list"))),
    }
}

fn string(obj: &Map<String, Value>, key: &str) -> Result<String> {
    field(obj, key)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| AstError::MalformedAst(format!("field `{key}` is not a string")))
}

fn opt_string(obj: &Map<String, Value>, key: &str) -> Option<String> {
    obj.get(key).and_then(Value::as_str).map(str::to_string)
}

fn unsupported(obj: &Map<String, Value>, kind: &str) -> AstError {
    AstError::UnsupportedConstruct {
        kind: kind.to_string(),
        loc: loose_location(obj),
    }
}

fn stmts(obj: &Map<String, Value>, key: &str) -> Result<Vec<Stmt>> {
    list(obj, key)?.iter().map(stmt).collect()
}

fn require_empty(obj: &Map<String, Value>, key: &str, what: &str) -> Result<()> {
    if list(obj, key)?.is_empty() {
        Ok(())
    } else {
        Err(unsupported(obj, what))
    }
}

fn stmt(v: &Value) -> Result<Stmt> {
    let obj = object(v, "statement")?;
    let ty = node_type(obj)?;
    let loc = location(obj)?;
    let kind = match ty {
        "FunctionDef" => {
            require_empty(obj, "decorator_list", "decorator")?;
            StmtKind::FunctionDef(FunctionDef {
                name: string(obj, "name")?,
                args: arguments(object(field(obj, "args")?, "arguments")?)?,
                body: stmts(obj, "body")?,
                returns: opt_expr(obj, "returns")?,
                loc,
            })
        }
        "ClassDef" => {
            require_empty(obj, "decorator_list", "decorator")?;
            require_empty(obj, "keywords", "class keyword")?;
            StmtKind::ClassDef(ClassDef {
                name: string(obj, "name")?,
                bases: exprs(obj, "bases")?,
                body: stmts(obj, "body")?,
                loc,
            })
        }
        "AnnAssign" => StmtKind::AnnAssign {
            target: expr(field(obj, "target")?)?,
            annotation: expr(field(obj, "annotation")?)?,
            value: opt_expr(obj, "value")?,
        },
        "Assign" => StmtKind::Assign {
            targets: exprs(obj, "targets")?,
            value: expr(field(obj, "value")?)?,
        },
        "AugAssign" => StmtKind::AugAssign {
            target: expr(field(obj, "target")?)?,
            op: bin_op(field(obj, "op")?, obj)?,
            value: expr(field(obj, "value")?)?,
        },
        "If" => StmtKind::If {
            test: expr(field(obj, "test")?)?,
            body: stmts(obj, "body")?,
            orelse: stmts(obj, "orelse")?,
        },
        "While" => StmtKind::While {
            test: expr(field(obj, "test")?)?,
            body: stmts(obj, "body")?,
            orelse: stmts(obj, "orelse")?,
        },
        "For" => StmtKind::For {
            target: expr(field(obj, "target")?)?,
            iter: expr(field(obj, "iter")?)?,
            body: stmts(obj, "body")?,
            orelse: stmts(obj, "orelse")?,
        },
        "Return" => StmtKind::Return(opt_expr(obj, "value")?),
        "Expr" => StmtKind::Expr(expr(field(obj, "value")?)?),
        "Pass" => StmtKind::Pass,
        "Break" => StmtKind::Break,
        "Continue" => StmtKind::Continue,
        "Assert" => StmtKind::Assert {
            test: expr(field(obj, "test")?)?,
            msg: opt_expr(obj, "msg")?,
        },
        "Import" => StmtKind::Import(aliases(obj)?),
        "ImportFrom" => {
            let level = obj.get("level").and_then(Value::as_u64).unwrap_or(0);
            if level != 0 {
                return Err(unsupported(obj, "relative import"));
            }
            StmtKind::ImportFrom {
                module: string(obj, "module")?,
                names: aliases(obj)?,
            }
        }
        other => return Err(unsupported(obj, other)),
    };
    Ok(Stmt { kind, loc })
}

fn aliases(obj: &Map<String, Value>) -> Result<Vec<Alias>> {
    list(obj, "names")?
        .iter()
        .map(|a| {
            let a = object(a, "alias")?;
            let name = string(a, "name")?;
            if name == "*" {
                return Err(unsupported(obj, "star import"));
            }
            Ok(Alias {
                name,
                asname: opt_string(a, "asname"),
            })
        })
        .collect()
}

fn arguments(obj: &Map<String, Value>) -> Result<Arguments> {
    for (key, what) in [
        ("posonlyargs", "positional-only parameter"),
        ("kwonlyargs", "keyword-only parameter"),
    ] {
        require_empty(obj, key, what)?;
    }
    for (key, what) in [("vararg", "*args"), ("kwarg", "**kwargs")] {
        if !matches!(obj.get(key), None | Some(Value::Null)) {
            return Err(unsupported(obj, what));
        }
    }
    let args = list(obj, "args")?
        .iter()
        .map(|a| {
            let a = object(a, "arg")?;
            Ok(Arg {
                name: string(a, "arg")?,
                annotation: opt_expr(a, "annotation")?,
                loc: location(a)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Arguments {
        args,
        defaults: exprs(obj, "defaults")?,
    })
}

fn exprs(obj: &Map<String, Value>, key: &str) -> Result<Vec<Expr>> {
    list(obj, key)?.iter().map(expr).collect()
}

fn opt_expr(obj: &Map<String, Value>, key: &str) -> Result<Option<Expr>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => expr(v).map(Some),
    }
}

fn bin_op(v: &Value, parent: &Map<String, Value>) -> Result<BinOpKind> {
    let name = node_type(object(v, "operator")?)?;
    BinOpKind::from_name(name).ok_or_else(|| unsupported(parent, name))
}

fn expr(v: &Value) -> Result<Expr> {
    let obj = object(v, "expression")?;
    let ty = node_type(obj)?;
    let loc = location(obj)?;
    let kind = match ty {
        "Call" => {
            require_empty(obj, "keywords", "keyword argument")?;
            ExprKind::Call {
                func: Box::new(expr(field(obj, "func")?)?),
                args: exprs(obj, "args")?,
            }
        }
        "Name" => ExprKind::Name(string(obj, "id")?),
        "Attribute" => ExprKind::Attribute {
            value: Box::new(expr(field(obj, "value")?)?),
            attr: string(obj, "attr")?,
        },
        "Constant" => ExprKind::Constant(constant(field(obj, "value")?, obj)?),
        "BinOp" => ExprKind::BinOp {
            left: Box::new(expr(field(obj, "left")?)?),
            op: bin_op(field(obj, "op")?, obj)?,
            right: Box::new(expr(field(obj, "right")?)?),
        },
        "BoolOp" => {
            let op = match node_type(object(field(obj, "op")?, "operator")?)? {
                "And" => BoolOpKind::And,
                "Or" => BoolOpKind::Or,
                other => return Err(unsupported(obj, other)),
            };
            ExprKind::BoolOp {
                op,
                values: exprs(obj, "values")?,
            }
        }
        "UnaryOp" => {
            let op = match node_type(object(field(obj, "op")?, "operator")?)? {
                "Not" => UnaryOpKind::Not,
                "USub" => UnaryOpKind::USub,
                "UAdd" => UnaryOpKind::UAdd,
                "Invert" => UnaryOpKind::Invert,
                other => return Err(unsupported(obj, other)),
            };
            ExprKind::UnaryOp {
                op,
                operand: Box::new(expr(field(obj, "operand")?)?),
            }
        }
        "Compare" => {
            let ops = list(obj, "ops")?
                .iter()
                .map(|o| {
                    Ok(match node_type(object(o, "operator")?)? {
                        "Eq" => CmpOpKind::Eq,
                        "NotEq" => CmpOpKind::NotEq,
                        "Lt" => CmpOpKind::Lt,
                        "LtE" => CmpOpKind::LtE,
                        "Gt" => CmpOpKind::Gt,
                        "GtE" => CmpOpKind::GtE,
                        other => return Err(unsupported(obj, other)),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let comparators = exprs(obj, "comparators")?;
            if ops.len() != comparators.len() || ops.is_empty() {
                return Err(AstError::MalformedAst(
                    "Compare with mismatched ops/comparators".into(),
                ));
            }
            ExprKind::Compare {
                left: Box::new(expr(field(obj, "left")?)?),
                ops,
                comparators,
            }
        }
        "Subscript" => {
            let slice = field(obj, "slice")?;
            let slice_obj = object(slice, "slice")?;
            match node_type(slice_obj)? {
                "Slice" => return Err(unsupported(slice_obj, "Slice")),
                // Pre-3.9 wrapper; accepted when an older dumper slips through.
                "Index" => ExprKind::Subscript {
                    value: Box::new(expr(field(obj, "value")?)?),
                    index: Box::new(expr(field(slice_obj, "value")?)?),
                },
                _ => ExprKind::Subscript {
                    value: Box::new(expr(field(obj, "value")?)?),
                    index: Box::new(expr(slice)?),
                },
            }
        }
        "List" => ExprKind::List(exprs(obj, "elts")?),
        other => return Err(unsupported(obj, other)),
    };
    Ok(Expr { kind, loc })
}

fn constant(v: &Value, parent: &Map<String, Value>) -> Result<Constant> {
    Ok(match v {
        Value::Null => Constant::None,
        Value::Bool(b) => Constant::Bool(*b),
        Value::String(s) => Constant::Str(s.clone()),
        Value::Number(n) => {
            let text = n.to_string();
            if text.contains(['.', 'e', 'E']) {
                Constant::Float(
                    text.parse::<f64>()
                        .map_err(|_| AstError::MalformedAst(format!("bad float `{text}`")))?,
                )
            } else {
                Constant::Int(
                    text.parse::<BigInt>()
                        .map_err(|_| AstError::MalformedAst(format!("bad integer `{text}`")))?,
                )
            }
        }
        _ => return Err(unsupported(parent, "Constant")),
    })
}

// ---------------------------------------------------------------------------
// Serialization back into the dumper's JSON shape.

fn put_loc(m: &mut Map<String, Value>, loc: &Location) {
    m.insert("lineno".into(), json!(loc.line));
    m.insert("col_offset".into(), json!(loc.column));
    if let Some(l) = loc.end_line {
        m.insert("end_lineno".into(), json!(l));
    }
    if let Some(c) = loc.end_column {
        m.insert("end_col_offset".into(), json!(c));
    }
}

fn node(ty: &str, loc: Option<&Location>, fields: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    m.insert("_type".into(), json!(ty));
    for (k, v) in fields {
        m.insert(k.to_string(), v);
    }
    if let Some(loc) = loc {
        put_loc(&mut m, loc);
    }
    Value::Object(m)
}

fn tag(ty: &str) -> Value {
    json!({ "_type": ty })
}

/// Serializes a module into the dumper's JSON format (sorted keys).
pub fn to_json(module: &Module) -> Value {
    let mut fields = vec![
        ("body", stmts_json(&module.body)),
        ("type_ignores", json!([])),
    ];
    if let Some(v) = &module.python_version {
        fields.push(("python_version", json!(v)));
    }
    node("Module", None, fields)
}

fn stmts_json(stmts: &[Stmt]) -> Value {
    Value::Array(stmts.iter().map(stmt_json).collect())
}

fn opt_json(e: &Option<Expr>) -> Value {
    e.as_ref().map(|e| expr_json(e, false)).unwrap_or(Value::Null)
}

fn alias_json(names: &[Alias]) -> Value {
    Value::Array(
        names
            .iter()
            .map(|a| json!({"_type": "alias", "name": a.name, "asname": a.asname}))
            .collect(),
    )
}

fn stmt_json(s: &Stmt) -> Value {
    let loc = Some(&s.loc);
    match &s.kind {
        StmtKind::FunctionDef(f) => node(
            "FunctionDef",
            loc,
            vec![
                ("name", json!(f.name)),
                ("args", arguments_json(&f.args)),
                ("body", stmts_json(&f.body)),
                ("decorator_list", json!([])),
                ("returns", opt_json(&f.returns)),
                ("type_comment", Value::Null),
            ],
        ),
        StmtKind::ClassDef(c) => node(
            "ClassDef",
            loc,
            vec![
                ("name", json!(c.name)),
                (
                    "bases",
                    Value::Array(c.bases.iter().map(|b| expr_json(b, false)).collect()),
                ),
                ("keywords", json!([])),
                ("body", stmts_json(&c.body)),
                ("decorator_list", json!([])),
            ],
        ),
        StmtKind::AnnAssign {
            target,
            annotation,
            value,
        } => node(
            "AnnAssign",
            loc,
            vec![
                ("target", expr_json(target, true)),
                ("annotation", expr_json(annotation, false)),
                ("value", opt_json(value)),
                ("simple", json!(u8::from(target.as_name().is_some()))),
            ],
        ),
        StmtKind::Assign { targets, value } => node(
            "Assign",
            loc,
            vec![
                (
                    "targets",
                    Value::Array(targets.iter().map(|t| expr_json(t, true)).collect()),
                ),
                ("value", expr_json(value, false)),
                ("type_comment", Value::Null),
            ],
        ),
        StmtKind::AugAssign { target, op, value } => node(
            "AugAssign",
            loc,
            vec![
                ("target", expr_json(target, true)),
                ("op", tag(op.name())),
                ("value", expr_json(value, false)),
            ],
        ),
        StmtKind::If { test, body, orelse } | StmtKind::While { test, body, orelse } => node(
            if matches!(s.kind, StmtKind::If { .. }) {
                "If"
            } else {
                "While"
            },
            loc,
            vec![
                ("test", expr_json(test, false)),
                ("body", stmts_json(body)),
                ("orelse", stmts_json(orelse)),
            ],
        ),
        StmtKind::For {
            target,
            iter,
            body,
            orelse,
        } => node(
            "For",
            loc,
            vec![
                ("target", expr_json(target, true)),
                ("iter", expr_json(iter, false)),
                ("body", stmts_json(body)),
                ("orelse", stmts_json(orelse)),
                ("type_comment", Value::Null),
            ],
        ),
        StmtKind::Return(v) => node("Return", loc, vec![("value", opt_json(v))]),
        StmtKind::Expr(e) => node("Expr", loc, vec![("value", expr_json(e, false))]),
        StmtKind::Pass => node("Pass", loc, vec![]),
        StmtKind::Break => node("Break", loc, vec![]),
        StmtKind::Continue => node("Continue", loc, vec![]),
        StmtKind::Assert { test, msg } => node(
            "Assert",
            loc,
            vec![("test", expr_json(test, false)), ("msg", opt_json(msg))],
        ),
        StmtKind::Import(names) => node("Import", loc, vec![("names", alias_json(names))]),
        StmtKind::ImportFrom { module, names } => node(
            "ImportFrom",
            loc,
            vec![
                ("module", json!(module)),
                ("names", alias_json(names)),
                ("level", json!(0)),
            ],
        ),
    }
}

fn arguments_json(a: &Arguments) -> Value {
    node(
        "arguments",
        None,
        vec![
            ("posonlyargs", json!([])),
            (
                "args",
                Value::Array(
                    a.args
                        .iter()
                        .map(|arg| {
                            node(
                                "arg",
                                Some(&arg.loc),
                                vec![
                                    ("arg", json!(arg.name)),
                                    ("annotation", opt_json(&arg.annotation)),
                                    ("type_comment", Value::Null),
                                ],
                            )
                        })
                        .collect(),
                ),
            ),
            ("vararg", Value::Null),
            ("kwonlyargs", json!([])),
            ("kw_defaults", json!([])),
            ("kwarg", Value::Null),
            (
                "defaults",
                Value::Array(a.defaults.iter().map(|d| expr_json(d, false)).collect()),
            ),
        ],
    )
}

fn ctx(store: bool) -> Value {
    tag(if store { "Store" } else { "Load" })
}

fn constant_json(c: &Constant) -> Value {
    match c {
        Constant::None => Value::Null,
        Constant::Bool(b) => json!(b),
        Constant::Int(i) => {
            // arbitrary_precision keeps wide literals exact.
            serde_json::from_str::<Value>(&i.to_string()).unwrap_or(Value::Null)
        }
        Constant::Float(f) => json!(f),
        Constant::Str(s) => json!(s),
    }
}

fn expr_json(e: &Expr, store: bool) -> Value {
    let loc = Some(&e.loc);
    match &e.kind {
        ExprKind::Call { func, args } => node(
            "Call",
            loc,
            vec![
                ("func", expr_json(func, false)),
                (
                    "args",
                    Value::Array(args.iter().map(|a| expr_json(a, false)).collect()),
                ),
                ("keywords", json!([])),
            ],
        ),
        ExprKind::Name(id) => node("Name", loc, vec![("id", json!(id)), ("ctx", ctx(store))]),
        ExprKind::Attribute { value, attr } => node(
            "Attribute",
            loc,
            vec![
                ("value", expr_json(value, false)),
                ("attr", json!(attr)),
                ("ctx", ctx(store)),
            ],
        ),
        ExprKind::Constant(c) => node(
            "Constant",
            loc,
            vec![("value", constant_json(c)), ("kind", Value::Null)],
        ),
        ExprKind::BinOp { left, op, right } => node(
            "BinOp",
            loc,
            vec![
                ("left", expr_json(left, false)),
                ("op", tag(op.name())),
                ("right", expr_json(right, false)),
            ],
        ),
        ExprKind::BoolOp { op, values } => node(
            "BoolOp",
            loc,
            vec![
                (
                    "op",
                    tag(match op {
                        BoolOpKind::And => "And",
                        BoolOpKind::Or => "Or",
                    }),
                ),
                (
                    "values",
                    Value::Array(values.iter().map(|v| expr_json(v, false)).collect()),
                ),
            ],
        ),
        ExprKind::UnaryOp { op, operand } => node(
            "UnaryOp",
            loc,
            vec![
                (
                    "op",
                    tag(match op {
                        UnaryOpKind::Not => "Not",
                        UnaryOpKind::USub => "USub",
                        UnaryOpKind::UAdd => "UAdd",
                        UnaryOpKind::Invert => "Invert",
                    }),
                ),
                ("operand", expr_json(operand, false)),
            ],
        ),
        ExprKind::Compare {
            left,
            ops,
            comparators,
        } => node(
            "Compare",
            loc,
            vec![
                ("left", expr_json(left, false)),
                (
                    "ops",
                    Value::Array(ops.iter().map(|o| tag(o.name())).collect()),
                ),
                (
                    "comparators",
                    Value::Array(comparators.iter().map(|c| expr_json(c, false)).collect()),
                ),
            ],
        ),
        ExprKind::Subscript { value, index } => node(
            "Subscript",
            loc,
            vec![
                ("value", expr_json(value, false)),
                ("slice", expr_json(index, false)),
                ("ctx", ctx(store)),
            ],
        ),
        ExprKind::List(elts) => node(
            "List",
            loc,
            vec![
                (
                    "elts",
                    Value::Array(elts.iter().map(|x| expr_json(x, false)).collect()),
                ),
                ("ctx", ctx(store)),
            ],
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LISTING_FRAGMENT: &str = r#"{
      "_type": "Module",
      "body": [{
        "_type": "AnnAssign",
        "annotation": {"_type": "Name", "id": "int", "lineno": 7, "col_offset": 2},
        "target": {"_type": "Name", "id": "n", "lineno": 7, "col_offset": 0},
        "value": {
          "_type": "Call", "args": [],
          "func": {"_type": "Name", "id": "nondet_int", "lineno": 7, "col_offset": 8},
          "lineno": 7, "col_offset": 8
        },
        "simple": 1, "lineno": 7, "col_offset": 0
      }]
    }"#;

    #[test]
    fn annotated_assignment_fragment() {
        let m = load_ast_str(LISTING_FRAGMENT).unwrap();
        assert_eq!(m.body.len(), 1);
        let StmtKind::AnnAssign {
            target,
            annotation,
            value,
        } = &m.body[0].kind
        else {
            panic!("expected AnnAssign");
        };
        assert_eq!(target.as_name(), Some("n"));
        assert_eq!(annotation.as_name(), Some("int"));
        let Some(Expr {
            kind: ExprKind::Call { func, args },
            ..
        }) = value
        else {
            panic!("expected call");
        };
        assert_eq!(func.as_name(), Some("nondet_int"));
        assert!(args.is_empty());
        assert_eq!(m.body[0].loc.line, 7);
    }

    #[test]
    fn empty_module() {
        let m = load_ast_str(r#"{"_type":"Module","body":[]}"#).unwrap();
        assert!(m.body.is_empty());
        assert_eq!(m.node_count(), 1);
    }

    #[test]
    fn lambda_is_rejected_with_location() {
        let doc = r#"{"_type":"Module","body":[{"_type":"Expr","lineno":3,"col_offset":0,
            "value":{"_type":"Lambda","lineno":3,"col_offset":4,"args":{},"body":{}}}]}"#;
        match load_ast_str(doc) {
            Err(AstError::UnsupportedConstruct { kind, loc }) => {
                assert_eq!(kind, "Lambda");
                assert_eq!(loc.line, 3);
                assert_eq!(loc.column, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn try_statement_is_rejected() {
        let doc = r#"{"_type":"Module","body":[{"_type":"Try","lineno":2,"col_offset":0}]}"#;
        assert!(matches!(
            load_ast_str(doc),
            Err(AstError::UnsupportedConstruct { kind, .. }) if kind == "Try"
        ));
    }

    #[test]
    fn missing_field_is_malformed() {
        let doc = r#"{"_type":"Module","body":[{"_type":"Assert","lineno":1,"col_offset":0}]}"#;
        assert!(matches!(load_ast_str(doc), Err(AstError::MalformedAst(_))));
        let doc = r#"{"_type":"Module","body":[{"lineno":1}]}"#;
        assert!(matches!(load_ast_str(doc), Err(AstError::MalformedAst(_))));
    }

    #[test]
    fn root_must_be_module() {
        assert!(matches!(
            load_ast_str(r#"{"_type":"Expression","body":{}}"#),
            Err(AstError::MalformedAst(_))
        ));
    }

    #[test]
    fn dialect_gate() {
        let ok = r#"{"_type":"Module","body":[],"python_version":"3.10.12"}"#;
        assert!(load_ast_str(ok).is_ok());
        let old = r#"{"_type":"Module","body":[],"python_version":"2.7.18"}"#;
        assert!(matches!(
            load_ast_str(old),
            Err(AstError::UnsupportedDialect(_))
        ));
    }

    #[test]
    fn wide_integer_literal_is_exact() {
        let doc = r#"{"_type":"Module","body":[{"_type":"Expr","lineno":1,"col_offset":0,
            "value":{"_type":"Constant","lineno":1,"col_offset":0,
            "value":115792089237316195423570985008687907853269984665640564039457584007913129639935}}]}"#;
        let m = load_ast_str(doc).unwrap();
        let StmtKind::Expr(Expr {
            kind: ExprKind::Constant(Constant::Int(i)),
            ..
        }) = &m.body[0].kind
        else {
            panic!()
        };
        assert_eq!(
            i.to_string(),
            "115792089237316195423570985008687907853269984665640564039457584007913129639935"
        );
    }

    #[test]
    fn json_round_trip_preserves_structure() {
        let m = load_ast_str(LISTING_FRAGMENT).unwrap();
        let again = load_ast(&to_json(&m)).unwrap();
        assert_eq!(m, again);
    }
}

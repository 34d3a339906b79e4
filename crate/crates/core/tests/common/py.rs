//! Terse builders for JSON AST documents in the dumper's format. Line numbers
//! are filled in by [`module`]: each statement gets the next line.

use serde_json::{json, Map, Value};

pub fn name(id: &str) -> Value {
    json!({"_type": "Name", "id": id, "ctx": {"_type": "Load"}})
}

fn store(id: &str) -> Value {
    json!({"_type": "Name", "id": id, "ctx": {"_type": "Store"}})
}

pub fn int(v: i64) -> Value {
    if v < 0 {
        json!({"_type": "UnaryOp", "op": {"_type": "USub"}, "operand": int(-v)})
    } else {
        json!({"_type": "Constant", "value": v, "kind": null})
    }
}

pub fn boolean(b: bool) -> Value {
    json!({"_type": "Constant", "value": b, "kind": null})
}

pub fn float(f: f64) -> Value {
    json!({"_type": "Constant", "value": f, "kind": null})
}

/// `op` is the host AST operator name: `Add`, `FloorDiv`, `BitXor`, ...
pub fn bin(l: Value, op: &str, r: Value) -> Value {
    json!({"_type": "BinOp", "left": l, "op": {"_type": op}, "right": r})
}

/// `op` is `Eq`, `NotEq`, `Lt`, `LtE`, `Gt` or `GtE`.
pub fn cmp(l: Value, op: &str, r: Value) -> Value {
    json!({"_type": "Compare", "left": l, "ops": [{"_type": op}], "comparators": [r]})
}

pub fn and(vs: Vec<Value>) -> Value {
    json!({"_type": "BoolOp", "op": {"_type": "And"}, "values": vs})
}

pub fn or(vs: Vec<Value>) -> Value {
    json!({"_type": "BoolOp", "op": {"_type": "Or"}, "values": vs})
}

pub fn not(v: Value) -> Value {
    json!({"_type": "UnaryOp", "op": {"_type": "Not"}, "operand": v})
}

pub fn neg(v: Value) -> Value {
    json!({"_type": "UnaryOp", "op": {"_type": "USub"}, "operand": v})
}

pub fn call(f: &str, args: Vec<Value>) -> Value {
    json!({"_type": "Call", "func": name(f), "args": args, "keywords": []})
}

pub fn method_call(obj: &str, m: &str, args: Vec<Value>) -> Value {
    json!({"_type": "Call", "func": attr(obj, m), "args": args, "keywords": []})
}

pub fn attr(obj: &str, a: &str) -> Value {
    json!({"_type": "Attribute", "value": name(obj), "attr": a, "ctx": {"_type": "Load"}})
}

pub fn ann(target: &str, ty: &str, value: Value) -> Value {
    json!({"_type": "AnnAssign", "target": store(target), "annotation": name(ty), "value": value, "simple": 1})
}

pub fn assign(target: &str, value: Value) -> Value {
    json!({"_type": "Assign", "targets": [store(target)], "value": value, "type_comment": null})
}

pub fn assert_(test: Value) -> Value {
    json!({"_type": "Assert", "test": test, "msg": null})
}

pub fn assume(test: Value) -> Value {
    expr(call("__ESBMC_assume", vec![test]))
}

pub fn expr(v: Value) -> Value {
    json!({"_type": "Expr", "value": v})
}

pub fn if_(test: Value, body: Vec<Value>, orelse: Vec<Value>) -> Value {
    json!({"_type": "If", "test": test, "body": body, "orelse": orelse})
}

pub fn while_(test: Value, body: Vec<Value>) -> Value {
    json!({"_type": "While", "test": test, "body": body, "orelse": []})
}

pub fn ret(v: Value) -> Value {
    json!({"_type": "Return", "value": v})
}

pub fn pass() -> Value {
    json!({"_type": "Pass"})
}

/// `def name(params) -> ret: body`; params are `(name, type)` pairs.
pub fn def(fname: &str, params: &[(&str, &str)], ret_ty: &str, body: Vec<Value>) -> Value {
    let args: Vec<Value> = params
        .iter()
        .map(|(p, t)| {
            let mut a = json!({"_type": "arg", "arg": p, "type_comment": null});
            if !t.is_empty() {
                a["annotation"] = name(t);
            } else {
                a["annotation"] = Value::Null;
            }
            a
        })
        .collect();
    json!({
        "_type": "FunctionDef",
        "name": fname,
        "args": {"_type": "arguments", "posonlyargs": [], "args": args, "vararg": null,
                 "kwonlyargs": [], "kw_defaults": [], "kwarg": null, "defaults": []},
        "body": body,
        "decorator_list": [],
        "returns": if ret_ty.is_empty() { Value::Null } else { name(ret_ty) },
        "type_comment": null
    })
}

pub fn class(cname: &str, bases: &[&str], body: Vec<Value>) -> Value {
    let body = if body.is_empty() { vec![pass()] } else { body };
    json!({
        "_type": "ClassDef",
        "name": cname,
        "bases": bases.iter().map(|b| name(b)).collect::<Vec<_>>(),
        "keywords": [],
        "body": body,
        "decorator_list": []
    })
}

const STMTS: &[&str] = &[
    "FunctionDef", "ClassDef", "Return", "Assign", "AugAssign", "AnnAssign", "For", "While", "If",
    "Assert", "Import", "ImportFrom", "Expr", "Pass", "Break", "Continue",
];

fn number(v: &mut Value, line: &mut u64, current: u64) {
    match v {
        Value::Object(m) => {
            let is_stmt = m.get("_type").and_then(Value::as_str).is_some_and(|t| STMTS.contains(&t));
            let here = if is_stmt {
                *line += 1;
                *line
            } else {
                current
            };
            if m.contains_key("_type") && !m.contains_key("lineno") {
                set_loc(m, here);
            }
            // Children in source order: everything except nested bodies first.
            let keys: Vec<String> = m.keys().cloned().collect();
            for k in keys.iter().filter(|k| !matches!(k.as_str(), "body" | "orelse")) {
                number(m.get_mut(k).unwrap(), line, here);
            }
            for k in ["body", "orelse"] {
                if let Some(c) = m.get_mut(k) {
                    number(c, line, here);
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                number(x, line, current);
            }
        }
        _ => {}
    }
}

fn set_loc(m: &mut Map<String, Value>, line: u64) {
    m.insert("lineno".into(), json!(line));
    m.insert("col_offset".into(), json!(0));
}

pub fn module(body: Vec<Value>) -> Value {
    let mut body = Value::Array(body);
    let mut line = 0;
    number(&mut body, &mut line, 1);
    json!({"_type": "Module", "body": body, "type_ignores": []})
}

use std::fmt::Write;

use super::*;

/// Indented tree of node kinds and locations, one line per typed node.
pub fn render_module_tree(module: &Module) -> String {
    let mut out = String::from("Module\n");
    for s in &module.body {
        stmt_tree(s, 1, &mut out);
    }
    out
}

fn line(out: &mut String, depth: usize, text: &str, loc: Option<&Location>) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(text);
    if let Some(loc) = loc {
        let _ = write!(out, " @{}:{}", loc.line, loc.column);
    }
    out.push('\n');
}

fn stmt_tree(s: &Stmt, depth: usize, out: &mut String) {
    let loc = Some(&s.loc);
    match &s.kind {
        StmtKind::FunctionDef(f) => {
            line(out, depth, &format!("FunctionDef {}", f.name), loc);
            line(out, depth + 1, "arguments", None);
            for a in &f.args.args {
                line(out, depth + 2, &format!("arg {}", a.name), Some(&a.loc));
                if let Some(ann) = &a.annotation {
                    expr_tree(ann, depth + 3, out);
                }
            }
            for d in &f.args.defaults {
                expr_tree(d, depth + 2, out);
            }
            if let Some(r) = &f.returns {
                expr_tree(r, depth + 1, out);
            }
            for b in &f.body {
                stmt_tree(b, depth + 1, out);
            }
        }
        StmtKind::ClassDef(c) => {
            line(out, depth, &format!("ClassDef {}", c.name), loc);
            for b in &c.bases {
                expr_tree(b, depth + 1, out);
            }
            for b in &c.body {
                stmt_tree(b, depth + 1, out);
            }
        }
        StmtKind::AnnAssign {
            target,
            annotation,
            value,
        } => {
            line(out, depth, "AnnAssign", loc);
            expr_tree(target, depth + 1, out);
            expr_tree(annotation, depth + 1, out);
            if let Some(v) = value {
                expr_tree(v, depth + 1, out);
            }
        }
        StmtKind::Assign { targets, value } => {
            line(out, depth, "Assign", loc);
            for t in targets {
                expr_tree(t, depth + 1, out);
            }
            expr_tree(value, depth + 1, out);
        }
        StmtKind::AugAssign { target, op, value } => {
            line(out, depth, &format!("AugAssign {}", op.name()), loc);
            expr_tree(target, depth + 1, out);
            expr_tree(value, depth + 1, out);
        }
        StmtKind::If { test, body, orelse } | StmtKind::While { test, body, orelse } => {
            line(out, depth, s.kind.kind().name(), loc);
            expr_tree(test, depth + 1, out);
            for b in body.iter().chain(orelse) {
                stmt_tree(b, depth + 1, out);
            }
        }
        StmtKind::For {
            target,
            iter,
            body,
            orelse,
        } => {
            line(out, depth, "For", loc);
            expr_tree(target, depth + 1, out);
            expr_tree(iter, depth + 1, out);
            for b in body.iter().chain(orelse) {
                stmt_tree(b, depth + 1, out);
            }
        }
        StmtKind::Return(v) => {
            line(out, depth, "Return", loc);
            if let Some(v) = v {
                expr_tree(v, depth + 1, out);
            }
        }
        StmtKind::Expr(e) => {
            line(out, depth, "Expr", loc);
            expr_tree(e, depth + 1, out);
        }
        StmtKind::Assert { test, msg } => {
            line(out, depth, "Assert", loc);
            expr_tree(test, depth + 1, out);
            if let Some(m) = msg {
                expr_tree(m, depth + 1, out);
            }
        }
        StmtKind::Import(names) => {
            let names: Vec<_> = names.iter().map(|a| a.name.as_str()).collect();
            line(out, depth, &format!("Import {}", names.join(", ")), loc);
        }
        StmtKind::ImportFrom { module, names } => {
            let names: Vec<_> = names.iter().map(|a| a.name.as_str()).collect();
            line(
                out,
                depth,
                &format!("ImportFrom {module}: {}", names.join(", ")),
                loc,
            );
        }
        StmtKind::Pass | StmtKind::Break | StmtKind::Continue => {
            line(out, depth, s.kind.kind().name(), loc)
        }
    }
}

fn expr_tree(e: &Expr, depth: usize, out: &mut String) {
    let loc = Some(&e.loc);
    match &e.kind {
        ExprKind::Call { func, args } => {
            line(out, depth, "Call", loc);
            expr_tree(func, depth + 1, out);
            for a in args {
                expr_tree(a, depth + 1, out);
            }
        }
        ExprKind::Name(id) => line(out, depth, &format!("Name {id}"), loc),
        ExprKind::Attribute { value, attr } => {
            line(out, depth, &format!("Attribute .{attr}"), loc);
            expr_tree(value, depth + 1, out);
        }
        ExprKind::Constant(c) => line(out, depth, &format!("Constant {}", constant_text(c)), loc),
        ExprKind::BinOp { left, op, right } => {
            line(out, depth, &format!("BinOp {}", op.name()), loc);
            expr_tree(left, depth + 1, out);
            expr_tree(right, depth + 1, out);
        }
        ExprKind::BoolOp { op, values } => {
            line(out, depth, &format!("BoolOp {op:?}"), loc);
            for v in values {
                expr_tree(v, depth + 1, out);
            }
        }
        ExprKind::UnaryOp { op, operand } => {
            line(out, depth, &format!("UnaryOp {op:?}"), loc);
            expr_tree(operand, depth + 1, out);
        }
        ExprKind::Compare {
            left,
            ops,
            comparators,
        } => {
            let ops: Vec<_> = ops.iter().map(|o| o.name()).collect();
            line(out, depth, &format!("Compare {}", ops.join(" ")), loc);
            expr_tree(left, depth + 1, out);
            for c in comparators {
                expr_tree(c, depth + 1, out);
            }
        }
        ExprKind::Subscript { value, index } => {
            line(out, depth, "Subscript", loc);
            expr_tree(value, depth + 1, out);
            expr_tree(index, depth + 1, out);
        }
        ExprKind::List(elts) => {
            line(out, depth, "List", loc);
            for x in elts {
                expr_tree(x, depth + 1, out);
            }
        }
    }
}

fn constant_text(c: &Constant) -> String {
    match c {
        Constant::None => "None".into(),
        Constant::Bool(true) => "True".into(),
        Constant::Bool(false) => "False".into(),
        Constant::Int(i) => i.to_string(),
        Constant::Float(f) => format_float(*f),
        Constant::Str(s) => format!("{s:?}"),
    }
}

/// Python-style `repr` for floats (`1.0`, `0.5`, `1e+20`).
pub fn format_float(f: f64) -> String {
    if f.is_nan() {
        return "nan".into();
    }
    if f.is_infinite() {
        return if f > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{f:?}");
    if s.contains('e') {
        // Rust prints `1e20`; Python prints `1e+20`.
        let (mant, exp) = s.split_once('e').unwrap();
        let (sign, digits) = match exp.strip_prefix('-') {
            Some(d) => ('-', d),
            None => ('+', exp),
        };
        format!("{mant}e{sign}{digits:0>2}")
    } else {
        s
    }
}

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::BoolOp {
            op: BoolOpKind::Or, ..
        } => 1,
        ExprKind::BoolOp {
            op: BoolOpKind::And,
            ..
        } => 2,
        ExprKind::UnaryOp {
            op: UnaryOpKind::Not,
            ..
        } => 3,
        ExprKind::Compare { .. } => 4,
        ExprKind::BinOp { op, .. } => match op {
            BinOpKind::BitOr => 5,
            BinOpKind::BitXor => 6,
            BinOpKind::BitAnd => 7,
            BinOpKind::LShift | BinOpKind::RShift => 8,
            BinOpKind::Add | BinOpKind::Sub => 9,
            BinOpKind::Mult | BinOpKind::Div | BinOpKind::FloorDiv | BinOpKind::Mod => 10,
            BinOpKind::Pow => 12,
        },
        ExprKind::UnaryOp { .. } => 11,
        _ => 13,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    let text = unparse_expr(e);
    if precedence(e) < min {
        format!("({text})")
    } else {
        text
    }
}

/// Renders an expression back to Python source text.
pub fn unparse_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Call { func, args } => {
            let args: Vec<_> = args.iter().map(unparse_expr).collect();
            format!("{}({})", wrap(func, 13), args.join(", "))
        }
        ExprKind::Name(id) => id.clone(),
        ExprKind::Attribute { value, attr } => format!("{}.{attr}", wrap(value, 13)),
        ExprKind::Constant(c) => match c {
            Constant::Str(s) => format!("'{}'", s.replace('\'', "\\'")),
            other => constant_text(other),
        },
        ExprKind::BinOp { left, op, right } => {
            let p = precedence(e);
            // `**` is right-associative; everything else is left-associative.
            let (lp, rp) = if *op == BinOpKind::Pow {
                (p + 1, p)
            } else {
                (p, p + 1)
            };
            format!("{} {} {}", wrap(left, lp), op.symbol(), wrap(right, rp))
        }
        ExprKind::BoolOp { op, values } => {
            let p = precedence(e);
            let word = match op {
                BoolOpKind::And => " and ",
                BoolOpKind::Or => " or ",
            };
            values
                .iter()
                .map(|v| wrap(v, p + 1))
                .collect::<Vec<_>>()
                .join(word)
        }
        ExprKind::UnaryOp { op, operand } => {
            let p = precedence(e);
            match op {
                UnaryOpKind::Not => format!("not {}", wrap(operand, p)),
                UnaryOpKind::USub => format!("-{}", wrap(operand, p)),
                UnaryOpKind::UAdd => format!("+{}", wrap(operand, p)),
                UnaryOpKind::Invert => format!("~{}", wrap(operand, p)),
            }
        }
        ExprKind::Compare {
            left,
            ops,
            comparators,
        } => {
            let mut s = wrap(left, 5);
            for (op, c) in ops.iter().zip(comparators) {
                let _ = write!(s, " {} {}", op.symbol(), wrap(c, 5));
            }
            s
        }
        ExprKind::Subscript { value, index } => {
            format!("{}[{}]", wrap(value, 13), unparse_expr(index))
        }
        ExprKind::List(elts) => {
            let elts: Vec<_> = elts.iter().map(unparse_expr).collect();
            format!("[{}]", elts.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(i: i64) -> Expr {
        Expr::new(ExprKind::Constant(Constant::Int(i.into())), Location::new(1, 0))
    }

    fn bin(l: Expr, op: BinOpKind, r: Expr) -> Expr {
        Expr::new(
            ExprKind::BinOp {
                left: Box::new(l),
                op,
                right: Box::new(r),
            },
            Location::new(1, 0),
        )
    }

    #[test]
    fn empty_module_renders_single_line() {
        assert_eq!(render_module_tree(&Module::empty()), "Module\n");
    }

    #[test]
    fn unparse_respects_precedence() {
        let x = Expr::name("x", Location::new(1, 0));
        let e = bin(bin(x.clone(), BinOpKind::Add, c(1)), BinOpKind::FloorDiv, c(2));
        assert_eq!(unparse_expr(&e), "(x + 1) // 2");
        let e = bin(x.clone(), BinOpKind::Sub, bin(c(1), BinOpKind::Sub, c(2)));
        assert_eq!(unparse_expr(&e), "x - (1 - 2)");
        let cmp = Expr::new(
            ExprKind::Compare {
                left: Box::new(Expr::name("result", Location::new(1, 0))),
                ops: vec![CmpOpKind::NotEq],
                comparators: vec![c(120)],
            },
            Location::new(1, 0),
        );
        assert_eq!(unparse_expr(&cmp), "result != 120");
    }

    #[test]
    fn float_repr_matches_python() {
        assert_eq!(format_float(1.0), "1.0");
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(1e20), "1e+20");
        assert_eq!(format_float(1e-7), "1e-07");
        assert_eq!(format_float(1e100), "1e+100");
    }
}

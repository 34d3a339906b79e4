mod common;

use std::path::Path;

use common::py::*;
use common::{fixture, root, suite, unit_of};
use pybmc_core::ast::{self, visit_stmts, AstError, AstKind, ExprKind, Module, StmtKind};
use pybmc_core::types::{self, TypeOptions};
use pybmc_core::unit::{self, LoadError, ProgramUnit};
use serde_json::Value;

const OPTS: TypeOptions = TypeOptions { int_width: 32 };

fn load(rel: &str) -> ProgramUnit {
    ProgramUnit::load(&fixture(rel)).unwrap()
}

fn resolved(rel: &str) -> Result<ProgramUnit, LoadError> {
    let u = load(rel);
    let dir = u.search_dir();
    unit::resolve_imports(u, &dir)
}

/// Counts JSON objects whose `_type` is a node kind the loader keeps.
fn json_node_count(v: &Value) -> usize {
    let kinds: Vec<&str> = [
        AstKind::Module, AstKind::FunctionDef, AstKind::ClassDef, AstKind::AnnAssign, AstKind::Assign,
        AstKind::AugAssign, AstKind::If, AstKind::While, AstKind::For, AstKind::Return, AstKind::Expr,
        AstKind::Pass, AstKind::Break, AstKind::Continue, AstKind::Assert, AstKind::Import,
        AstKind::ImportFrom, AstKind::Call, AstKind::Name, AstKind::Attribute, AstKind::Constant,
        AstKind::BinOp, AstKind::BoolOp, AstKind::UnaryOp, AstKind::Compare, AstKind::Subscript,
        AstKind::List, AstKind::Arguments, AstKind::Arg,
    ]
    .iter()
    .map(|k| k.name())
    .collect();
    match v {
        Value::Object(m) => {
            let own = m.get("_type").and_then(Value::as_str).is_some_and(|t| kinds.contains(&t)) as usize;
            own + m.values().map(json_node_count).sum::<usize>()
        }
        Value::Array(a) => a.iter().map(json_node_count).sum(),
        _ => 0,
    }
}

fn all_json_files() -> Vec<std::path::PathBuf> {
    fn walk(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else if p.extension().is_some_and(|x| x == "json") {
                out.push(p);
            }
        }
    }
    let mut out = Vec::new();
    walk(&root().join("suite"), &mut out);
    walk(&root().join("fixtures"), &mut out);
    out.sort();
    out
}

#[test]
fn every_checked_in_ast_loads() {
    let files = all_json_files();
    assert!(files.len() > 60);
    for p in files {
        let text = std::fs::read_to_string(&p).unwrap();
        match ast::load_ast_str(&text) {
            Ok(_) => {}
            Err(AstError::UnsupportedConstruct { .. }) if p.to_string_lossy().contains("unsupported") => {}
            Err(e) => panic!("{}: {e}", p.display()),
        }
    }
}

#[test]
fn node_count_matches_the_document() {
    for p in all_json_files() {
        if p.to_string_lossy().contains("unsupported") {
            continue;
        }
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let m = ast::load_ast(&v).unwrap();
        assert_eq!(m.node_count(), json_node_count(&v), "{}", p.display());
    }
}

#[test]
fn lambda_is_rejected_with_its_location() {
    match ProgramUnit::load(&fixture("unsupported/main.py")) {
        Err(LoadError::Ast(AstError::UnsupportedConstruct { kind, loc })) => {
            assert_eq!(kind, "Lambda");
            assert_eq!(loc.line, 1);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn empty_module_has_one_node() {
    let u = load("empty/main.py");
    assert!(u.main.body.is_empty());
    assert_eq!(u.main.node_count(), 1);
    assert_eq!(ast::render_module_tree(&u.main).lines().count(), 1);
    assert_eq!(ast::load_ast(&module(vec![])).unwrap(), Module::empty());
}

#[test]
fn factorial_tree_shape() {
    let u = load("factorial/main.py");
    let defs = u.main.body.iter().filter(|s| matches!(s.kind, StmtKind::FunctionDef(_))).count();
    let asserts = u.main.body.iter().filter(|s| matches!(s.kind, StmtKind::Assert { .. })).count();
    assert_eq!((defs, asserts), (1, 1));
    let tree = ast::render_module_tree(&u.main);
    assert!(tree.starts_with("Module"));
    assert!(tree.contains("FunctionDef"));
}

#[test]
fn json_round_trip() {
    for p in all_json_files() {
        let Ok(m) = ast::load_ast_str(&std::fs::read_to_string(&p).unwrap()) else { continue };
        let again = ast::load_ast(&ast::to_json(&m)).unwrap();
        assert_eq!(again, m, "{}", p.display());
    }
}

#[test]
fn malformed_documents() {
    assert!(matches!(ast::load_ast_str("{"), Err(AstError::MalformedAst(_))));
    assert!(matches!(
        ast::load_ast_str(r#"{"_type":"Module","body":[{"_type":"Pass"}]}"#),
        Err(AstError::MalformedAst(_))
    ));
    assert!(matches!(
        ast::load_ast_str(r#"{"_type":"Expression","body":{"_type":"Name","id":"x"}}"#),
        Err(AstError::MalformedAst(_)) | Err(AstError::UnsupportedConstruct { .. })
    ));
}

#[test]
fn import_pair_and_chain() {
    let pair = resolved("imports/pair/main.py").unwrap();
    let names: Vec<&str> = pair.modules().map(|(n, _)| n).collect();
    assert_eq!(names, ["helper", "main"]);
    let chain = resolved("imports/chain/main.py").unwrap();
    let names: Vec<&str> = chain.modules().map(|(n, _)| n).collect();
    assert_eq!(names, ["c", "b", "a", "main"]);
}

#[test]
fn import_errors() {
    assert!(matches!(resolved("imports/self_cycle/main.py"), Err(LoadError::ImportCycle(_))));
    match resolved("imports/missing/main.py") {
        Err(LoadError::ModuleNotFound { name, loc }) => {
            assert_eq!(name, "nowhere");
            assert_eq!(loc.line, 1);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn isolate_functions_and_methods() {
    let u = unit::isolate_function(load("factorial/main.py"), "factorial").unwrap();
    assert_eq!(u.isolated_function.as_deref(), Some("factorial"));
    assert_eq!(
        unit::isolate_function(load("factorial/main.py"), "missing").unwrap_err(),
        LoadError::FunctionNotFound("missing".into())
    );
    let u = unit::isolate_function(load("inheritance/main.py"), "C.c_only").unwrap();
    let a = types::infer_and_annotate(&u, OPTS).unwrap();
    let env = types::type_environment(&a, OPTS).unwrap();
    let st = pybmc_core::symtab::build_symbol_table(&a, &env).unwrap();
    let c = st.classes.values().find(|c| c.qualified.ends_with("C")).expect("class C kept");
    assert_eq!(c.bases.len(), 1);
    assert!(st.classes.values().any(|k| k.qualified.ends_with("@A")));
}

fn annotated_value_of(m: &Module, target: &str) -> Option<String> {
    m.body.iter().find_map(|s| match &s.kind {
        StmtKind::AnnAssign { target: t, annotation, .. } if t.as_name() == Some(target) => {
            Some(ast::unparse_expr(annotation))
        }
        _ => None,
    })
}

#[test]
fn plain_assignment_gets_an_annotation() {
    let u = unit_of(&module(vec![assign("x", int(5)), assert_(cmp(name("x"), "Eq", int(5)))]));
    let a = types::infer_and_annotate(&u, OPTS).unwrap();
    assert_eq!(annotated_value_of(&a.main, "x").as_deref(), Some("int"));
}

#[test]
fn inferred_fixture_is_fully_annotated() {
    let a = types::infer_and_annotate(&load("types/ok_inferred.py"), OPTS).unwrap();
    assert_eq!(annotated_value_of(&a.main, "v").as_deref(), Some("int"));
    assert_eq!(annotated_value_of(&a.main, "w").as_deref(), Some("int"));
    let f = a.main.functions().next().unwrap();
    assert_eq!(f.returns.as_ref().map(ast::unparse_expr).as_deref(), Some("int"));
}

fn assert_complete(m: &Module, label: &str) {
    visit_stmts(
        &m.body,
        &mut |s| match &s.kind {
            StmtKind::Assign { targets, .. } => {
                assert!(
                    !targets.iter().any(|t| matches!(t.kind, ExprKind::Name(_))),
                    "{label}: plain assignment left at line {}",
                    s.loc.line
                )
            }
            StmtKind::FunctionDef(f) => {
                for a in &f.args.args {
                    assert!(a.annotation.is_some() || a.name == "self", "{label}: parameter {}", a.name);
                }
                assert!(f.returns.is_some(), "{label}: return type of {}", f.name);
            }
            _ => {}
        },
        &mut |_| {},
        &mut |_| {},
    );
}

#[test]
fn annotation_is_complete_and_idempotent() {
    for t in suite() {
        let u = ProgramUnit::load(&t.cfg.input).unwrap();
        let dir = u.search_dir();
        let u = unit::resolve_imports(u, &dir).unwrap();
        let once = types::infer_and_annotate(&u, OPTS).unwrap_or_else(|e| panic!("{}: {e}", t.label));
        for (name, m) in once.modules() {
            assert_complete(m, &format!("{}:{name}", t.label));
        }
        let twice = types::infer_and_annotate(&once, OPTS).unwrap();
        assert_eq!(once, twice, "{}", t.label);
    }
}

#[test]
fn type_errors_are_labelled_by_file_name() {
    let mut seen = 0;
    for e in std::fs::read_dir(fixture("types")).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_none_or(|x| x != "py") {
            continue;
        }
        seen += 1;
        let expect_error = p.file_stem().unwrap().to_string_lossy().ends_with("-type-error");
        let u = ProgramUnit::load(&p).unwrap();
        let diags = types::check_types(&u, OPTS);
        assert_eq!(!diags.is_empty(), expect_error, "{}: {diags:?}", p.display());
        for d in diags {
            assert!(d.loc.line >= 1, "{}: diagnostic without a line", p.display());
        }
    }
    assert_eq!(seen, 7);
    for t in suite() {
        let u = ProgramUnit::load(&t.cfg.input).unwrap();
        let dir = u.search_dir();
        let u = unit::resolve_imports(u, &dir).unwrap();
        assert!(types::check_types(&u, OPTS).is_empty(), "{}", t.label);
    }
}

#[test]
fn width_option_changes_bare_int() {
    let u = unit_of(&module(vec![ann("x", "int", int(1))]));
    let a = types::infer_and_annotate(&u, TypeOptions { int_width: 64 }).unwrap();
    let env = types::type_environment(&a, TypeOptions { int_width: 64 }).unwrap();
    let st = pybmc_core::symtab::build_symbol_table(&a, &env).unwrap();
    assert_eq!(st.get("main@x").unwrap().ty.bit_width(), Some(64));
}

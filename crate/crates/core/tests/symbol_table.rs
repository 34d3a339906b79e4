mod common;

use common::py::*;
use common::{fixture, unit_of};
use proptest::prelude::*;
use pybmc_core::symtab::{self, Entry, SymbolKind, SymbolTable, SymtabError};
use pybmc_core::types::{self, TypeOptions, VerifierType};
use pybmc_core::unit::{self, ProgramUnit};
use serde_json::Value;

fn table_of(u: ProgramUnit) -> SymbolTable {
    let opts = TypeOptions::default();
    let dir = u.search_dir();
    let u = unit::resolve_imports(u, &dir).unwrap();
    let a = types::infer_and_annotate(&u, opts).unwrap();
    let env = types::type_environment(&a, opts).unwrap();
    symtab::build_symbol_table(&a, &env).unwrap()
}

fn table(rel: &str) -> SymbolTable {
    table_of(ProgramUnit::load(&fixture(rel)).unwrap())
}

fn method(name: &str, ret: i64) -> Value {
    def(name, &[("self", "")], "int", vec![ret_(ret)])
}

fn ret_(v: i64) -> Value {
    ret(int(v))
}

#[test]
fn factorial_symbols() {
    let st = table("factorial/main.py");
    let kind = |q: &str| st.get(q).unwrap_or_else(|| panic!("{q} missing:\n{}", st.render())).kind;
    assert_eq!(kind("main@factorial"), SymbolKind::Function);
    assert_eq!(kind("main@factorial@n"), SymbolKind::Parameter);
    assert_eq!(kind("main@n"), SymbolKind::Variable);
    assert_eq!(kind("main@result"), SymbolKind::Variable);
    assert_eq!(st.get("main@n").unwrap().ty, VerifierType::Int(types::IntType::signed(32)));
    assert!(matches!(st.entry, Entry::TopLevel { .. }));
    assert!(st.functions.contains_key("main@factorial"));
}

#[test]
fn empty_module_table() {
    let st = table("empty/main.py");
    assert!(st.classes.is_empty());
    assert!(st.symbols.values().all(|s| s.kind == SymbolKind::Function));
}

#[test]
fn single_inheritance_resolves_to_base() {
    let st = table_of(unit_of(&module(vec![
        class("A", &[], vec![method("m", 1)]),
        class("B", &["A"], vec![]),
    ])));
    assert_eq!(symtab::resolve_member(&st, "main@B", "m").unwrap().qualified_name, "main@A@m");
    assert!(matches!(
        symtab::resolve_member(&st, "main@B", "nope"),
        Err(SymtabError::MemberNotFound { .. })
    ));
}

#[test]
fn leftmost_base_wins() {
    let st = table_of(unit_of(&module(vec![
        class("A", &[], vec![method("m", 1)]),
        class("B", &[], vec![method("m", 2)]),
        class("C", &["A", "B"], vec![]),
    ])));
    assert_eq!(symtab::resolve_member(&st, "main@C", "m").unwrap().qualified_name, "main@A@m");
}

#[test]
fn diamond_uses_depth_first_order() {
    let st = table("inheritance/main.py");
    // D(B, C): B overrides m, only C defines c_only, only A defines only_a.
    assert_eq!(symtab::resolve_member(&st, "main@D", "m").unwrap().qualified_name, "main@B@m");
    assert_eq!(symtab::resolve_member(&st, "main@D", "c_only").unwrap().qualified_name, "main@C@c_only");
    assert_eq!(symtab::resolve_member(&st, "main@D", "only_a").unwrap().qualified_name, "main@A@only_a");
    assert_eq!(st.classes["main@D"].bases, ["main@B", "main@C"]);
}

#[test]
fn harness_entry_for_isolated_function() {
    let u = unit::isolate_function(ProgramUnit::load(&fixture("factorial/main.py")).unwrap(), "factorial").unwrap();
    let st = table_of(u);
    match &st.entry {
        Entry::Harness { target, params, receiver, .. } => {
            assert_eq!(target, "main@factorial");
            assert_eq!(params.len(), 1);
            assert_eq!(params[0].0, "p0");
            assert!(st.get("main@__harness__@p0").is_some());
            assert!(receiver.is_none());
        }
        other => panic!("unexpected entry {other:?}"),
    }
}

#[test]
fn render_lists_every_symbol() {
    let st = table("inheritance/main.py");
    let text = st.render();
    for q in st.symbols.keys() {
        assert!(text.contains(q.as_str()), "{q}");
    }
    assert!(text.contains("class main@D bases [main@B, main@C]"));
}

/// Class `i` lists bases drawn from classes `< i`; `defines[i]` says whether
/// it declares `m`.
#[derive(Debug, Clone)]
struct Hierarchy {
    bases: Vec<Vec<usize>>,
    defines: Vec<bool>,
}

fn hierarchy() -> impl Strategy<Value = Hierarchy> {
    (1usize..=6).prop_flat_map(|n| {
        let bases: Vec<_> = (0..n)
            .map(|i| {
                if i == 0 {
                    Just(Vec::new()).boxed()
                } else {
                    proptest::sample::subsequence((0..i).collect::<Vec<_>>(), 0..=i.min(3))
                        .prop_shuffle()
                        .boxed()
                }
            })
            .collect();
        (bases, proptest::collection::vec(any::<bool>(), n))
            .prop_map(|(bases, defines)| Hierarchy { bases, defines })
    })
}

/// Pre-order, left-to-right walk from `c`.
fn dfs_oracle(h: &Hierarchy, c: usize) -> Option<usize> {
    if h.defines[c] {
        return Some(c);
    }
    h.bases[c].iter().find_map(|b| dfs_oracle(h, *b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn member_lookup_matches_depth_first_search(h in hierarchy()) {
        let body: Vec<Value> = (0..h.bases.len())
            .map(|i| {
                let bases: Vec<String> = h.bases[i].iter().map(|b| format!("K{b}")).collect();
                let bases: Vec<&str> = bases.iter().map(String::as_str).collect();
                let members = if h.defines[i] { vec![method("m", i as i64)] } else { vec![] };
                class(&format!("K{i}"), &bases, members)
            })
            .collect();
        let st = table_of(unit_of(&module(body)));
        for c in 0..h.bases.len() {
            let got = symtab::resolve_member(&st, &format!("main@K{c}"), "m").ok().map(|s| s.qualified_name.clone());
            let want = dfs_oracle(&h, c).map(|k| format!("main@K{k}@m"));
            prop_assert_eq!(got, want, "class K{}", c);
        }
    }
}

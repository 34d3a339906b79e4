//! Programs as sets of modules: loading, import resolution, and function
//! isolation.

use std::path::{Path, PathBuf};
use std::process::Command;

use indexmap::IndexMap;
use thiserror::Error;

use crate::ast::{self, AstError, Location, Module, StmtKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error(transparent)]
    Ast(#[from] AstError),
    #[error("module `{name}` not found (imported at {loc})")]
    ModuleNotFound { name: String, loc: Location },
    #[error("import cycle: {}", .0.join(" -> "))]
    ImportCycle(Vec<String>),
    #[error("function `{0}` not found")]
    FunctionNotFound(String),
    #[error("cannot dump AST of {path}: {message}")]
    DumperFailed { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramUnit {
    /// Module name of the main file (its file stem).
    pub main_name: String,
    pub main: Module,
    /// Imported modules, dependencies before dependents.
    pub imported: IndexMap<String, Module>,
    pub source_path: PathBuf,
    /// `f` or `C.m` when only one function is verified.
    pub isolated_function: Option<String>,
}

impl ProgramUnit {
    pub fn new(main_name: impl Into<String>, main: Module, source_path: impl Into<PathBuf>) -> Self {
        ProgramUnit {
            main_name: main_name.into(),
            main,
            imported: IndexMap::new(),
            source_path: source_path.into(),
            isolated_function: None,
        }
    }

    /// Loads a `.json` AST document or a `.py` file. For `.py` input a sibling
    /// `.json` is preferred; otherwise the source is passed through `ast-dump`.
    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("main")
            .to_string();
        let module = load_module_file(path)?;
        Ok(ProgramUnit::new(stem, module, path))
    }

    /// All modules, imported ones first, main last.
    pub fn modules(&self) -> impl Iterator<Item = (&str, &Module)> {
        self.imported
            .iter()
            .map(|(n, m)| (n.as_str(), m))
            .chain(std::iter::once((self.main_name.as_str(), &self.main)))
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        if name == self.main_name {
            Some(&self.main)
        } else {
            self.imported.get(name)
        }
    }

    pub fn module_mut(&mut self, name: &str) -> Option<&mut Module> {
        if name == self.main_name {
            Some(&mut self.main)
        } else {
            self.imported.get_mut(name)
        }
    }

    /// File name shown in traces for a module.
    pub fn file_name(&self, module: &str) -> String {
        format!("{module}.py")
    }

    pub fn search_dir(&self) -> PathBuf {
        self.source_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    }
}

fn load_module_file(path: &Path) -> Result<Module, LoadError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("py") => {
            let json = path.with_extension("json");
            if json.is_file() {
                Ok(ast::json::load_ast_file(&json)?)
            } else if path.is_file() {
                dump_source(path)
            } else {
                Err(AstError::Io {
                    path: path.display().to_string(),
                    message: "no such file".into(),
                }
                .into())
            }
        }
        _ => Ok(ast::json::load_ast_file(path)?),
    }
}

/// Runs the external dumper named by `PYBMC_AST_DUMP` (default `ast-dump`).
fn dump_source(path: &Path) -> Result<Module, LoadError> {
    let failed = |message: String| LoadError::DumperFailed {
        path: path.display().to_string(),
        message,
    };
    let cmd = std::env::var("PYBMC_AST_DUMP").unwrap_or_else(|_| "ast-dump".into());
    let words = shell_words::split(&cmd).map_err(|e| failed(e.to_string()))?;
    let (prog, args) = words
        .split_first()
        .ok_or_else(|| failed("empty dumper command".into()))?;
    let out = Command::new(prog)
        .args(args)
        .arg(path)
        .output()
        .map_err(|e| failed(format!("{prog}: {e}")))?;
    if !out.status.success() {
        return Err(failed(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    Ok(ast::load_ast_str(&text)?)
}

fn imports_of(m: &Module) -> Vec<(String, Location)> {
    let mut out = Vec::new();
    for s in &m.body {
        match &s.kind {
            StmtKind::Import(names) => {
                out.extend(names.iter().map(|a| (a.name.clone(), s.loc)));
            }
            StmtKind::ImportFrom { module, .. } => out.push((module.clone(), s.loc)),
            _ => {}
        }
    }
    out
}

/// Loads every module reachable through imports from `search_dir`.
pub fn resolve_imports(unit: ProgramUnit, search_dir: &Path) -> Result<ProgramUnit, LoadError> {
    let mut unit = unit;
    let mut loaded = IndexMap::new();
    let mut stack = vec![unit.main_name.clone()];
    visit(&unit.main, search_dir, &mut stack, &mut loaded, &unit.main_name)?;
    unit.imported = loaded;
    Ok(unit)
}

fn visit(
    module: &Module,
    dir: &Path,
    stack: &mut Vec<String>,
    loaded: &mut IndexMap<String, Module>,
    main: &str,
) -> Result<(), LoadError> {
    for (name, loc) in imports_of(module) {
        if let Some(pos) = stack.iter().position(|s| *s == name) {
            let mut cycle = stack[pos..].to_vec();
            cycle.push(name);
            return Err(LoadError::ImportCycle(cycle));
        }
        if loaded.contains_key(&name) {
            continue;
        }
        if name == main {
            return Err(LoadError::ImportCycle(vec![main.to_string(), name]));
        }
        let json = dir.join(format!("{name}.json"));
        let py = dir.join(format!("{name}.py"));
        let m = if json.is_file() {
            ast::json::load_ast_file(&json)?
        } else if py.is_file() {
            dump_source(&py)?
        } else {
            return Err(LoadError::ModuleNotFound { name, loc });
        };
        stack.push(name.clone());
        visit(&m, dir, stack, loaded, main)?;
        stack.pop();
        loaded.insert(name, m);
    }
    Ok(())
}

/// Marks `name` (a function `f` or method `C.m` of the main module) as the
/// only function to verify.
pub fn isolate_function(unit: ProgramUnit, name: &str) -> Result<ProgramUnit, LoadError> {
    let found = match name.split_once('.') {
        None => unit.main.functions().any(|f| f.name == name),
        Some((class, method)) => unit.main.classes().any(|c| {
            c.name == class
                && c.body.iter().any(|s| {
                    matches!(&s.kind, StmtKind::FunctionDef(f) if f.name == method)
                })
        }),
    };
    if !found {
        return Err(LoadError::FunctionNotFound(name.to_string()));
    }
    Ok(ProgramUnit {
        isolated_function: Some(name.to_string()),
        ..unit
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn module(src: &str) -> Module {
        ast::load_ast_str(src).unwrap()
    }

    const IMPORT_HELPER: &str = r#"{"_type":"Module","body":[
        {"_type":"Import","names":[{"_type":"alias","name":"helper","asname":null}],
         "lineno":1,"col_offset":0}]}"#;

    #[test]
    fn missing_module_reports_import_location() {
        let dir = tempfile::tempdir().unwrap();
        let unit = ProgramUnit::new("main", module(IMPORT_HELPER), dir.path().join("main.json"));
        match resolve_imports(unit, dir.path()) {
            Err(LoadError::ModuleNotFound { name, loc }) => {
                assert_eq!(name, "helper");
                assert_eq!(loc.line, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn self_import_is_a_cycle() {
        let src = IMPORT_HELPER.replace("helper", "main");
        let dir = tempfile::tempdir().unwrap();
        let unit = ProgramUnit::new("main", module(&src), dir.path().join("main.json"));
        assert!(matches!(
            resolve_imports(unit, dir.path()),
            Err(LoadError::ImportCycle(_))
        ));
    }

    #[test]
    fn isolate_unknown_function() {
        let unit = ProgramUnit::new("main", Module::empty(), "main.json");
        assert_eq!(
            isolate_function(unit, "factorial").unwrap_err(),
            LoadError::FunctionNotFound("factorial".into())
        );
    }
}

#![allow(dead_code)]

pub mod gen;
pub mod py;

use std::path::{Path, PathBuf};

use pybmc_core::goto::GotoProgram;
use pybmc_core::pipeline::{self, FrontEnd, RunConfig};
use pybmc_core::symex::Ssa;
use pybmc_core::unit::ProgramUnit;
use pybmc_core::vc::Backend;

pub const Z3: &str = "z3 -in";

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn fixture(rel: &str) -> PathBuf {
    root().join("fixtures").join(rel)
}

pub struct SuiteTest {
    pub label: String,
    pub dir: PathBuf,
    pub expect_failed: bool,
    pub cfg: RunConfig,
}

/// Applies the flags of an `expect` file to a configuration.
pub fn apply_flags(cfg: &mut RunConfig, flags: &[&str]) {
    let mut it = flags.iter();
    while let Some(f) = it.next() {
        match *f {
            "--unwind" => cfg.unwind = it.next().unwrap().parse().unwrap(),
            "--function" => cfg.function = Some(it.next().unwrap().to_string()),
            "--no-unwinding-assertions" => cfg.unwinding_assertions = false,
            "--overflow-check" => cfg.overflow_check = true,
            "--int-width" => cfg.int_width = it.next().unwrap().parse().unwrap(),
            other => panic!("flag {other} not understood by the test harness"),
        }
    }
}

pub fn suite() -> Vec<SuiteTest> {
    let mut out = Vec::new();
    let mut cats: Vec<_> = std::fs::read_dir(root().join("suite")).unwrap().map(|e| e.unwrap().path()).collect();
    cats.sort();
    for cat in cats {
        let mut tests: Vec<_> = std::fs::read_dir(&cat).unwrap().map(|e| e.unwrap().path()).collect();
        tests.sort();
        for dir in tests {
            let expect = std::fs::read_to_string(dir.join("expect")).unwrap();
            let mut lines = expect.lines();
            let expect_failed = match lines.next().unwrap().trim() {
                "FAILED" => true,
                "SUCCESSFUL" => false,
                other => panic!("bad expectation {other}"),
            };
            let flags: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
            let mut cfg = RunConfig::new(dir.join("main.py"));
            apply_flags(&mut cfg, &flags);
            out.push(SuiteTest {
                label: format!(
                    "{}/{}",
                    cat.file_name().unwrap().to_string_lossy(),
                    dir.file_name().unwrap().to_string_lossy()
                ),
                dir,
                expect_failed,
                cfg,
            });
        }
    }
    out
}

pub struct Compiled {
    pub fe: FrontEnd,
    pub goto: GotoProgram,
    pub unwound: GotoProgram,
    pub ssa: Ssa,
}

pub fn compile(cfg: &RunConfig) -> Compiled {
    let u = ProgramUnit::load(&cfg.input).unwrap_or_else(|e| panic!("{}: {e}", cfg.input.display()));
    compile_unit(u, cfg)
}

pub fn compile_unit(u: ProgramUnit, cfg: &RunConfig) -> Compiled {
    let fe = pipeline::analyze_unit(u, cfg).unwrap_or_else(|e| panic!("{}: {e}", cfg.input.display()));
    let goto = pipeline::build_goto(&fe.table, cfg).unwrap();
    let unwound = pipeline::unwind(&goto, cfg);
    let ssa = pipeline::to_ssa(&unwound, cfg).unwrap();
    Compiled {
        fe,
        goto,
        unwound,
        ssa,
    }
}

/// Configuration for an in-memory module.
pub fn mem_config(unwind: u32) -> RunConfig {
    RunConfig {
        unwind,
        backend: Backend::Smt(Z3.into()),
        ..RunConfig::new("main.py")
    }
}

pub fn unit_of(module_json: &serde_json::Value) -> ProgramUnit {
    let m = pybmc_core::ast::load_ast(module_json).unwrap();
    ProgramUnit::new("main", m, "main.py")
}

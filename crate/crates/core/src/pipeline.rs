//! The verification pipeline from a source file to a [`VerificationResult`].

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ast;
use crate::goto::{self, CheckOptions, GotoProgram, LowerError, UnwindOptions};
use crate::report::{self, ErrorKind, Outcome, StageTiming, Statistics, VerificationResult};
use crate::symex::{self, Ssa, SymexError};
use crate::symtab::{self, SymbolTable, SymtabError};
use crate::types::{self, Diagnostic, TypeError, TypeOptions};
use crate::unit::{self, LoadError, ProgramUnit};
use crate::vc::{self, Backend, VcError, VcOptions, VcOutcome};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Dumps {
    pub parse_tree: bool,
    pub annotated: bool,
    pub symbol_table: bool,
    pub goto: bool,
    pub ssa: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub unwind: u32,
    pub function: Option<String>,
    pub int_width: u32,
    pub overflow_check: bool,
    pub unwinding_assertions: bool,
    pub backend: Backend,
    pub timeout: Option<Duration>,
    pub multi_property: bool,
    pub simplify: bool,
    pub smt_lib_out: Option<PathBuf>,
    pub dumps: Dumps,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            unwind: 1,
            function: None,
            int_width: 32,
            overflow_check: false,
            unwinding_assertions: true,
            backend: VcOptions::default().backend,
            timeout: None,
            multi_property: false,
            simplify: true,
            smt_lib_out: None,
            dumps: Dumps::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("type errors:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    TypeCheck(Vec<Diagnostic>),
    #[error(transparent)]
    Symtab(#[from] SymtabError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Symex(#[from] SymexError),
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error("unwind bound must be at least 1")]
    BadUnwind,
    #[error("unsupported integer width {0}")]
    BadWidth(u32),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Report(#[from] report::ReportError),
}

impl PipelineError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            PipelineError::Vc(_) => ErrorKind::Solver,
            _ => ErrorKind::FrontEnd,
        }
    }
}

/// Parsed and typed program ready for conversion.
pub struct FrontEnd {
    pub unit: ProgramUnit,
    pub annotated: ProgramUnit,
    pub table: SymbolTable,
}

/// Loads, resolves, isolates, annotates and type-checks `cfg.input`.
pub fn front_end(cfg: &RunConfig) -> Result<FrontEnd, PipelineError> {
    analyze_unit(ProgramUnit::load(&cfg.input)?, cfg)
}

/// [`front_end`] on an already loaded unit.
pub fn analyze_unit(u: ProgramUnit, cfg: &RunConfig) -> Result<FrontEnd, PipelineError> {
    if !matches!(cfg.int_width, 32 | 64) {
        return Err(PipelineError::BadWidth(cfg.int_width));
    }
    let dir = u.search_dir();
    let mut u = unit::resolve_imports(u, &dir)?;
    if let Some(f) = &cfg.function {
        u = unit::isolate_function(u, f)?;
    }
    let opts = TypeOptions {
        int_width: cfg.int_width,
    };
    let annotated = types::infer_and_annotate(&u, opts)?;
    let diags = types::check_types(&annotated, opts);
    if !diags.is_empty() {
        return Err(PipelineError::TypeCheck(diags));
    }
    let env = types::type_environment(&annotated, opts)?;
    let table = symtab::build_symbol_table(&annotated, &env)?;
    Ok(FrontEnd {
        unit: u,
        annotated,
        table,
    })
}

/// Lowers and instruments; the result still has loops and calls.
pub fn build_goto(table: &SymbolTable, cfg: &RunConfig) -> Result<GotoProgram, PipelineError> {
    let mut g = goto::lower_to_goto(table)?;
    goto::instrument_properties(
        &mut g,
        &CheckOptions {
            overflow: cfg.overflow_check,
        },
    );
    Ok(g)
}

pub fn unwind(g: &GotoProgram, cfg: &RunConfig) -> GotoProgram {
    goto::unwind(
        g,
        &UnwindOptions {
            k: cfg.unwind,
            unwinding_assertions: cfg.unwinding_assertions,
        },
    )
}

pub fn to_ssa(unwound: &GotoProgram, cfg: &RunConfig) -> Result<Ssa, PipelineError> {
    let ssa = symex::symex(unwound)?;
    Ok(if cfg.simplify { symex::simplify(&ssa) } else { ssa })
}

pub fn vc_options(cfg: &RunConfig) -> VcOptions {
    VcOptions {
        backend: cfg.backend.clone(),
        timeout: cfg.timeout,
        multi_property: cfg.multi_property,
    }
}

/// Stand-alone scripts for every non-trivial assertion, separated by resets.
pub fn smt_scripts(ssa: &Ssa) -> String {
    vc::assertion_steps(ssa)
        .into_iter()
        .filter(|j| vc::property(ssa, *j).is_some_and(|p| !p.is_true()))
        .map(|j| vc::smt_script(ssa, j))
        .collect::<Vec<_>>()
        .join("(reset)\n")
}

struct Clock {
    timings: Vec<StageTiming>,
}

impl Clock {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let r = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        r
    }
}

fn dump(out: &mut dyn Write, title: &str, body: &str) -> Result<(), PipelineError> {
    writeln!(out, "=== {title} ===\n{body}").map_err(|e| PipelineError::Io {
        path: "<stdout>".into(),
        source: e,
    })
}

fn backend_name(b: &Backend) -> String {
    match b {
        Backend::Smt(cmd) => cmd.clone(),
        Backend::Oracle => "exhaustive oracle".into(),
    }
}

/// Runs every stage; dumps requested by `cfg.dumps` are written to `out` as
/// the pipeline goes. Errors are reported inside the result.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> VerificationResult {
    let mut clock = Clock { timings: Vec::new() };
    let mut stats = Statistics {
        unwind: cfg.unwind,
        solver: backend_name(&cfg.backend),
        ..Statistics::default()
    };
    let file = cfg
        .input
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let outcome = match run_stages(cfg, out, &mut clock, &mut stats) {
        Ok(o) => o,
        Err(e) => Outcome::Error {
            kind: e.kind(),
            diagnostic: e.to_string(),
        },
    };
    VerificationResult {
        file,
        outcome,
        timings: clock.timings,
        stats,
    }
}

fn run_stages(
    cfg: &RunConfig,
    out: &mut dyn Write,
    clock: &mut Clock,
    stats: &mut Statistics,
) -> Result<Outcome, PipelineError> {
    if cfg.unwind == 0 {
        return Err(PipelineError::BadUnwind);
    }
    let t = Instant::now();
    let u = ProgramUnit::load(&cfg.input)?;
    clock.timings.push(StageTiming {
        stage: "parse".into(),
        seconds: t.elapsed().as_secs_f64(),
    });
    if cfg.dumps.parse_tree {
        for (name, m) in u.modules() {
            dump(out, &format!("parse tree {name}"), &ast::render_module_tree(m))?;
        }
    }
    let fe = clock.time("convert", || analyze_unit(u, cfg))?;
    if cfg.dumps.annotated {
        for (name, m) in fe.annotated.modules() {
            let json = serde_json::to_string_pretty(&ast::to_json(m)).expect("json");
            dump(out, &format!("annotated AST {name}"), &json)?;
        }
    }
    if cfg.dumps.symbol_table {
        dump(out, "symbol table", &fe.table.render())?;
    }
    let g = clock.time("goto", || build_goto(&fe.table, cfg))?;
    if cfg.dumps.goto {
        dump(out, "GOTO program", &g.render())?;
    }
    let unwound = clock.time("unwind", || unwind(&g, cfg));
    stats.goto_instructions = unwound.instruction_count();
    let ssa = clock.time("symex", || to_ssa(&unwound, cfg))?;
    stats.ssa_steps = ssa.steps.len();
    stats.assertions = ssa.assertion_count();
    stats.logic = vc::logic(&ssa).to_string();
    if cfg.dumps.ssa {
        dump(out, "SSA", &ssa.render())?;
    }
    let opts = vc_options(cfg);
    let res: VcOutcome = clock.time("solve", || vc::check(&ssa, &opts))?;
    stats.vccs_checked = res.checked;
    stats.vccs_trivial = res.trivial;
    if let Some(path) = &cfg.smt_lib_out {
        let text = res.transcript.clone().unwrap_or_else(|| smt_scripts(&ssa));
        std::fs::write(path, text).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    let Some(first) = res.failures.first() else {
        return Ok(Outcome::Successful);
    };
    let (states, violated) = clock.time("trace", || report::build_trace(&ssa, first))?;
    let additional = res.failures[1..]
        .iter()
        .map(|f| report::describe_violation(&ssa, f.step))
        .collect();
    Ok(Outcome::Failed {
        violated,
        states,
        additional,
    })
}

mod bench;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pybmc_core::pipeline::{self, Dumps, RunConfig};
use pybmc_core::report;
use pybmc_core::vc::Backend;

#[derive(Parser, Debug)]
#[command(name = "pybmc", version, about = "Bounded model checker for type-annotated Python")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Program to verify (`.py`, or its `.json` AST).
    file: Option<PathBuf>,
    #[command(flatten)]
    opts: VerifyOpts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a benchmark suite laid out as `<dir>/<category>/<test>/`.
    Bench {
        dir: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        jobs: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        output: Format,
        /// Verifier binary; defaults to this executable.
        #[arg(long)]
        verifier: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_width(s: &str) -> Result<u32, String> {
    match s {
        "32" => Ok(32),
        "64" => Ok(64),
        _ => Err("expected 32 or 64".into()),
    }
}

fn parse_timeout(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        _ => Err("expected a positive number of seconds".into()),
    }
}

#[derive(Args, Debug)]
struct VerifyOpts {
    /// Loop and recursion bound.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    unwind: u32,
    /// Verify one function (`f` or `Class.method`) on nondeterministic arguments.
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    parse_tree_too: bool,
    #[arg(long)]
    dump_annotated: bool,
    #[arg(long)]
    show_symbol_table: bool,
    #[arg(long)]
    show_goto: bool,
    #[arg(long)]
    show_ssa: bool,
    /// Write the SMT-LIB commands to FILE.
    #[arg(long, value_name = "FILE")]
    smt_lib_out: Option<PathBuf>,
    /// SMT-LIB solver command reading from standard input.
    #[arg(long, default_value = "z3 -in", value_name = "CMD")]
    solver: String,
    /// Decide by exhaustive enumeration instead of a solver.
    #[arg(long)]
    oracle: bool,
    /// Width of bare `int`.
    #[arg(long, default_value = "32", value_parser = parse_width)]
    int_width: u32,
    #[arg(long)]
    overflow_check: bool,
    #[arg(long)]
    no_unwinding_assertions: bool,
    /// Check every assertion instead of stopping at the first violation.
    #[arg(long)]
    multi_property: bool,
    /// Keep unsimplified terms in the SSA trace.
    #[arg(long)]
    no_simplify: bool,
    /// Solver time limit in seconds.
    #[arg(long, value_name = "S", value_parser = parse_timeout)]
    timeout: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    output: Format,
}

impl VerifyOpts {
    fn config(&self, file: PathBuf) -> RunConfig {
        RunConfig {
            unwind: self.unwind,
            function: self.function.clone(),
            int_width: self.int_width,
            overflow_check: self.overflow_check,
            unwinding_assertions: !self.no_unwinding_assertions,
            backend: if self.oracle {
                Backend::Oracle
            } else {
                Backend::Smt(self.solver.clone())
            },
            timeout: self.timeout.map(Duration::from_secs_f64),
            multi_property: self.multi_property,
            simplify: !self.no_simplify,
            smt_lib_out: self.smt_lib_out.clone(),
            dumps: Dumps {
                parse_tree: self.parse_tree_too,
                annotated: self.dump_annotated,
                symbol_table: self.show_symbol_table,
                goto: self.show_goto,
                ssa: self.show_ssa,
            },
            ..RunConfig::new(file)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Some(Command::Bench {
            dir,
            jobs,
            output,
            verifier,
        }) => {
            let exe = verifier.unwrap_or_else(|| std::env::current_exe().expect("own executable"));
            match bench::run_suite(&dir, &exe, jobs as usize) {
                Ok(r) => {
                    match output {
                        Format::Text => print!("{}", r.render()),
                        Format::Json => println!("{}", serde_json::to_string_pretty(&r).expect("json")),
                    }
                    if r.all_match() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        None => {
            let Some(file) = cli.file else {
                eprintln!("error: no input file given");
                return ExitCode::from(2);
            };
            let cfg = cli.opts.config(file);
            let mut stdout = std::io::stdout().lock();
            let r = pipeline::run(&cfg, &mut stdout);
            let text = match cli.opts.output {
                Format::Text => report::render_text(&r),
                Format::Json => report::render_json(&r) + "\n",
            };
            let _ = stdout.write_all(text.as_bytes());
            let _ = stdout.flush();
            if let report::Outcome::Error { diagnostic, .. } = &r.outcome {
                eprintln!("error: {diagnostic}");
            }
            ExitCode::from(r.exit_code() as u8)
        }
    }
}

//! An external SMT-LIB solver driven interactively over its standard streams.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Instant;

use super::model::{paren_depth, parse_sexps, Sexp};
use super::VcError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown,
}

pub struct SolverProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    deadline: Option<Instant>,
    /// Every command sent, as a replayable script.
    pub transcript: String,
}

impl SolverProcess {
    pub fn spawn(command: &str, deadline: Option<Instant>) -> Result<Self, VcError> {
        let words = shell_words::split(command).map_err(|e| VcError::Solver(format!("bad solver command: {e}")))?;
        let (prog, args) = words
            .split_first()
            .ok_or_else(|| VcError::Solver("empty solver command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| VcError::Solver(format!("cannot run `{prog}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SolverProcess {
            child,
            stdin,
            lines: rx,
            deadline,
            transcript: String::new(),
        })
    }

    pub fn send(&mut self, cmd: &str) -> Result<(), VcError> {
        self.transcript.push_str(cmd);
        self.transcript.push('\n');
        writeln!(self.stdin, "{cmd}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| VcError::Solver(format!("solver closed its input: {e}")))
    }

    fn line(&mut self) -> Result<String, VcError> {
        let got = match self.deadline {
            None => self.lines.recv().map_err(|_| RecvTimeoutError::Disconnected),
            Some(d) => self.lines.recv_timeout(d.saturating_duration_since(Instant::now())),
        };
        match got {
            Ok(l) => Ok(l),
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                Err(VcError::Timeout)
            }
            Err(RecvTimeoutError::Disconnected) => Err(VcError::Solver("solver exited unexpectedly".into())),
        }
    }

    /// Reads one complete s-expression response.
    fn response(&mut self) -> Result<String, VcError> {
        let mut text = String::new();
        loop {
            let l = self.line()?;
            if text.is_empty() && l.trim().is_empty() {
                continue;
            }
            text.push_str(&l);
            text.push('\n');
            if paren_depth(&text) <= 0 {
                break;
            }
        }
        let t = text.trim();
        if t.starts_with("(error") {
            return Err(VcError::Solver(t.to_string()));
        }
        Ok(t.to_string())
    }

    pub fn check_sat(&mut self) -> Result<SatResult, VcError> {
        self.send("(check-sat)")?;
        match self.response()?.as_str() {
            "sat" => Ok(SatResult::Sat),
            "unsat" => Ok(SatResult::Unsat),
            "unknown" | "timeout" => Ok(SatResult::Unknown),
            other => Err(VcError::Solver(format!("unexpected solver reply `{other}`"))),
        }
    }

    /// Values of `terms`, in request order.
    pub fn get_value(&mut self, terms: &[String]) -> Result<Vec<Sexp>, VcError> {
        if terms.is_empty() {
            return Ok(Vec::new());
        }
        self.send(&format!("(get-value ({}))", terms.join(" ")))?;
        let r = self.response()?;
        let parsed = parse_sexps(&r).map_err(VcError::Solver)?;
        let Some(Sexp::List(pairs)) = parsed.into_iter().next() else {
            return Err(VcError::Solver(format!("malformed model `{r}`")));
        };
        pairs
            .into_iter()
            .map(|p| match p {
                Sexp::List(mut kv) if kv.len() == 2 => Ok(kv.pop().expect("value")),
                other => Err(VcError::Solver(format!("malformed model entry {other:?}"))),
            })
            .collect()
    }
}

impl Drop for SolverProcess {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "(exit)");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

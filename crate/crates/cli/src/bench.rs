//! Suite runner: one verifier process per test, with wall time and peak
//! resident memory taken from the kernel's accounting of that process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("test {0} has no `expect` file")]
    MissingExpectation(String),
    #[error("test {test}: bad expectation `{text}`")]
    BadExpectation { test: String, text: String },
    #[error("test {0} has neither main.py nor main.json")]
    MissingSource(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Successful,
    Failed,
    Error,
}

impl Verdict {
    fn from_exit(code: Option<i32>) -> Verdict {
        match code {
            Some(0) => Verdict::Successful,
            Some(1) => Verdict::Failed,
            _ => Verdict::Error,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Verdict::Successful => "SUCCESSFUL",
            Verdict::Failed => "FAILED",
            Verdict::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestCase {
    pub category: String,
    pub name: String,
    pub input: PathBuf,
    pub expected: Verdict,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestRow {
    pub category: String,
    pub name: String,
    pub expected: Verdict,
    pub actual: Verdict,
    pub wall_ms: f64,
    pub peak_rss_bytes: u64,
}

impl TestRow {
    pub fn matched(&self) -> bool {
        self.expected == self.actual
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryRow {
    pub category: String,
    pub tests: usize,
    pub mean_memory_bytes: f64,
    pub mean_time_ms: f64,
    pub passed: usize,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct BenchReport {
    pub categories: Vec<CategoryRow>,
    pub tests: Vec<TestRow>,
}

/// `arith_operations` -> `Arith operations`, `built-in_functions` -> `Built-in functions`.
pub fn display_category(dir: &str) -> String {
    let s = dir.replace('_', " ");
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => s,
    }
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    Ok(out)
}

/// Test directories in category then name order.
pub fn discover(suite: &Path) -> Result<Vec<TestCase>, BenchError> {
    let mut tests = Vec::new();
    for cat in sorted_dirs(suite)? {
        let category = display_category(&cat.file_name().unwrap_or_default().to_string_lossy());
        for t in sorted_dirs(&cat)? {
            let name = t.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let label = format!("{category}/{name}");
            let expect = t.join("expect");
            if !expect.exists() {
                return Err(BenchError::MissingExpectation(label));
            }
            let text = std::fs::read_to_string(&expect).map_err(io(&expect))?;
            let mut lines = text.lines();
            let expected = match lines.next().map(str::trim) {
                Some("FAILED") => Verdict::Failed,
                Some("SUCCESSFUL") => Verdict::Successful,
                other => {
                    return Err(BenchError::BadExpectation {
                        test: label,
                        text: other.unwrap_or("").to_string(),
                    })
                }
            };
            let flags_line = lines.next().unwrap_or("").trim();
            let flags = shell_words::split(flags_line).map_err(|_| BenchError::BadExpectation {
                test: label.clone(),
                text: flags_line.to_string(),
            })?;
            let input = ["main.py", "main.json"]
                .iter()
                .map(|f| t.join(f))
                .find(|p| p.exists())
                .ok_or_else(|| BenchError::MissingSource(label.clone()))?;
            tests.push(TestCase {
                category: category.clone(),
                name,
                input,
                expected,
                flags,
            });
        }
    }
    Ok(tests)
}

/// Runs `exe` on one test and reaps it with `wait4` for its own rusage.
pub fn measure(exe: &Path, test: &TestCase) -> Result<TestRow, BenchError> {
    let start = Instant::now();
    let child = Command::new(exe)
        .args(&test.flags)
        .arg(&test.input)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(io(exe))?;
    let pid = child.id() as libc::pid_t;
    let mut status: libc::c_int = 0;
    // SAFETY: rusage is plain data; wait4 fills it for the child we spawned.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let r = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
    let wall = start.elapsed();
    if r < 0 {
        return Err(BenchError::Io {
            path: exe.display().to_string(),
            source: std::io::Error::last_os_error(),
        });
    }
    let code = if libc::WIFEXITED(status) {
        Some(libc::WEXITSTATUS(status))
    } else {
        None
    };
    Ok(TestRow {
        category: test.category.clone(),
        name: test.name.clone(),
        expected: test.expected,
        actual: Verdict::from_exit(code),
        wall_ms: wall.as_secs_f64() * 1000.0,
        // ru_maxrss is in kilobytes on Linux.
        peak_rss_bytes: usage.ru_maxrss.max(0) as u64 * 1024,
    })
}

pub fn run_suite(suite: &Path, exe: &Path, jobs: usize) -> Result<BenchReport, BenchError> {
    let tests = discover(suite)?;
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<Result<TestRow, BenchError>>>> = Mutex::new((0..tests.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(t) = tests.get(i) else { break };
                let r = measure(exe, t);
                rows.lock().expect("unpoisoned")[i] = Some(r);
            });
        }
    });
    let rows = rows
        .into_inner()
        .expect("unpoisoned")
        .into_iter()
        .map(|r| r.expect("every test ran"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(rows))
}

pub fn aggregate(tests: Vec<TestRow>) -> BenchReport {
    let mut categories: Vec<CategoryRow> = Vec::new();
    for t in &tests {
        let row = match categories.iter_mut().find(|c| c.category == t.category) {
            Some(c) => c,
            None => {
                categories.push(CategoryRow {
                    category: t.category.clone(),
                    tests: 0,
                    mean_memory_bytes: 0.0,
                    mean_time_ms: 0.0,
                    passed: 0,
                });
                categories.last_mut().expect("just pushed")
            }
        };
        row.tests += 1;
        row.mean_memory_bytes += t.peak_rss_bytes as f64;
        row.mean_time_ms += t.wall_ms;
        row.passed += t.matched() as usize;
    }
    for c in &mut categories {
        c.mean_memory_bytes /= c.tests as f64;
        c.mean_time_ms /= c.tests as f64;
    }
    BenchReport { categories, tests }
}

impl BenchReport {
    pub fn all_match(&self) -> bool {
        self.tests.iter().all(TestRow::matched)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<22} {:>6} {:>12} {:>10} {:>8}",
            "Category", "Tests", "Memory (MB)", "Time (ms)", "Correct"
        );
        for c in &self.categories {
            let _ = writeln!(
                out,
                "{:<22} {:>6} {:>12.2} {:>10.1} {:>8}",
                c.category,
                c.tests,
                c.mean_memory_bytes / (1024.0 * 1024.0),
                c.mean_time_ms,
                format!("{}/{}", c.passed, c.tests)
            );
        }
        let total = self.tests.len();
        let passed = self.tests.iter().filter(|t| t.matched()).count();
        let _ = writeln!(out, "{:<22} {:>6} {:>12} {:>10} {:>8}", "Total", total, "", "", format!("{passed}/{total}"));
        let bad: Vec<&TestRow> = self.tests.iter().filter(|t| !t.matched()).collect();
        if !bad.is_empty() {
            let _ = writeln!(out, "\nMismatches:");
            for t in bad {
                let _ = writeln!(
                    out,
                    "  {}/{}: expected {}, got {}",
                    t.category,
                    t.name,
                    t.expected.as_str(),
                    t.actual.as_str()
                );
            }
        }
        out
    }
}

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{SolveStatus, SolverError, SolverStats, SolverVerdict};
use crate::encoder::{emit_dimacs, CnfFormula};

/// Environment variable naming the default external solver executable.
pub const EXTERNAL_SOLVER_ENV: &str = "RADO_SAT_SOLVER";

/// Status and values read from SAT-competition style output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalOutput {
    pub status: SolveStatus,
    /// Literals from `v` lines, without the terminating 0.
    pub values: Vec<i32>,
}

/// Parses `s ...` and `v ...` lines; everything else is ignored.
pub fn parse_solver_output(raw: &str) -> Result<ExternalOutput, SolverError> {
    let mut status = None;
    let mut values = Vec::new();
    let err = |msg: String| SolverError::Parse { msg, raw: raw.to_string() };
    for line in raw.lines() {
        let line = line.trim_end();
        if let Some(rest) = line.strip_prefix("s ") {
            let s = match rest.trim() {
                "SATISFIABLE" => SolveStatus::Sat,
                "UNSATISFIABLE" => SolveStatus::Unsat,
                "UNKNOWN" | "INDETERMINATE" => SolveStatus::Unknown,
                other => return Err(err(format!("unknown status `{other}`"))),
            };
            if status.replace(s).is_some_and(|old| old != s) {
                return Err(err("conflicting status lines".into()));
            }
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let l: i32 = tok.parse().map_err(|_| err(format!("bad value `{tok}`")))?;
                if l != 0 {
                    values.push(l);
                }
            }
        }
    }
    let status = status.ok_or_else(|| err("no status line".into()))?;
    Ok(ExternalOutput { status, values })
}

/// Runs `path args... <cnf file>`. A run that outlives `budget` is killed
/// and reported as Unknown.
pub fn solve_external(
    f: &CnfFormula,
    path: &Path,
    args: &[String],
    budget: Option<Duration>,
) -> Result<SolverVerdict, SolverError> {
    let start = Instant::now();
    let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
    {
        let mut w = std::io::BufWriter::new(file.as_file_mut());
        emit_dimacs(f, &[], &mut w)?;
        w.flush()?;
    }
    let backend_err = |msg: String| SolverError::Backend { path: path.display().to_string(), msg };
    let mut child = Command::new(path)
        .args(args)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| backend_err(e.to_string()))?;
    let mut stdout = child.stdout.take().expect("piped");
    let mut stderr = child.stderr.take().expect("piped");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let mut timed_out = false;
    let exit = loop {
        if let Some(st) = child.try_wait()? {
            break st;
        }
        if budget.is_some_and(|b| start.elapsed() >= b) {
            let _ = child.kill();
            timed_out = true;
            break child.wait()?;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let out = reader.join().unwrap_or_default();
    let errs = err_reader.join().unwrap_or_default();
    let verdict = |status, model| SolverVerdict {
        status,
        model,
        stats: SolverStats::default(),
        wall_time: start.elapsed(),
        backend: format!("external:{}", path.display()),
    };
    if timed_out {
        return Ok(verdict(SolveStatus::Unknown, None));
    }
    let parsed = match parse_solver_output(&out) {
        Ok(p) => p,
        // 10 and 20 are the conventional SAT/UNSAT exit codes
        Err(_) if !matches!(exit.code(), Some(0 | 10 | 20)) => {
            return Err(backend_err(format!("exit status {exit} without a status line; stderr: {}", errs.trim())));
        }
        Err(e) => return Err(e),
    };
    match parsed.status {
        SolveStatus::Sat => {
            let mut model = vec![false; f.var_count() as usize];
            for l in parsed.values {
                if let Some(slot) = model.get_mut(l.unsigned_abs() as usize - 1) {
                    *slot = l > 0;
                }
            }
            if let Some(clause) = f.first_falsified(&model) {
                return Err(SolverError::BadModel { clause });
            }
            Ok(verdict(SolveStatus::Sat, Some(model)))
        }
        s => Ok(verdict(s, None)),
    }
}

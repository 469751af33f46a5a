//! Satisfiability backends: the embedded CDCL solver and external DIMACS
//! solver processes. Every SAT model is revalidated against the formula
//! before it is returned.

mod cdcl;
mod external;

use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::CnfFormula;

pub use external::{parse_solver_output, solve_external, ExternalOutput, EXTERNAL_SOLVER_ENV};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("time budget must be positive")]
    Budget,
    #[error("external solver `{path}` failed: {msg}")]
    Backend { path: String, msg: String },
    #[error("could not parse solver output: {msg}\n--- raw output ---\n{raw}")]
    Parse { msg: String, raw: String },
    #[error("backend returned a model that falsifies clause {clause}")]
    BadModel { clause: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    Internal,
    External { path: PathBuf, args: Vec<String> },
}

impl BackendKind {
    /// `internal` or `external:PATH`.
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "internal" => Some(BackendKind::Internal),
            _ => text
                .strip_prefix("external:")
                .filter(|p| !p.is_empty())
                .map(|p| BackendKind::External { path: p.into(), args: Vec::new() }),
        }
    }

    pub fn id(&self) -> String {
        match self {
            BackendKind::Internal => "internal-cdcl".into(),
            BackendKind::External { path, .. } => format!("external:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Wall-clock budget; `None` means unlimited.
    pub time_budget: Option<Duration>,
    /// Conflict budget for the internal solver. Unlike the time budget it
    /// keeps runs reproducible.
    pub conflict_budget: Option<u64>,
    pub seed: u64,
    #[serde(skip)]
    pub interrupt: Option<Arc<AtomicBool>>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self { kind: BackendKind::Internal, time_budget: None, conflict_budget: None, seed: 0, interrupt: None }
    }
}

impl BackendConfig {
    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.time_budget = Some(budget);
        self
    }

    fn check(&self) -> Result<(), SolverError> {
        match self.time_budget {
            Some(d) if d.is_zero() => Err(SolverError::Budget),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SolveStatus {
    Sat,
    Unsat,
    /// Budget exhausted or interrupted.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverVerdict {
    pub status: SolveStatus,
    /// `model[v - 1]` is the value of variable `v`; present iff SAT.
    pub model: Option<Vec<bool>>,
    pub stats: SolverStats,
    pub wall_time: Duration,
    pub backend: String,
}

impl SolverVerdict {
    pub fn is_sat(&self) -> bool {
        self.status == SolveStatus::Sat
    }

    pub fn is_unsat(&self) -> bool {
        self.status == SolveStatus::Unsat
    }
}

/// Decides `f` with the configured backend.
pub fn solve(f: &CnfFormula, cfg: &BackendConfig) -> Result<SolverVerdict, SolverError> {
    cfg.check()?;
    match &cfg.kind {
        BackendKind::Internal => Ok(solve_internal(f, cfg)),
        BackendKind::External { path, args } => solve_external(f, path, args, cfg.time_budget),
    }
}

fn solve_internal(f: &CnfFormula, cfg: &BackendConfig) -> SolverVerdict {
    let start = Instant::now();
    let mut s = cdcl::Cdcl::new(f.var_count() as usize, cfg.seed);
    for c in f.clauses() {
        s.add_clause(c);
    }
    let limits = cdcl::Limits {
        deadline: cfg.time_budget.map(|d| start + d),
        max_conflicts: cfg.conflict_budget,
        interrupt: cfg.interrupt.as_deref(),
    };
    let (status, model) = match s.solve(&limits) {
        cdcl::Outcome::Sat(m) => (SolveStatus::Sat, Some(m)),
        cdcl::Outcome::Unsat => (SolveStatus::Unsat, None),
        cdcl::Outcome::Unknown => (SolveStatus::Unknown, None),
    };
    if let Some(m) = &model {
        // an internal model that fails is a solver bug, not a user error
        assert!(f.is_satisfied_by(m), "internal solver produced an invalid model");
    }
    SolverVerdict { status, model, stats: s.stats, wall_time: start.elapsed(), backend: cfg.kind.id() }
}

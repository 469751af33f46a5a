//! Exact Rado numbers: infinity detection from known colorings, then bracketing and
//! binary search over truncations of one large formula.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{logd_coloring, logd_hypothesis, verify_coloring, vp_modk_coloring, Coloring, LogVariant};
use crate::encoder::{build_formula, decode_model, signed_model, symmetry_anchor, truncate, CnfFormula, EncodeError, EncodeOptions};
use crate::equation::{primes_up_to, val, LinearEquation};
use crate::solver::{solve, BackendConfig, SolveStatus, SolverError, SolverStats};

pub use crate::coloring::PRIME_SEARCH_LIMIT;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Why a Rado number is infinite: a coloring of all positive integers
/// without monochromatic solutions exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfinityRule {
    /// `⌈log_d n⌉ mod k` with `d > 1`; needs `S a_m^(k-2) <= a_1^(k-1)`.
    LogExpanding,
    /// `⌈log_d n⌉ mod k` with `d < 1`; needs `S^(k-1) <= a_1 a_m^(k-2)`.
    LogContracting,
    /// `v_p(n) mod k` when the valuations `v_p(c_i)` are distinct mod `k`.
    ValuationsDistinctModK,
    /// All coefficients share a sign, so no positive solution exists.
    NotTwoRegular,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfinityJustification {
    pub rule: InfinityRule,
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prime: Option<u64>,
    /// The instantiated hypothesis, for humans.
    pub instance: String,
}

impl InfinityJustification {
    /// Re-evaluates the rule's hypothesis for `eq`.
    pub fn holds_for(&self, eq: &LinearEquation) -> bool {
        match self.rule {
            InfinityRule::NotTwoRegular => !eq.has_mixed_signs(),
            InfinityRule::LogExpanding | InfinityRule::LogContracting => eq
                .one_sided_form()
                .is_some_and(|f| logd_hypothesis(&f, self.k, log_variant(self.rule)).is_ok()),
            InfinityRule::ValuationsDistinctModK => {
                self.prime.is_some_and(|p| valuations_distinct_mod(eq, p, self.k))
            }
        }
    }

    /// The avoiding coloring behind the rule, restricted to `[1, n]`.
    pub fn coloring(&self, eq: &LinearEquation, n: u64) -> Result<Coloring, crate::coloring::ColoringError> {
        match self.rule {
            InfinityRule::NotTwoRegular => Coloring::new(self.k, vec![1; n as usize]),
            InfinityRule::LogExpanding | InfinityRule::LogContracting => {
                logd_coloring(eq, self.k, log_variant(self.rule), n)
            }
            InfinityRule::ValuationsDistinctModK => vp_modk_coloring(self.prime.unwrap_or(0), self.k, n),
        }
    }
}

fn log_variant(rule: InfinityRule) -> LogVariant {
    match rule {
        InfinityRule::LogContracting => LogVariant::Contracting,
        _ => LogVariant::Expanding,
    }
}

pub(crate) fn valuations_distinct_mod(eq: &LinearEquation, p: u64, k: u32) -> bool {
    let v: Vec<u32> = eq.coeffs().iter().map(|&c| val(c.unsigned_abs(), p) % k).collect();
    (0..v.len()).all(|i| (i + 1..v.len()).all(|j| v[i] != v[j]))
}

/// The smallest prime `p <= 100` whose valuations of the coefficients are
/// pairwise distinct mod `k`.
pub(crate) fn distinct_valuation_prime(eq: &LinearEquation, k: u32) -> Option<u64> {
    if k == 0 || eq.arity() > k as usize {
        return None;
    }
    primes_up_to(PRIME_SEARCH_LIMIT).find(|&p| valuations_distinct_mod(eq, p, k))
}

/// Checks the infinity rules in a fixed order and returns the first that
/// applies with `k` colors.
pub fn detect_infinity(eq: &LinearEquation, k: u32) -> Option<InfinityJustification> {
    if k == 0 {
        return None;
    }
    if !eq.has_mixed_signs() {
        return Some(InfinityJustification {
            rule: InfinityRule::NotTwoRegular,
            k,
            prime: None,
            instance: format!("coefficients {:?} share a sign", eq.coeffs()),
        });
    }
    if k >= 2 {
        if let Some(form) = eq.one_sided_form().filter(|f| f.lhs.len() >= 2) {
            for (rule, variant) in [
                (InfinityRule::LogExpanding, LogVariant::Expanding),
                (InfinityRule::LogContracting, LogVariant::Contracting),
            ] {
                if logd_hypothesis(&form, k, variant).is_ok() {
                    return Some(InfinityJustification {
                        rule,
                        k,
                        prime: None,
                        instance: format!(
                            "{} with S = {}, a_1 = {}, a_m = {}, k = {k}",
                            variant.inequality(),
                            form.lhs_sum(),
                            form.smallest(),
                            form.rhs
                        ),
                    });
                }
            }
        }
    }
    distinct_valuation_prime(eq, k).map(|p| {
        let vals: Vec<u32> = eq.coeffs().iter().map(|&c| val(c.unsigned_abs(), p)).collect();
        InfinityJustification {
            rule: InfinityRule::ValuationsDistinctModK,
            k,
            prime: Some(p),
            instance: format!("v_{p} of the coefficients = {vals:?}, distinct mod {k}"),
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// First probe.
    pub lower0: u64,
    /// First upper probe; multiplied by `growth` while satisfiable.
    pub upper0: u64,
    pub growth: u64,
    /// Wall-clock budget for the whole search.
    pub budget: Option<Duration>,
    /// Symmetry clauses in probes; `None` means on for `k >= 3`.
    pub symmetry: Option<bool>,
    /// Give up bracketing beyond this `n`.
    pub max_n: u64,
    pub backend: BackendConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            lower0: 4,
            upper0: 64,
            growth: 4,
            budget: None,
            symmetry: None,
            max_n: 1 << 16,
            backend: BackendConfig::default(),
        }
    }
}

/// A satisfiability probe made during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub n: u64,
    pub status: SolveStatus,
    pub clauses: usize,
    pub wall_time: Duration,
    pub stats: SolverStats,
    /// Whether the formula came from truncating a larger one.
    pub truncated: bool,
}

/// Record of the unsatisfiable formula at the reported value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnsatRecord {
    pub n: u64,
    pub options: EncodeOptions,
    pub fingerprint: String,
    pub clauses: usize,
    pub backend: String,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SearchResult {
    Finite { value: u64 },
    Infinite { justification: InfinityJustification },
    /// `[1, lower]` is known colorable; `F_upper` is known unsatisfiable if
    /// `upper` is set.
    Unknown { lower: u64, upper: Option<u64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub equation: LinearEquation,
    pub k: u32,
    pub result: SearchResult,
    /// An avoiding coloring of `[1, value - 1]`, or of `[1, lower]` for
    /// unknown results.
    pub lower_certificate: Option<Coloring>,
    pub upper_certificate: Option<UnsatRecord>,
    pub probes: Vec<Probe>,
    pub elapsed: Duration,
}

impl SearchOutcome {
    pub fn value(&self) -> Option<u64> {
        match self.result {
            SearchResult::Finite { value } => Some(value),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.result, SearchResult::Infinite { .. })
    }

    /// Independently re-checks the certificates: the coloring with the
    /// verifier, the formula by rebuilding it and comparing fingerprints,
    /// and infinity rules by re-evaluating their hypotheses.
    pub fn check_certificates(&self) -> Result<(), String> {
        match &self.result {
            SearchResult::Finite { value } => {
                let c = self.lower_certificate.as_ref().ok_or("missing coloring")?;
                if c.n() as u64 != value - 1 {
                    return Err(format!("coloring covers [1, {}], expected [1, {}]", c.n(), value - 1));
                }
                if !verify_coloring(&self.equation, c).is_valid() {
                    return Err("coloring has a monochromatic solution".into());
                }
                let rec = self.upper_certificate.as_ref().ok_or("missing UNSAT record")?;
                if rec.n != *value {
                    return Err(format!("UNSAT record is for n = {}", rec.n));
                }
                let f = build_formula(&self.equation, *value, self.k, rec.options).map_err(|e| e.to_string())?;
                if f.fingerprint() != rec.fingerprint {
                    return Err("UNSAT formula fingerprint does not match a rebuild".into());
                }
                Ok(())
            }
            SearchResult::Infinite { justification } => {
                if justification.holds_for(&self.equation) {
                    Ok(())
                } else {
                    Err(format!("{:?} does not apply", justification.rule))
                }
            }
            SearchResult::Unknown { .. } => Ok(()),
        }
    }
}

struct Searcher<'a> {
    eq: &'a LinearEquation,
    k: u32,
    cfg: &'a SearchConfig,
    opts: EncodeOptions,
    start: Instant,
    /// Largest integer pinned by symmetry clauses; truncating below it
    /// would not reproduce the rebuilt formula.
    anchor_max: u64,
    lo: u64,
    lo_coloring: Coloring,
    hi: Option<u64>,
    hi_record: Option<UnsatRecord>,
    big: Option<CnfFormula>,
    probes: Vec<Probe>,
}

enum ProbeResult {
    Sat,
    Unsat,
    OutOfBudget,
}

impl<'a> Searcher<'a> {
    fn remaining(&self) -> Option<Duration> {
        self.cfg.budget.map(|b| b.saturating_sub(self.start.elapsed()))
    }

    fn formula_at(&self, n: u64) -> Result<(CnfFormula, bool), SearchError> {
        match &self.big {
            Some(big) if n < big.meta().n && (!self.opts.symmetry || n >= self.anchor_max) => {
                Ok((truncate(big, n)?, true))
            }
            _ => Ok((build_formula(self.eq, n, self.k, self.opts)?, false)),
        }
    }

    fn probe(&mut self, n: u64, keep_if_unsat: bool) -> Result<ProbeResult, SearchError> {
        let remaining = self.remaining();
        if remaining.is_some_and(|r| r.is_zero()) {
            return Ok(ProbeResult::OutOfBudget);
        }
        let (f, truncated) = self.formula_at(n)?;
        let mut backend = self.cfg.backend.clone();
        backend.time_budget = match (backend.time_budget, remaining) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let v = solve(&f, &backend)?;
        self.probes.push(Probe {
            n,
            status: v.status,
            clauses: f.clause_count(),
            wall_time: v.wall_time,
            stats: v.stats,
            truncated,
        });
        match v.status {
            SolveStatus::Sat => {
                let model = v.model.expect("SAT verdicts carry a model");
                self.lo = n;
                self.lo_coloring = decode_model(&signed_model(&model), n, self.k)?;
                Ok(ProbeResult::Sat)
            }
            SolveStatus::Unsat => {
                self.hi = Some(n);
                self.hi_record = Some(UnsatRecord {
                    n,
                    options: self.opts,
                    fingerprint: f.fingerprint(),
                    clauses: f.clause_count(),
                    backend: v.backend,
                    stats: v.stats,
                });
                if keep_if_unsat {
                    self.big = Some(f);
                }
                Ok(ProbeResult::Unsat)
            }
            SolveStatus::Unknown => Ok(ProbeResult::OutOfBudget),
        }
    }

    fn outcome(self, result: SearchResult) -> SearchOutcome {
        let finite = matches!(result, SearchResult::Finite { .. });
        SearchOutcome {
            equation: self.eq.clone(),
            k: self.k,
            lower_certificate: Some(self.lo_coloring),
            upper_certificate: if finite { self.hi_record } else { None },
            result,
            probes: self.probes,
            elapsed: self.start.elapsed(),
        }
    }

    fn unknown(self) -> SearchOutcome {
        let r = SearchResult::Unknown { lower: self.lo, upper: self.hi };
        self.outcome(r)
    }
}

/// Computes `R_k(eq)`.
pub fn rado_number(eq: &LinearEquation, k: u32, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    if k == 0 {
        return Err(SearchError::Parameter("k must be at least 1".into()));
    }
    if cfg.growth < 2 || cfg.lower0 == 0 || cfg.upper0 == 0 {
        return Err(SearchError::Parameter("need lower0, upper0 >= 1 and growth >= 2".into()));
    }
    let start = Instant::now();
    if let Some(justification) = detect_infinity(eq, k) {
        return Ok(SearchOutcome {
            equation: eq.clone(),
            k,
            result: SearchResult::Infinite { justification },
            lower_certificate: None,
            upper_certificate: None,
            probes: Vec::new(),
            elapsed: start.elapsed(),
        });
    }
    let opts = EncodeOptions { optional: true, symmetry: cfg.symmetry.unwrap_or(k >= 3) };
    let anchor_max = symmetry_anchor(eq, u64::MAX)
        .map(|a| a.first.max(a.second))
        .unwrap_or(0);
    let mut s = Searcher {
        eq,
        k,
        cfg,
        opts,
        start,
        anchor_max,
        lo: 0,
        lo_coloring: Coloring::new(k, Vec::new()).expect("empty coloring"),
        hi: None,
        hi_record: None,
        big: None,
        probes: Vec::new(),
    };

    match s.probe(cfg.lower0, true)? {
        ProbeResult::OutOfBudget => return Ok(s.unknown()),
        ProbeResult::Unsat => {}
        ProbeResult::Sat => {
            let mut u = cfg.upper0.max(cfg.lower0 + 1);
            loop {
                if u > cfg.max_n {
                    if s.lo >= cfg.max_n {
                        return Ok(s.unknown());
                    }
                    u = cfg.max_n;
                }
                match s.probe(u, true)? {
                    ProbeResult::OutOfBudget => return Ok(s.unknown()),
                    ProbeResult::Unsat => break,
                    ProbeResult::Sat => u = u.saturating_mul(cfg.growth),
                }
            }
        }
    }

    while let Some(hi) = s.hi {
        if hi - s.lo <= 1 {
            break;
        }
        let mid = s.lo + (hi - s.lo) / 2;
        if let ProbeResult::OutOfBudget = s.probe(mid, false)? {
            return Ok(s.unknown());
        }
    }
    let value = s.hi.expect("bracket closed");
    Ok(s.outcome(SearchResult::Finite { value }))
}

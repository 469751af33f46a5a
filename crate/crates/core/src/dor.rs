//! Degree of regularity: upper bounds from explicit avoiding colorings,
//! lower bounds from finite Rado numbers.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coloring::{logd_hypothesis, unique_prime_setups, LogVariant, ProductCase, PRIME_SEARCH_LIMIT};
use crate::equation::{primes_up_to, val, LinearEquation};
use crate::search::{distinct_valuation_prime, rado_number, SearchConfig, SearchError, SearchOutcome, SearchResult};

/// Largest `k` scanned by the logarithmic and valuation rules.
pub const DEFAULT_K_CAP: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DorRule {
    /// No positive and negative coefficient pair: not 2-regular.
    NotTwoRegular,
    /// Logarithmic coloring with base `> 1`.
    LogExpanding,
    /// Logarithmic coloring with base `< 1`.
    LogContracting,
    /// `v_p` of the coefficients pairwise distinct mod `k`.
    ValuationsDistinctModK,
    /// `v_p` of the three coefficients pairwise distinct.
    ValuationsDistinct,
    /// Product coloring for `0 = v_p(a) = v_p(b) = v_p(a+b) < v_p(c)`.
    ProductUnitPairSum,
    /// Product coloring for `0 = v_p(a) < v_p(b) = v_p(c) = v_p(b+c)`.
    ProductSharedValuation,
    /// Rado's bound for `a(x+y) = bz` with `a/b` not a power of 2.
    RadoTwoEqualCoefficients,
}

/// `dor(E) <= bound`, by `rule`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DorBound {
    pub bound: u32,
    pub rule: DorRule,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prime: Option<u64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DorValue {
    Finite { value: u32 },
    Infinite,
    /// `lo <= dor <= hi`; `hi = None` means no upper bound was found.
    Interval { lo: u32, hi: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum DerivationStep {
    /// A nonempty subset of the coefficients sums to zero.
    Regular { subset_sum_zero: bool },
    /// Mixed signs with at least three variables.
    TwoRegular,
    UpperBound(DorBound),
    /// `R_k` computed: finite value or infinite/unknown.
    RadoNumber { k: u32, result: SearchResult, seconds: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DorResult {
    pub equation: LinearEquation,
    pub value: DorValue,
    /// Sum of the coefficients on the majority side of the one-sided form.
    pub s: Option<u64>,
    pub derivation: Vec<DerivationStep>,
    /// Full outcomes of the Rado number searches, for their certificates.
    #[serde(skip)]
    pub searches: Vec<SearchOutcome>,
}

#[derive(Debug, Clone, Default)]
pub struct DorConfig {
    pub search: SearchConfig,
    /// Defaults to [`DEFAULT_K_CAP`] when zero.
    pub k_cap: u32,
}

/// Every applicable upper bound, sorted by bound.
pub fn dor_upper_bounds(eq: &LinearEquation) -> Vec<DorBound> {
    dor_upper_bounds_with_cap(eq, DEFAULT_K_CAP)
}

pub fn dor_upper_bounds_with_cap(eq: &LinearEquation, k_cap: u32) -> Vec<DorBound> {
    let mut out = Vec::new();
    if eq.is_regular().unwrap_or(true) {
        return out;
    }
    if !eq.has_mixed_signs() {
        out.push(DorBound {
            bound: 1,
            rule: DorRule::NotTwoRegular,
            prime: None,
            detail: format!("coefficients {:?} share a sign", eq.coeffs()),
        });
    }
    if let Some(form) = eq.one_sided_form().filter(|f| f.lhs.len() >= 2) {
        for (rule, variant) in [(DorRule::LogExpanding, LogVariant::Expanding), (DorRule::LogContracting, LogVariant::Contracting)] {
            if let Some(k) = (2..=k_cap).find(|&k| logd_hypothesis(&form, k, variant).is_ok()) {
                out.push(DorBound {
                    bound: k - 1,
                    rule,
                    prime: None,
                    detail: format!(
                        "not {k}-regular: {} with S = {}, a_1 = {}, a_m = {}",
                        variant.inequality(),
                        form.lhs_sum(),
                        form.smallest(),
                        form.rhs
                    ),
                });
            }
        }
    }
    if let Some((k, p)) = (2..=k_cap).find_map(|k| distinct_valuation_prime(eq, k).map(|p| (k, p))) {
        out.push(DorBound {
            bound: k - 1,
            rule: DorRule::ValuationsDistinctModK,
            prime: Some(p),
            detail: format!("not {k}-regular: v_{p} of the coefficients distinct mod {k}"),
        });
    }
    if eq.arity() == 3 {
        let c = eq.coeffs();
        if let Some(p) = primes_up_to(PRIME_SEARCH_LIMIT).find(|&p| {
            let v: Vec<u32> = c.iter().map(|&x| val(x.unsigned_abs(), p)).collect();
            v[0] != v[1] && v[0] != v[2] && v[1] != v[2]
        }) {
            out.push(DorBound {
                bound: 3,
                rule: DorRule::ValuationsDistinct,
                prime: Some(p),
                detail: format!("v_{p} of the coefficients pairwise distinct"),
            });
        }
        for (case, rule) in [
            (ProductCase::UnitPairSum, DorRule::ProductUnitPairSum),
            (ProductCase::SharedValuation, DorRule::ProductSharedValuation),
        ] {
            let setups = unique_prime_setups(eq, case);
            if let Some(s) = setups.iter().min_by_key(|s| s.color_count()) {
                let colors = s.color_count();
                out.push(DorBound {
                    bound: colors - 1,
                    rule,
                    prime: Some(s.prime),
                    detail: format!(
                        "{colors}-coloring from p = {}, multiplier {} of order {} mod {}",
                        s.prime,
                        s.multiplier,
                        s.multiplier_order,
                        s.modulus()
                    ),
                });
            }
        }
        if let Some((a, b)) = two_equal_coefficients(c) {
            let (hi, lo) = (a.max(b), a.min(b));
            if hi % lo != 0 || !(hi / lo).is_power_of_two() {
                out.push(DorBound {
                    bound: 3,
                    rule: DorRule::RadoTwoEqualCoefficients,
                    prime: None,
                    detail: format!("{a}(x+y) = {b}z with {a}/{b} not a power of 2"),
                });
            }
        }
    }
    out.sort_by_key(|b| b.bound);
    out
}

/// `(a, b)` when the equation reads `a(x+y) = bz` up to sign and order.
fn two_equal_coefficients(c: &[i64]) -> Option<(u64, u64)> {
    for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        if c[i] == c[j] && (c[k] > 0) != (c[i] > 0) {
            return Some((c[i].unsigned_abs(), c[k].unsigned_abs()));
        }
    }
    None
}

/// Determines `dor(eq)`: infinite for regular equations; otherwise the
/// smallest upper bound is matched against Rado numbers computed for
/// increasing `k`.
pub fn compute_dor(eq: &LinearEquation, cfg: &DorConfig) -> Result<DorResult, SearchError> {
    let cap = if cfg.k_cap == 0 { DEFAULT_K_CAP } else { cfg.k_cap };
    let mut derivation = Vec::new();
    let s = eq.one_sided_form().map(|f| f.lhs_sum());
    let result = |value, derivation, searches| DorResult { equation: eq.clone(), value, s, derivation, searches };
    if eq.is_regular().map_err(|e| SearchError::Parameter(e.to_string()))? {
        derivation.push(DerivationStep::Regular { subset_sum_zero: true });
        return Ok(result(DorValue::Infinite, derivation, Vec::new()));
    }
    let bounds = dor_upper_bounds_with_cap(eq, cap);
    let hi = bounds.first().map(|b| b.bound);
    if let Some(b) = bounds.first() {
        derivation.push(DerivationStep::UpperBound(b.clone()));
    }
    let mut lo = 0;
    if eq.arity() >= 3 && eq.has_mixed_signs() {
        derivation.push(DerivationStep::TwoRegular);
        lo = 2;
    }
    let mut searches = Vec::new();
    let mut closed_hi = hi;
    // R_2 is computed even when 2-regularity is known, for its certificate
    let mut k = if lo >= 2 { 2 } else { 1 };
    while k <= hi.unwrap_or(cap).min(cap) {
        let t = Instant::now();
        let out = rado_number(eq, k, &cfg.search)?;
        derivation.push(DerivationStep::RadoNumber { k, result: out.result.clone(), seconds: t.elapsed().as_secs_f64() });
        let r = out.result.clone();
        searches.push(out);
        match r {
            SearchResult::Finite { .. } => lo = lo.max(k),
            SearchResult::Infinite { .. } => {
                closed_hi = Some(closed_hi.map_or(k - 1, |h| h.min(k - 1)));
                break;
            }
            SearchResult::Unknown { .. } => break,
        }
        k += 1;
    }
    let value = match closed_hi {
        Some(h) if h == lo => DorValue::Finite { value: lo },
        h => DorValue::Interval { lo, hi: h },
    };
    Ok(result(value, derivation, searches))
}

/// The `m`-variable equation `x_1 + ... + x_{m-1} = c x_m` with
/// `c = ⌈(m-1)^((k-1)/(k-2))⌉`, which is not `k`-regular but is 2-regular.
pub fn golowich_counterexample(m: usize, k: u32) -> Result<LinearEquation, SearchError> {
    if m < 3 || k < 3 {
        return Err(SearchError::Parameter(format!("need m >= 3 and k >= 3, got m = {m}, k = {k}")));
    }
    use num_bigint::BigUint;
    use num_traits::Pow;
    // smallest c with c^(k-2) >= (m-1)^(k-1)
    let target = Pow::pow(&BigUint::from(m as u64 - 1), k - 1);
    let (mut lo, mut hi) = (1u64, (m as u64 - 1).pow(2).max(2));
    while Pow::pow(&BigUint::from(hi), k - 2) < target {
        hi *= 2;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if Pow::pow(&BigUint::from(mid), k - 2) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let c = lo as i64;
    let mut coeffs = vec![1i64; m - 1];
    coeffs.push(-c);
    let lhs: Vec<String> = (1..m).map(|i| format!("x{i}")).collect();
    let eq = LinearEquation::new(coeffs)
        .map_err(|e| SearchError::Parameter(e.to_string()))?
        .with_display(format!("{}={c}x{m}", lhs.join("+")));
    let form = eq.one_sided_form().expect("one-sided by construction");
    logd_hypothesis(&form, k, LogVariant::Contracting)
        .map_err(|e| SearchError::Parameter(format!("construction failed its own hypothesis: {e}")))?;
    Ok(eq)
}

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rado::coloring::verify_coloring;
use rado::encoder::{build_formula, decode_model, signed_model, symmetry_anchor, truncate, CnfFormula, EncodeOptions};
use rado::solver::{solve, BackendConfig};
use rado::LinearEquation;

/// Solutions of `c0 x + c1 y + c2 z = 0` in `[1, n]`. Plain triple loop,
/// independent of the crate's enumerator.
fn solutions(c: [i64; 3], n: u64) -> Vec<[u64; 3]> {
    let mut out = Vec::new();
    for x in 1..=n {
        for y in 1..=n {
            for z in 1..=n {
                if c[0] * x as i64 + c[1] * y as i64 + c[2] * z as i64 == 0 {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// Whether some `k`-coloring of `[1, n]` has no monochromatic solution, by
/// scanning all `k^n` colorings in odometer order.
pub fn brute_colorable(c: [i64; 3], n: u64, k: u32) -> bool {
    let solutions = solutions(c, n);
    let mut colors = vec![0u32; n as usize + 1];
    loop {
        if !solutions.iter().any(|s| colors[s[0] as usize] == colors[s[1] as usize] && colors[s[1] as usize] == colors[s[2] as usize]) {
            return true;
        }
        let mut j = 1;
        loop {
            if j > n as usize {
                return false;
            }
            colors[j] += 1;
            if colors[j] < k {
                break;
            }
            colors[j] = 0;
            j += 1;
        }
    }
}

/// Least `n <= limit` with no valid `k`-coloring of `[1, n]`.
pub fn brute_rado(c: [i64; 3], k: u32, limit: u64) -> Option<u64> {
    (1..=limit).find(|&n| !brute_colorable(c, n, k))
}

pub fn coeffs3(eq: &LinearEquation) -> [i64; 3] {
    eq.coeffs().try_into().expect("three-variable equation")
}

/// Solves with the internal backend; returns the model when satisfiable.
pub fn sat(f: &CnfFormula) -> Option<Vec<bool>> {
    let v = solve(f, &BackendConfig::default()).expect("internal solver runs");
    assert!(v.is_sat() || v.is_unsat(), "no budget set, so the solver must decide");
    v.model
}

pub fn formula(eq: &LinearEquation, n: u64, k: u32, optional: bool, symmetry: bool) -> CnfFormula {
    build_formula(eq, n, k, EncodeOptions { optional, symmetry }).expect("formula builds")
}

/// Three-variable equations with small nonzero coefficients.
pub fn small_equation() -> impl Strategy<Value = LinearEquation> {
    let coeff = prop_oneof![-6i64..=-1, 1i64..=6];
    [coeff.clone(), coeff.clone(), coeff].prop_filter_map("valid equation", |c| LinearEquation::new(c.to_vec()).ok())
}

/// Truncating `F_n` to `m` gives exactly `F_m`, with or without optional
/// clauses, and with symmetry clauses once `m` covers the anchor.
pub fn truncation_matches_rebuild(eq: &LinearEquation, n: u64, m: u64, k: u32) -> Result<(), TestCaseError> {
    for optional in [false, true] {
        let cut = truncate(&formula(eq, n, k, optional, false), m).unwrap();
        prop_assert_eq!(cut.fingerprint(), formula(eq, m, k, optional, false).fingerprint());
    }
    let anchored = symmetry_anchor(eq, m).is_some_and(|a| a.first.max(a.second) <= m)
        && symmetry_anchor(eq, n) == symmetry_anchor(eq, m);
    if anchored {
        let cut = truncate(&formula(eq, n, k, true, true), m).unwrap();
        prop_assert_eq!(cut.fingerprint(), formula(eq, m, k, true, true).fingerprint());
    }
    Ok(())
}

/// Dropping the at-most-one-color clauses does not change satisfiability,
/// and the decoded coloring is valid either way.
pub fn optional_clauses_invariant(eq: &LinearEquation, n: u64, k: u32) -> Result<(), TestCaseError> {
    let with = sat(&formula(eq, n, k, true, false));
    let without = sat(&formula(eq, n, k, false, false));
    prop_assert_eq!(with.is_some(), without.is_some());
    for model in [with, without].into_iter().flatten() {
        let coloring = decode_model(&signed_model(&model), n, k).unwrap();
        prop_assert!(verify_coloring(eq, &coloring).is_valid());
    }
    Ok(())
}

/// Symmetry clauses preserve satisfiability, which agrees with brute force.
pub fn symmetry_equisatisfiable(eq: &LinearEquation, n: u64, k: u32) -> Result<(), TestCaseError> {
    let expected = brute_colorable(coeffs3(eq), n, k);
    let plain = sat(&formula(eq, n, k, true, false));
    let broken = sat(&formula(eq, n, k, true, true));
    prop_assert_eq!(plain.is_some(), expected);
    prop_assert_eq!(broken.is_some(), expected);
    if let Some(model) = broken {
        let coloring = decode_model(&signed_model(&model), n, k).unwrap();
        prop_assert!(verify_coloring(eq, &coloring).is_valid());
    }
    Ok(())
}

/// Once `F_n` is unsatisfiable, every larger `F_n'` is too.
pub fn unsat_is_monotone(eq: &LinearEquation, k: u32, limit: u64) -> Result<(), TestCaseError> {
    let mut seen_unsat = None;
    for n in 1..=limit {
        let is_sat = sat(&formula(eq, n, k, true, false)).is_some();
        if let Some(first) = seen_unsat {
            prop_assert!(!is_sat, "F_{} unsatisfiable but F_{} satisfiable", first, n);
        } else if !is_sat {
            seen_unsat = Some(n);
        }
    }
    Ok(())
}

/// The four equations compared exhaustively against brute force.
pub const ORACLE_EQUATIONS: [&str; 4] = ["x+y=z", "x-y=2z", "2x+y=3z", "x+2y=4z"];

/// Every `F_n^k` with `n <= max_n`, `k <= max_k`, with and without symmetry
/// clauses, agrees with the exhaustive scan. Returns the number of formulas checked.
pub fn oracle_sweep(max_n: u64, max_k: u32) -> Result<usize, String> {
    let mut checked = 0;
    for text in ORACLE_EQUATIONS {
        let eq = rado::parse_equation(text).map_err(|e| e.to_string())?;
        for k in 1..=max_k {
            for n in 1..=max_n {
                let expected = brute_colorable(coeffs3(&eq), n, k);
                for symmetry in [false, true] {
                    let got = sat(&formula(&eq, n, k, true, symmetry));
                    if got.is_some() != expected {
                        return Err(format!("{text}, n = {n}, k = {k}, symmetry = {symmetry}: solver disagrees"));
                    }
                    if let Some(model) = got {
                        let c = decode_model(&signed_model(&model), n, k).map_err(|e| e.to_string())?;
                        if !verify_coloring(&eq, &c).is_valid() {
                            return Err(format!("{text}, n = {n}, k = {k}: decoded coloring invalid"));
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

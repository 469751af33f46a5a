//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report reads top to bottom.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};
use rado::coloring::{chi_aminus1_coloring, va_coloring, verify_coloring};
use rado::dor::{compute_dor, DerivationStep, DorConfig, DorValue};
use rado::encoder::{build_formula, CnfFormula, EncodeOptions};
use rado::search::{rado_number, InfinityRule, SearchConfig, SearchOutcome, SearchResult};
use rado::solver::{solve, BackendConfig, SolveStatus};
use rado::symbolic::{
    bounded_integer_polynomial, build_parametric_formula, find_polynomials, instantiate_and_check, shipped_family,
    ParametricFamily, ParametricFormula,
};
use rado::tables::{all_tables, Expected, Quantity};
use rado::{parse_equation, LinearEquation};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn eq(text: &str) -> Result<LinearEquation, String> {
    parse_equation(text).map_err(|e| format!("{text}: {e}"))
}

/// Runs the search, re-checks its certificates and returns it with its time.
fn timed_rado(e: &LinearEquation, k: u32) -> Result<(SearchOutcome, Duration), String> {
    let t = Instant::now();
    let out = rado_number(e, k, &SearchConfig::default()).map_err(|err| format!("{e}: {err}"))?;
    let took = t.elapsed();
    out.check_certificates().map_err(|err| format!("{e}, k = {k}: {err}"))?;
    Ok((out, took))
}

fn finite(out: &SearchOutcome) -> Result<u64, String> {
    out.value().ok_or_else(|| format!("{}: expected a finite value, got {:?}", out.equation, out.result))
}

fn schur_base_case() -> Check {
    let schur = eq("x+y=z")?;
    let (three, took) = timed_rado(&schur, 3)?;
    let v3 = finite(&three)?;
    ensure!(v3 == 14, "R_3(x+y=z) = {v3}, expected 14");
    ensure!(took < Duration::from_secs(5), "R_3(x+y=z) took {took:?}");
    let (two, _) = timed_rado(&schur, 2)?;
    let v2 = finite(&two)?;
    let brute = brute_rado([1, 1, -1], 2, 5);
    ensure!(brute == Some(5), "brute force over 2-colorings gives {brute:?}");
    ensure!(v2 == 5, "R_2(x+y=z) = {v2}, brute force 5");
    Ok(format!("R_3 = 14 in {:.2} s; R_2 = 5, equal to the scan over all 2-colorings", took.as_secs_f64()))
}

fn difference_column() -> Check {
    let mut parts = Vec::new();
    for (b, expected) in [(2u64, 43u64), (3, 94), (4, 173), (5, 286)] {
        let m = b + 2;
        ensure!(m * m * m - m * m - m - 1 == expected, "closed form at m = {m} is not {expected}");
        let (out, took) = timed_rado(&eq(&format!("x-y={b}z"))?, 3)?;
        let v = finite(&out)?;
        ensure!(v == expected, "R_3(x-y={b}z) = {v}, expected {expected}");
        ensure!(took < Duration::from_secs(60), "x-y={b}z took {took:?}");
        parts.push(format!("b={b}: {v}"));
    }
    Ok(format!("{}; each equals m^3-m^2-m-1 at m = b+2", parts.join(", ")))
}

fn cube_family() -> Check {
    let mut parts = Vec::new();
    for a in [3u64, 4, 5] {
        let e = LinearEquation::difference(a as i64, 1).map_err(|err| err.to_string())?;
        let (out, took) = timed_rado(&e, 3)?;
        let v = finite(&out)?;
        ensure!(v == a.pow(3), "R_3({e}) = {v}, expected {}", a.pow(3));
        ensure!(took < Duration::from_secs(120), "{e} took {took:?}");
        let lower = va_coloring(a, 3, a.pow(3) - 1).map_err(|err| err.to_string())?;
        ensure!(verify_coloring(&e, &lower).is_valid(), "v_{a} coloring fails on [1, {}]", a.pow(3) - 1);
        parts.push(format!("a={a}: {v}"));
    }
    Ok(format!("{}; the v_a mod 3 coloring of [1, a^3 - 1] verifies", parts.join(", ")))
}

fn sum_cells() -> Check {
    let (out, took) = timed_rado(&eq("2(x+y)=3z")?, 3)?;
    let v = finite(&out)?;
    ensure!(v == 54, "R_3(2(x+y)=3z) = {v}, expected 54");
    ensure!(took < Duration::from_secs(60), "2(x+y)=3z took {took:?}");
    for (text, rule) in [("x+y=4z", InfinityRule::LogContracting), ("4(x+y)=z", InfinityRule::LogExpanding)] {
        let e = eq(text)?;
        let (out, took) = timed_rado(&e, 3)?;
        let SearchResult::Infinite { justification } = &out.result else {
            return Err(format!("R_3({text}) = {:?}, expected infinity", out.result));
        };
        ensure!(justification.rule == rule, "{text}: rule {:?}, expected {rule:?}", justification.rule);
        ensure!(took < Duration::from_secs(60), "{text} took {took:?}");
        let c = justification.coloring(&e, 2000).map_err(|err| err.to_string())?;
        ensure!(verify_coloring(&e, &c).is_valid(), "{text}: rule coloring fails on [1, 2000]");
    }
    Ok("2(x+y)=3z = 54; x+y=4z = inf (contracting log coloring); 4(x+y)=z = inf (expanding log coloring); both colorings verify on [1, 2000]".into())
}

fn four_colors() -> Check {
    let (out, took) = timed_rado(&eq("x-y=z")?, 4)?;
    let v = finite(&out)?;
    ensure!(v == 45, "R_4(x-y=z) = {v}, expected 45");
    let rec = out.upper_certificate.as_ref().ok_or("no UNSAT record")?;
    ensure!(rec.options.symmetry, "UNSAT record at 45 was built without symmetry clauses");
    ensure!(took < Duration::from_secs(600), "took {took:?}");
    Ok(format!("R_4 = 45 in {:.1} s with symmetry clauses", took.as_secs_f64()))
}

fn dor_grid() -> Check {
    let tables: Vec<_> = all_tables().into_iter().filter(|t| t.quantity == Quantity::Dor).collect();
    let mut cells = 0;
    let t = Instant::now();
    for table in &tables {
        for entry in table.entries() {
            let e = table.equation(&entry);
            let start = Instant::now();
            let r = compute_dor(&e, &DorConfig::default()).map_err(|err| format!("{e}: {err}"))?;
            let took = start.elapsed();
            let got = match r.value {
                DorValue::Finite { value } => Expected::Finite(value as u64),
                DorValue::Infinite => Expected::Infinite,
                ref other => return Err(format!("dor({e}) = {other:?}, expected {:?}", entry.expected)),
            };
            ensure!(got == entry.expected, "dor({e}) = {got:?}, expected {:?}", entry.expected);
            for s in &r.searches {
                s.check_certificates().map_err(|err| format!("dor({e}), k = {}: {err}", s.k))?;
            }
            let large = r.derivation.iter().any(|d| {
                matches!(d, DerivationStep::RadoNumber { result: SearchResult::Finite { value }, .. } if *value > 300)
            });
            let limit = Duration::from_secs(if large { 1800 } else { 120 });
            ensure!(took < limit, "dor({e}) took {took:?}");
            cells += 1;
        }
    }
    ensure!(cells == 125, "{cells} cells, expected 125");
    Ok(format!("{cells} cells across {} tables in {:.0} s", tables.len(), t.elapsed().as_secs_f64()))
}

/// Generates the parametric formula from the family's seeds and checks it is
/// unsatisfiable and that every atom is certified on the whole domain.
fn prove_family(name: &str, limit: Duration) -> Result<(ParametricFamily, ParametricFormula, Duration), String> {
    let fam = shipped_family(name).ok_or_else(|| format!("no family {name}"))?;
    let t = Instant::now();
    let sets = find_polynomials(&fam, &fam.s0, &fam.g0, fam.max_iterations).map_err(|e| e.to_string())?;
    let pf = build_parametric_formula(&fam, 3, &sets.atoms, &sets.tuples).map_err(|e| e.to_string())?;
    let status = pf.solve(&BackendConfig::default()).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    ensure!(status == SolveStatus::Unsat, "{name}: parametric formula is {status:?}");
    ensure!(took < limit, "{name}: took {took:?}");
    for p in &pf.atoms {
        let cert = bounded_integer_polynomial(p, &fam).map_err(|e| e.to_string())?;
        ensure!(cert.is_verified(), "{name}: atom {} not certified: {cert:?}", fam.show(p));
    }
    Ok((fam, pf, took))
}

fn ground_formula(pf: &ParametricFormula, fam: &ParametricFamily, values: &[i64]) -> Result<CnfFormula, String> {
    let n = fam.bound.eval(values) as u32;
    let clauses = pf.concrete_clauses(fam, values).map_err(|e| e.to_string())?;
    CnfFormula::from_clauses(n * pf.k, clauses).map_err(|e| e.to_string())
}

fn is_unsat(f: &CnfFormula) -> Result<bool, String> {
    Ok(solve(f, &BackendConfig::default()).map_err(|e| e.to_string())?.is_unsat())
}

fn m_family() -> Check {
    let (fam, pf, took) = prove_family("x_minus_y_eq_m_minus_2_z", Duration::from_secs(60))?;
    ensure!(fam.bound == fam.parse("m^3-m^2-m-1").map_err(|e| e.to_string())?, "unexpected bound");
    ensure!(fam.contains(&[3]) && !fam.contains(&[2]), "domain is not m >= 3");
    for m in 3..=40 {
        instantiate_and_check(&pf, &fam, &[m]).map_err(|e| format!("m = {m}: {e}"))?;
    }
    let concrete = fam.instantiate(&[10]).map_err(|e| e.to_string())?;
    let f889 = build_formula(&concrete, 889, 3, EncodeOptions::default()).map_err(|e| e.to_string())?;
    let known: HashSet<Vec<i32>> = f889
        .clauses()
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_unstable();
            c
        })
        .collect();
    let ground = pf.concrete_negative_clauses(&fam, &[10]).map_err(|e| e.to_string())?;
    let missing = ground.iter().filter(|c| !known.contains(*c)).count();
    ensure!(missing == 0, "{missing} of {} ground clauses at m = 10 are not in F_889", ground.len());
    ensure!(is_unsat(&f889)?, "F_889(x-y=8z) is satisfiable");
    let g16 = ground_formula(&pf, &fam, &[16])?;
    ensure!(fam.bound.eval(&[16]) == 3823, "bound at m = 16 is not 3823");
    ensure!(is_unsat(&g16)?, "ground formula at m = 16 is satisfiable");
    Ok(format!(
        "{} atoms, {} tuples, UNSAT in {:.2} s; atoms certified for m >= 3; {} ground clauses at m = 10 all in F_889, which is UNSAT; m = 16 ground formula (n = 3823) UNSAT",
        pf.atoms.len(),
        pf.tuples.len(),
        took.as_secs_f64(),
        ground.len()
    ))
}

fn a_minus_one_family() -> Check {
    let (fam, pf, took) = prove_family("a_x_minus_y_eq_a_minus_1_z", Duration::from_secs(600))?;
    ensure!(fam.max_iterations == 3, "max_iterations = {}", fam.max_iterations);
    ensure!(fam.bound == fam.parse("a^3+(a-1)^2").map_err(|e| e.to_string())?, "unexpected bound");
    ensure!(fam.contains(&[16]) && !fam.contains(&[15]), "domain is not a >= 16");
    for a in 16..=40 {
        instantiate_and_check(&pf, &fam, &[a]).map_err(|e| format!("a = {a}: {e}"))?;
    }
    for a in 3u64..=8 {
        let e = LinearEquation::difference(a as i64, a as i64 - 1).map_err(|err| err.to_string())?;
        let c = chi_aminus1_coloring(a).map_err(|err| err.to_string())?;
        let n = a.pow(3) + (a - 1).pow(2) - 1;
        ensure!(c.n() as u64 == n, "a = {a}: coloring covers [1, {}], expected [1, {n}]", c.n());
        ensure!(verify_coloring(&e, &c).is_valid(), "a = {a}: three-class coloring has a monochromatic solution");
    }
    Ok(format!(
        "{} atoms, {} tuples, UNSAT in {:.2} s; atoms certified for a >= 16; three-class coloring of [1, a^3+(a-1)^2-1] valid for a = 3..8",
        pf.atoms.len(),
        pf.tuples.len(),
        took.as_secs_f64()
    ))
}

fn oracle_equivalence() -> Check {
    let checked = oracle_sweep(12, 3)?;
    Ok(format!("{checked} formulas (n <= 12, k <= 3, with and without symmetry) agree with the k^n scan"))
}

fn run_property<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng).run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn property_suite() -> Check {
    const CASES: u32 = 256;
    run_property("truncation", CASES, (small_equation(), 2u64..=14, 1u32..=3, 1u64..=13), |(e, n, k, cut)| {
        truncation_matches_rebuild(&e, n, cut.min(n - 1), k)
    })?;
    run_property("optional clauses", CASES, (small_equation(), 1u64..=12, 1u32..=3), |(e, n, k)| {
        optional_clauses_invariant(&e, n, k)
    })?;
    run_property("symmetry", CASES, (small_equation(), 1u64..=10, 1u32..=3), |(e, n, k)| {
        symmetry_equisatisfiable(&e, n, k)
    })?;
    run_property("monotone", CASES, (small_equation(), 1u32..=3), |(e, k)| unsat_is_monotone(&e, k, 12))?;
    Ok(format!(
        "truncation, optional-clause invariance, symmetry vs brute force, decoded models, monotone UNSAT: {CASES} cases each"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("Schur base case", schur_base_case),
        ("x-y=bz column", difference_column),
        ("a(x-y)=z cube family", cube_family),
        ("a(x+y)=bz finite and infinite cells", sum_cells),
        ("four colors with symmetry breaking", four_colors),
        ("degree of regularity grid", dor_grid),
        ("parametric proof for x-y=(m-2)z", m_family),
        ("parametric proof for a(x-y)=(a-1)z", a_minus_one_family),
        ("encoding oracle equivalence", oracle_equivalence),
        ("property suite", property_suite),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.1} s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.1} s]: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use rado::coloring::{verify_coloring, Coloring, Verification};
use rado::dor::{compute_dor, DorConfig, DorValue};
use rado::encoder::{build_formula, emit_dimacs, parse_dimacs, write_formula_streaming, EncodeOptions};
use rado::search::{rado_number, InfinityJustification, SearchConfig, SearchResult, UnsatRecord};
use rado::solver::{solve as run_solver, BackendConfig, BackendKind, SolveStatus, EXTERNAL_SOLVER_ENV};
use rado::symbolic::{
    build_parametric_formula, find_polynomials, instantiate_and_check, shipped_family, ParametricFamily, ProofBundle,
    SHIPPED_FAMILIES,
};
use rado::tables::{all_tables, check_table_entry, conflict_for, table as find_table, Expected, Quantity};
use rado::{parse_equation, LinearEquation};
use serde::Serialize;
use serde_json::json;

use crate::manifest::{artifact_dir, Recorder};
use crate::{BackendArgs, Outcome};

fn backend_config(args: &BackendArgs) -> Result<BackendConfig> {
    let kind = if args.backend == "external" {
        let path = std::env::var(EXTERNAL_SOLVER_ENV)
            .map_err(|_| anyhow!("--backend external needs ${EXTERNAL_SOLVER_ENV} to name a solver"))?;
        BackendKind::External { path: path.into(), args: Vec::new() }
    } else {
        BackendKind::parse(&args.backend).ok_or_else(|| anyhow!("unknown backend `{}`", args.backend))?
    };
    let time_budget = args.budget.map(duration).transpose()?;
    Ok(BackendConfig { kind, time_budget, seed: args.seed, ..Default::default() })
}

fn duration(secs: f64) -> Result<Duration> {
    if !(secs > 0.0 && secs.is_finite()) {
        bail!("budget must be a positive number of seconds, got {secs}");
    }
    Ok(Duration::from_secs_f64(secs))
}

fn equation(text: &str) -> Result<LinearEquation> {
    parse_equation(text).with_context(|| format!("parsing equation `{text}`"))
}

/// Compares a computed value with an `--expect` string (`inf` or an integer).
fn matches_expect(expect: Option<&str>, value: Option<u64>, infinite: bool) -> Result<bool> {
    match expect.map(str::trim) {
        None => Ok(true),
        Some("inf" | "infinity" | "∞") => Ok(infinite),
        Some(s) => {
            let want: u64 = s.parse().with_context(|| format!("bad --expect value `{s}`"))?;
            Ok(value == Some(want))
        }
    }
}

#[derive(Serialize)]
struct ComputeResult {
    equation: String,
    k: u32,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    justification: Option<InfinityJustification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coloring_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_certificate: Option<UnsatRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cnf_file: Option<PathBuf>,
    certificates_checked: bool,
    stats: ComputeStats,
}

#[derive(Serialize)]
struct ComputeStats {
    probes: usize,
    conflicts: u64,
    elapsed_secs: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn compute(
    text: &str,
    k: u32,
    lower: Option<u64>,
    upper: Option<u64>,
    max_n: Option<u64>,
    symmetry: Option<bool>,
    emit_cnf: bool,
    expect: Option<&str>,
    out: &Path,
    args: &BackendArgs,
) -> Result<Outcome> {
    let eq = equation(text)?;
    let mut rec = Recorder::new("compute");
    let mut backend = backend_config(args)?;
    let mut cfg = SearchConfig { budget: backend.time_budget.take(), symmetry, ..Default::default() };
    cfg.backend = backend;
    if let Some(l) = lower {
        cfg.lower0 = l;
    }
    if let Some(u) = upper {
        cfg.upper0 = u;
    }
    if let Some(m) = max_n {
        cfg.max_n = m;
    }
    let outcome = rado_number(&eq, k, &cfg)?;
    let checked = outcome.check_certificates();
    if let Err(e) = &checked {
        eprintln!("certificate check failed: {e}");
    }
    let dir = artifact_dir(out);
    let coloring_file = match &outcome.lower_certificate {
        Some(c) if c.n() > 0 => Some(rec.store(&dir, "lower_certificate", "coloring", "json", c.to_json().as_bytes())?),
        _ => None,
    };
    let cnf_file = match (&outcome.upper_certificate, emit_cnf) {
        (Some(u), true) => {
            let f = build_formula(&eq, u.n, k, u.options)?;
            let mut buf = Vec::new();
            emit_dimacs(&f, &[format!("F_{}^{k}({eq})", u.n)], &mut buf)?;
            Some(rec.store(&dir, "upper_certificate", "unsat", "cnf", &buf)?)
        }
        _ => None,
    };
    let (status, value, lo, hi, justification) = match &outcome.result {
        SearchResult::Finite { value } => ("finite", Some(*value), None, None, None),
        SearchResult::Infinite { justification } => ("infinite", None, None, None, Some(justification.clone())),
        SearchResult::Unknown { lower, upper } => ("unknown", None, Some(*lower), *upper, None),
    };
    let result = ComputeResult {
        equation: eq.to_string(),
        k,
        status,
        value,
        lower: lo,
        upper: hi,
        justification,
        coloring_file,
        upper_certificate: outcome.upper_certificate.clone(),
        cnf_file,
        certificates_checked: checked.is_ok(),
        stats: ComputeStats {
            probes: outcome.probes.len(),
            conflicts: outcome.probes.iter().map(|p| p.stats.conflicts).sum(),
            elapsed_secs: outcome.elapsed.as_secs_f64(),
        },
    };
    match &outcome.result {
        SearchResult::Finite { value } => println!("R_{k}({eq}) = {value}"),
        SearchResult::Infinite { justification } => {
            println!("R_{k}({eq}) = inf ({:?}: {})", justification.rule, justification.instance)
        }
        SearchResult::Unknown { lower, upper } => println!("R_{k}({eq}) unknown: > {lower}, upper {upper:?}"),
    }
    rec.finish(out, &result, Some(eq.to_string()), json!({"k": k, "search": search_params(&cfg)}), cfg.backend.kind.id())?;
    if status == "unknown" {
        return Ok(Outcome::Inconclusive);
    }
    let ok = checked.is_ok() && matches_expect(expect, value, status == "infinite")?;
    Ok(if ok { Outcome::Done } else { Outcome::CheckFailed })
}

fn search_params(cfg: &SearchConfig) -> serde_json::Value {
    json!({
        "lower0": cfg.lower0,
        "upper0": cfg.upper0,
        "growth": cfg.growth,
        "max_n": cfg.max_n,
        "symmetry": cfg.symmetry,
        "budget_secs": cfg.budget.map(|d| d.as_secs_f64()),
        "seed": cfg.backend.seed,
    })
}

pub fn dor(text: &str, k_cap: u32, expect: Option<&str>, out: &Path, args: &BackendArgs) -> Result<Outcome> {
    let eq = equation(text)?;
    let rec = Recorder::new("dor");
    let mut backend = backend_config(args)?;
    let mut search = SearchConfig { budget: backend.time_budget.take(), ..Default::default() };
    search.backend = backend;
    let cfg = DorConfig { search, k_cap };
    let r = compute_dor(&eq, &cfg)?;
    let bad = r.searches.iter().find_map(|s| s.check_certificates().err());
    if let Some(e) = &bad {
        eprintln!("certificate check failed: {e}");
    }
    let (value, infinite, inconclusive) = match r.value {
        DorValue::Finite { value } => (Some(value as u64), false, false),
        DorValue::Infinite => (None, true, false),
        DorValue::Interval { .. } => (None, false, true),
    };
    match &r.value {
        DorValue::Finite { value } => println!("dor({eq}) = {value}"),
        DorValue::Infinite => println!("dor({eq}) = inf"),
        DorValue::Interval { lo, hi } => println!("dor({eq}) in [{lo}, {}]", hi.map_or("inf".into(), |h| h.to_string())),
    }
    rec.finish(out, &r, Some(eq.to_string()), json!({"k_cap": k_cap, "search": search_params(&cfg.search)}), cfg.search.backend.kind.id())?;
    if inconclusive {
        return Ok(Outcome::Inconclusive);
    }
    let ok = bad.is_none() && matches_expect(expect, value, infinite)?;
    Ok(if ok { Outcome::Done } else { Outcome::CheckFailed })
}

pub fn gen_cnf(text: &str, n: u64, k: u32, optional: bool, symmetry: bool, out: Option<&Path>) -> Result<Outcome> {
    let eq = equation(text)?;
    let opts = EncodeOptions { optional, symmetry };
    let groups = match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            let g = write_formula_streaming(&eq, n, k, opts, Some(&mut w))?;
            w.flush()?;
            g
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            let g = write_formula_streaming(&eq, n, k, opts, Some(&mut w))?;
            w.flush()?;
            g
        }
    };
    eprintln!(
        "positive {} negative {} optional {} symmetry {}",
        groups.positive, groups.negative, groups.optional, groups.symmetry
    );
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct SolveResult {
    cnf: PathBuf,
    cnf_sha256: String,
    status: SolveStatus,
    backend: String,
    wall_secs: f64,
    conflicts: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<Vec<i32>>,
}

pub fn solve(cnf: &Path, expect: Option<&str>, out: Option<&Path>, args: &BackendArgs) -> Result<Outcome> {
    let rec = Recorder::new("solve");
    let bytes = std::fs::read(cnf).with_context(|| format!("reading {}", cnf.display()))?;
    let f = parse_dimacs(BufReader::new(bytes.as_slice()))?;
    let cfg = backend_config(args)?;
    let v = run_solver(&f, &cfg)?;
    let model = v.model.as_ref().map(|m| rado::encoder::signed_model(m));
    println!(
        "s {}",
        match v.status {
            SolveStatus::Sat => "SATISFIABLE",
            SolveStatus::Unsat => "UNSATISFIABLE",
            SolveStatus::Unknown => "UNKNOWN",
        }
    );
    if let Some(m) = &model {
        let lits: Vec<String> = m.iter().map(i32::to_string).collect();
        println!("v {} 0", lits.join(" "));
    }
    if let Some(out) = out {
        let result = SolveResult {
            cnf: cnf.to_path_buf(),
            cnf_sha256: crate::manifest::sha256_hex(&bytes),
            status: v.status,
            backend: v.backend.clone(),
            wall_secs: v.wall_time.as_secs_f64(),
            conflicts: v.stats.conflicts,
            model,
        };
        rec.finish(out, &result, Some(cnf.display().to_string()), json!({"seed": cfg.seed}), cfg.kind.id())?;
    }
    if v.status == SolveStatus::Unknown {
        return Ok(Outcome::Inconclusive);
    }
    let ok = match expect.map(|s| s.to_ascii_lowercase()) {
        None => true,
        Some(s) if s == "sat" => v.status == SolveStatus::Sat,
        Some(s) if s == "unsat" => v.status == SolveStatus::Unsat,
        Some(s) => bail!("--expect must be `sat` or `unsat`, got `{s}`"),
    };
    Ok(if ok { Outcome::Done } else { Outcome::CheckFailed })
}

pub fn verify(text: &str, coloring: &Path, expect: &str) -> Result<Outcome> {
    let eq = equation(text)?;
    let raw = std::fs::read_to_string(coloring).with_context(|| format!("reading {}", coloring.display()))?;
    let c = Coloring::from_json(&raw).with_context(|| format!("parsing {}", coloring.display()))?;
    let v = verify_coloring(&eq, &c);
    match &v {
        Verification::Valid => println!("Valid: no monochromatic solution of {eq} in [1, {}]", c.n()),
        Verification::Witness(w) => println!("Invalid: {:?} has color {}", w.tuple.values, w.color),
    }
    let want_valid = match expect {
        "valid" => true,
        "invalid" => false,
        s => bail!("--expect must be `valid` or `invalid`, got `{s}`"),
    };
    Ok(if v.is_valid() == want_valid { Outcome::Done } else { Outcome::CheckFailed })
}

#[allow(clippy::too_many_arguments)]
pub fn family(
    name: Option<&str>,
    spec: Option<&Path>,
    k: u32,
    max_iterations: Option<usize>,
    values: &[String],
    emit_cnf: bool,
    out: &Path,
    args: &BackendArgs,
) -> Result<Outcome> {
    let mut rec = Recorder::new("family");
    let fam = match (name, spec) {
        (Some(n), None) => shipped_family(n).ok_or_else(|| {
            let names: Vec<&str> = SHIPPED_FAMILIES.iter().map(|(n, _)| *n).collect();
            anyhow!("no shipped family `{n}`; available: {}", names.join(", "))
        })?,
        (None, Some(p)) => ParametricFamily::from_json(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        _ => bail!("give exactly one of --name or --spec"),
    };
    let iterations = max_iterations.unwrap_or(fam.max_iterations);
    let sets = find_polynomials(&fam, &fam.s0, &fam.g0, iterations)?;
    let pf = build_parametric_formula(&fam, k, &sets.atoms, &sets.tuples)?;
    let cfg = backend_config(args)?;
    let status = pf.solve(&cfg)?;
    println!(
        "{}: {} atoms, {} solutions, {} clauses, {:?}",
        fam.name,
        pf.atoms.len(),
        pf.tuples.len(),
        pf.cnf.clause_count(),
        status
    );
    let mut reports = Vec::new();
    let mut failed = false;
    for v in values {
        let vals: Vec<i64> = v
            .split(',')
            .map(|s| s.trim().parse().with_context(|| format!("bad parameter value `{s}`")))
            .collect::<Result<_>>()?;
        match instantiate_and_check(&pf, &fam, &vals) {
            Ok(r) => {
                println!("at {vals:?}: atoms within [1, {}], R_{k}({}) <= {}", r.bound, r.equation, r.bound);
                reports.push(r);
            }
            Err(e) => {
                println!("at {vals:?}: {e}");
                failed = true;
            }
        }
    }
    if emit_cnf {
        let mut buf = Vec::new();
        emit_dimacs(&pf.cnf, &[format!("parametric formula for {}", fam.name)], &mut buf)?;
        rec.store(&artifact_dir(out), "ground_formula", "parametric", "cnf", &buf)?;
    }
    let bundle = ProofBundle::new(&fam, &pf, status, reports);
    rec.finish(out, &bundle, Some(fam.name.clone()), json!({"k": k, "max_iterations": iterations}), cfg.kind.id())?;
    Ok(match status {
        SolveStatus::Unknown => Outcome::Inconclusive,
        SolveStatus::Sat => Outcome::CheckFailed,
        SolveStatus::Unsat if failed => Outcome::CheckFailed,
        SolveStatus::Unsat => Outcome::Done,
    })
}

#[derive(Serialize)]
struct CellReport {
    table: &'static str,
    a: i64,
    b: i64,
    c: i64,
    equation: String,
    expected: Expected,
    checked_against: Expected,
    computed: String,
    passed: bool,
    seconds: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    message: String,
}

#[derive(Serialize)]
struct TablesReport {
    max_n: u64,
    passed: usize,
    failed: usize,
    skipped: usize,
    cells: Vec<CellReport>,
}

pub fn tables(
    ids: &[String],
    list: bool,
    max_n: u64,
    include_dor: bool,
    jobs: Option<usize>,
    out: &Path,
    args: &BackendArgs,
) -> Result<Outcome> {
    let all = all_tables();
    if list {
        for t in &all {
            println!("{:<18} {:>4} cells  {:?} {:?}", t.id, t.entries().len(), t.family, t.quantity);
        }
        return Ok(Outcome::Done);
    }
    for id in ids {
        if !all.iter().any(|t| t.id == id) {
            bail!("unknown table `{id}` (see --list)");
        }
    }
    let rec = Recorder::new("tables");
    let mut backend = backend_config(args)?;
    let mut cfg = SearchConfig { budget: backend.time_budget.take(), max_n: max_n.max(64) * 4, ..Default::default() };
    cfg.backend = backend;
    let selected: Vec<_> = all
        .iter()
        .filter(|t| if ids.is_empty() { include_dor || t.quantity != Quantity::Dor } else { ids.iter().any(|i| i == t.id) })
        .collect();
    let mut work = Vec::new();
    let mut skipped = 0;
    for t in &selected {
        for e in t.entries() {
            let target = conflict_for(t.id, e.a, e.b)
                .and_then(|c| find_table(c.other_table).and_then(|o| o.entry(c.other_a, c.other_b)))
                .map_or(e.expected, |o| o.expected);
            let in_cutoff = match (t.quantity, target) {
                (Quantity::Dor, _) => true,
                (_, Expected::Finite(v)) => v <= max_n,
                (_, Expected::Infinite) => true,
                (_, Expected::AtLeast(_)) => false,
            };
            if in_cutoff {
                work.push((*t, e));
            } else {
                skipped += 1;
            }
        }
    }
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((t, e)) = work.get(i) else { break };
                let start = std::time::Instant::now();
                let report = match check_table_entry(t, e.a, e.b, &cfg) {
                    Ok(r) => CellReport {
                        table: t.id,
                        a: e.a,
                        b: e.b,
                        c: e.c,
                        equation: r.equation,
                        expected: e.expected,
                        checked_against: r.checked_against,
                        computed: r.computed,
                        passed: r.passed,
                        seconds: start.elapsed().as_secs_f64(),
                        message: r.message,
                    },
                    Err(err) => CellReport {
                        table: t.id,
                        a: e.a,
                        b: e.b,
                        c: e.c,
                        equation: t.equation(e).to_string(),
                        expected: e.expected,
                        checked_against: e.expected,
                        computed: String::new(),
                        passed: false,
                        seconds: start.elapsed().as_secs_f64(),
                        message: err.to_string(),
                    },
                };
                println!(
                    "{} {:<16} {:<18} expected {:?} got {} ({:.2}s) {}",
                    if report.passed { "PASS" } else { "FAIL" },
                    report.table,
                    report.equation,
                    report.checked_against,
                    report.computed,
                    report.seconds,
                    report.message
                );
                results.lock().expect("no panics while holding the lock").push((i, report));
            });
        }
    });
    let mut cells = results.into_inner().expect("workers finished");
    cells.sort_by_key(|(i, _)| *i);
    let cells: Vec<CellReport> = cells.into_iter().map(|(_, c)| c).collect();
    let failed = cells.iter().filter(|c| !c.passed).count();
    let report = TablesReport { max_n, passed: cells.len() - failed, failed, skipped, cells };
    println!("{} passed, {} failed, {} skipped (expected value above {max_n})", report.passed, report.failed, report.skipped);
    rec.finish(out, &report, None, json!({"max_n": max_n, "tables": ids, "dor": include_dor}), cfg.backend.kind.id())?;
    Ok(if failed == 0 { Outcome::Done } else { Outcome::CheckFailed })
}

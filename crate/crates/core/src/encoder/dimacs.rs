use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{negative_clause, symmetry_clauses, ClauseGroups, CnfFormula, EncodeError, EncodeOptions, VarMap};
use crate::equation::LinearEquation;

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

pub(super) fn write_body<W: Write>(f: &CnfFormula, w: &mut W) -> io::Result<()> {
    writeln!(w, "p cnf {} {}", f.var_count(), f.clause_count())?;
    for c in f.clauses() {
        write_clause(w, c)?;
    }
    Ok(())
}

fn write_clause<W: Write>(w: &mut W, c: &[i32]) -> io::Result<()> {
    for l in c {
        write!(w, "{l} ")?;
    }
    w.write_all(b"0\n")
}

/// Writes `c` comment lines, the header and one clause per line.
pub fn emit_dimacs<W: Write>(f: &CnfFormula, comments: &[String], w: &mut W) -> io::Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(w, "c {line}")?;
        }
    }
    write_body(f, w)
}

/// Parses DIMACS CNF. Comment lines are skipped; a clause may span lines.
pub fn parse_dimacs<R: BufRead>(r: R) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut cur = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('c') || t.starts_with('%') {
            continue;
        }
        let syntax = |msg: String| DimacsError::Syntax { line: i + 1, msg };
        if t.starts_with('p') {
            let parts: Vec<&str> = t.split_whitespace().collect();
            if header.is_some() || parts.len() != 4 || parts[1] != "cnf" {
                return Err(syntax(format!("bad header `{t}`")));
            }
            let v = parts[2].parse().map_err(|_| syntax("bad variable count".into()))?;
            let c = parts[3].parse().map_err(|_| syntax("bad clause count".into()))?;
            header = Some((v, c));
            continue;
        }
        let Some((vars, _)) = header else {
            return Err(DimacsError::MissingHeader);
        };
        for tok in t.split_whitespace() {
            let l: i64 = tok.parse().map_err(|_| syntax(format!("bad literal `{tok}`")))?;
            if l == 0 {
                if cur.is_empty() {
                    return Err(syntax("empty clause".into()));
                }
                clauses.push(std::mem::take(&mut cur));
            } else if l.unsigned_abs() > vars as u64 {
                return Err(syntax(format!("literal {l} exceeds {vars} variables")));
            } else {
                cur.push(l as i32);
            }
        }
    }
    let (vars, declared) = header.ok_or(DimacsError::MissingHeader)?;
    if !cur.is_empty() {
        clauses.push(cur);
    }
    if clauses.len() != declared {
        return Err(DimacsError::ClauseCount { declared, found: clauses.len() });
    }
    Ok(CnfFormula::from_clauses(vars, clauses)?)
}

/// Writes `F_n^k(E)` as DIMACS without materializing it: one counting pass
/// over the solutions, then a writing pass. With `out = None` only the
/// counting pass runs. Returns the group sizes.
pub fn write_formula_streaming(
    eq: &LinearEquation,
    n: u64,
    k: u32,
    options: EncodeOptions,
    out: Option<&mut dyn Write>,
) -> Result<ClauseGroups, DimacsError> {
    if n == 0 || k == 0 {
        return Err(EncodeError::Parameter(format!("n = {n}, k = {k} (both must be positive)")).into());
    }
    let map = VarMap::new(n, k)?;
    let mut solutions = 0usize;
    eq.visit_solutions(n, |_| solutions += 1);
    let sym = if options.symmetry { symmetry_clauses(eq, n, k)? } else { Vec::new() };
    let groups = ClauseGroups {
        positive: n as usize,
        negative: solutions * k as usize,
        optional: if options.optional { n as usize * (k as usize * (k as usize - 1) / 2) } else { 0 },
        symmetry: sym.len(),
    };
    let Some(out) = out else {
        return Ok(groups);
    };
    let mut w = io::BufWriter::new(out);
    writeln!(w, "p cnf {} {}", map.var_count(), groups.total())?;
    let mut clause = Vec::new();
    for j in 1..=n {
        clause.clear();
        clause.extend((1..=k).map(|i| map.var(j, i)));
        write_clause(&mut w, &clause)?;
    }
    let mut err = None;
    eq.visit_solutions(n, |s| {
        for i in 1..=k {
            negative_clause(&map, s, i, &mut clause);
            if let Err(e) = write_clause(&mut w, &clause) {
                err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    if options.optional {
        for j in 1..=n {
            for i1 in 1..=k {
                for i2 in i1 + 1..=k {
                    write_clause(&mut w, &[-map.var(j, i1), -map.var(j, i2)])?;
                }
            }
        }
    }
    for c in &sym {
        write_clause(&mut w, c.literals())?;
    }
    w.flush()?;
    Ok(groups)
}

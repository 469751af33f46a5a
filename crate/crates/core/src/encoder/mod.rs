//! The propositional formula `F_n^k(E)`: variable `v_j^i` is true iff the
//! integer `j` gets color `i`.
//!
//! Clauses are stored group by group in a fixed order: positive (every
//! integer has a color), negative (no solution is monochromatic, in solution
//! enumeration order, one clause per color), optional (at most one color per
//! integer) and finally symmetry-breaking clauses. Because every group is
//! ordered by the integers it mentions, deleting all clauses that mention an
//! integer above `m` yields exactly `F_m^k(E)`, clause for clause.

mod dimacs;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coloring::{Coloring, ColoringError};
use crate::equation::{LinearEquation, SolutionTuple};

pub use dimacs::{emit_dimacs, parse_dimacs, write_formula_streaming, DimacsError};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("n * k = {0} exceeds the DIMACS variable range")]
    VariableOverflow(u128),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("empty clause")]
    EmptyClause,
    #[error("model does not assign variable {0}")]
    PartialModel(u32),
    #[error("integer {0} has no true color variable")]
    Uncolored(u64),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
}

/// The bijection `(j, i) -> (j - 1) k + i` between `[1, n] x [1, k]` and
/// `[1, nk]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarMap {
    pub n: u64,
    pub k: u32,
}

impl VarMap {
    pub fn new(n: u64, k: u32) -> Result<Self, EncodeError> {
        let total = n as u128 * k as u128;
        if total > i32::MAX as u128 {
            return Err(EncodeError::VariableOverflow(total));
        }
        Ok(Self { n, k })
    }

    #[inline]
    pub fn var(&self, j: u64, color: u32) -> i32 {
        debug_assert!((1..=self.n).contains(&j) && (1..=self.k).contains(&color));
        ((j - 1) * self.k as u64 + color as u64) as i32
    }

    /// Inverse of [`var`](Self::var).
    pub fn integer_and_color(&self, var: i32) -> (u64, u32) {
        let v = var.unsigned_abs() as u64 - 1;
        (v / self.k as u64 + 1, (v % self.k as u64) as u32 + 1)
    }

    pub fn var_count(&self) -> u32 {
        (self.n * self.k as u64) as u32
    }
}

/// A disjunction of DIMACS literals with duplicates removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause(Vec<i32>);

impl Clause {
    pub fn new(lits: impl IntoIterator<Item = i32>) -> Result<Self, EncodeError> {
        let mut out: Vec<i32> = Vec::new();
        for l in lits {
            if l == 0 {
                return Err(EncodeError::Parameter("literal 0".into()));
            }
            if !out.contains(&l) {
                out.push(l);
            }
        }
        if out.is_empty() {
            return Err(EncodeError::EmptyClause);
        }
        Ok(Self(out))
    }

    pub fn literals(&self) -> &[i32] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeOptions {
    /// Add the at-most-one-color clauses.
    pub optional: bool,
    /// Append symmetry-breaking clauses.
    pub symmetry: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self { optional: true, symmetry: false }
    }
}

/// Clause counts per group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseGroups {
    pub positive: usize,
    pub negative: usize,
    pub optional: usize,
    pub symmetry: usize,
}

impl ClauseGroups {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.optional + self.symmetry
    }

    fn bounds(&self) -> [usize; 4] {
        let a = self.positive;
        let b = a + self.negative;
        let c = b + self.optional;
        [a, b, c, c + self.symmetry]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaMeta {
    pub equation: Option<LinearEquation>,
    pub n: u64,
    pub k: u32,
    pub options: EncodeOptions,
    pub groups: ClauseGroups,
}

/// A clause database with flat literal storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    var_count: u32,
    lits: Vec<i32>,
    ends: Vec<usize>,
    meta: FormulaMeta,
}

impl CnfFormula {
    /// A formula without Rado metadata, e.g. parsed from DIMACS.
    pub fn from_clauses(var_count: u32, clauses: impl IntoIterator<Item = Vec<i32>>) -> Result<Self, EncodeError> {
        let mut f = CnfFormula {
            var_count,
            lits: Vec::new(),
            ends: Vec::new(),
            meta: FormulaMeta {
                equation: None,
                n: 0,
                k: 0,
                options: EncodeOptions { optional: false, symmetry: false },
                groups: ClauseGroups::default(),
            },
        };
        for c in clauses {
            if c.is_empty() {
                return Err(EncodeError::EmptyClause);
            }
            if let Some(&l) = c.iter().find(|l| l.unsigned_abs() > var_count || **l == 0) {
                return Err(EncodeError::Parameter(format!("literal {l} outside 1..={var_count}")));
            }
            f.lits.extend_from_slice(&c);
            f.ends.push(f.lits.len());
        }
        f.meta.groups.positive = f.ends.len();
        Ok(f)
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    pub fn clause_count(&self) -> usize {
        self.ends.len()
    }

    pub fn literal_count(&self) -> usize {
        self.lits.len()
    }

    pub fn meta(&self) -> &FormulaMeta {
        &self.meta
    }

    pub fn clause(&self, i: usize) -> &[i32] {
        let start = if i == 0 { 0 } else { self.ends[i - 1] };
        &self.lits[start..self.ends[i]]
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = &[i32]> + '_ {
        (0..self.ends.len()).map(move |i| self.clause(i))
    }

    fn push(&mut self, lits: &[i32]) {
        debug_assert!(!lits.is_empty());
        self.lits.extend_from_slice(lits);
        self.ends.push(self.lits.len());
    }

    /// Whether `assignment[v - 1]` satisfies every clause.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.first_falsified(assignment).is_none()
    }

    /// Index of the first clause the assignment falsifies.
    pub fn first_falsified(&self, assignment: &[bool]) -> Option<usize> {
        self.clauses().position(|c| {
            !c.iter().any(|&l| {
                let v = assignment.get(l.unsigned_abs() as usize - 1).copied().unwrap_or(false);
                v == (l > 0)
            })
        })
    }

    /// SHA-256 of the DIMACS body (header and clauses, no comments).
    pub fn fingerprint(&self) -> String {
        let mut w = std::io::BufWriter::new(Sha256::new());
        dimacs::write_body(self, &mut w).expect("hashing does not fail");
        let h = w.into_inner().expect("hashing does not fail");
        hex::encode(h.finalize())
    }
}

/// Builds `F_n^k(E)`.
pub fn build_formula(eq: &LinearEquation, n: u64, k: u32, options: EncodeOptions) -> Result<CnfFormula, EncodeError> {
    if n == 0 || k == 0 {
        return Err(EncodeError::Parameter(format!("n = {n}, k = {k} (both must be positive)")));
    }
    let map = VarMap::new(n, k)?;
    let mut f = CnfFormula {
        var_count: map.var_count(),
        lits: Vec::new(),
        ends: Vec::new(),
        meta: FormulaMeta { equation: Some(eq.clone()), n, k, options, groups: ClauseGroups::default() },
    };
    let mut clause = Vec::with_capacity(k.max(eq.arity() as u32) as usize);
    for j in 1..=n {
        clause.clear();
        clause.extend((1..=k).map(|i| map.var(j, i)));
        f.push(&clause);
    }
    f.meta.groups.positive = n as usize;

    let before = f.clause_count();
    eq.visit_solutions(n, |s| {
        for i in 1..=k {
            negative_clause(&map, s, i, &mut clause);
            f.push(&clause);
        }
    });
    f.meta.groups.negative = f.clause_count() - before;

    if options.optional {
        let before = f.clause_count();
        for j in 1..=n {
            for i1 in 1..=k {
                for i2 in i1 + 1..=k {
                    f.push(&[-map.var(j, i1), -map.var(j, i2)]);
                }
            }
        }
        f.meta.groups.optional = f.clause_count() - before;
    }
    if options.symmetry {
        let sym = symmetry_clauses(eq, n, k)?;
        for c in &sym {
            f.push(c.literals());
        }
        f.meta.groups.symmetry = sym.len();
    }
    Ok(f)
}

/// `¬v_{x_1}^i ∨ ... ∨ ¬v_{x_m}^i` with repeated integers listed once.
pub(crate) fn negative_clause(map: &VarMap, solution: &[u64], color: u32, out: &mut Vec<i32>) {
    out.clear();
    for &x in solution {
        let lit = -map.var(x, color);
        if !out.contains(&lit) {
            out.push(lit);
        }
    }
}

/// The two integers pinned by symmetry breaking: `first` gets color 1 and
/// `second` color 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryAnchor {
    pub solution: SolutionTuple,
    pub first: u64,
    pub second: u64,
}

/// Among solutions taking exactly two distinct values, the one with the
/// smallest maximum coordinate (ties broken lexicographically). The two
/// values must receive different colors in any valid coloring.
pub fn symmetry_anchor(eq: &LinearEquation, n: u64) -> Option<SymmetryAnchor> {
    let c = eq.coeffs();
    let m = c.len();
    let mut best: Option<(u64, Vec<u64>, u64, u64)> = None;
    for mask in 1u64..(1u64 << m) - 1 {
        let in_a = |i: usize| mask >> i & 1 == 1;
        let sa: i128 = (0..m).filter(|&i| in_a(i)).map(|i| c[i] as i128).sum();
        let sb: i128 = (0..m).filter(|&i| !in_a(i)).map(|i| c[i] as i128).sum();
        // sa * u + sb * w = 0 with u != w
        let (u, w) = match (sa, sb) {
            (0, 0) => (1, 2),
            (0, _) | (_, 0) => continue,
            _ if (sa > 0) == (sb > 0) => continue,
            _ => {
                let g = num_integer::gcd(sa, sb);
                ((sb.abs() / g) as u64, (sa.abs() / g) as u64)
            }
        };
        if u == w {
            continue;
        }
        let values: Vec<u64> = (0..m).map(|i| if in_a(i) { u } else { w }).collect();
        debug_assert!(eq.is_solution(&values));
        let max = u.max(w);
        if max > n {
            continue;
        }
        let size_a = (0..m).filter(|&i| in_a(i)).count();
        let (first, second) = match size_a.cmp(&(m - size_a)) {
            std::cmp::Ordering::Greater => (u, w),
            std::cmp::Ordering::Less => (w, u),
            std::cmp::Ordering::Equal => (u.min(w), u.max(w)),
        };
        let better = match &best {
            None => true,
            Some((bm, bv, _, _)) => (max, &values) < (*bm, bv),
        };
        if better {
            best = Some((max, values, first, second));
        }
    }
    best.map(|(_, values, first, second)| SymmetryAnchor {
        solution: SolutionTuple { values },
        first,
        second,
    })
}

/// Unit clauses pinning the [`symmetry_anchor`] to colors 1 and 2, plus, for
/// `k > 3`, first-use ordering of the remaining colors: integer `j` may take
/// color `i >= 4` only if some `j' < j` has color `i - 1`.
pub fn symmetry_clauses(eq: &LinearEquation, n: u64, k: u32) -> Result<Vec<Clause>, EncodeError> {
    if k < 2 {
        return Ok(Vec::new());
    }
    let map = VarMap::new(n, k)?;
    let Some(anchor) = symmetry_anchor(eq, n) else {
        return Ok(Vec::new());
    };
    let mut out = vec![
        Clause::new([map.var(anchor.first, 1)])?,
        Clause::new([map.var(anchor.second, 2)])?,
    ];
    for i in 4..=k {
        for j in 1..=n {
            let lits = std::iter::once(-map.var(j, i)).chain((1..j).map(|jp| map.var(jp, i - 1)));
            out.push(Clause::new(lits)?);
        }
    }
    Ok(out)
}

/// Drops every clause that mentions an integer above `m`. With symmetry
/// clauses the result equals the rebuilt `F_m^k(E)` only when `m` covers
/// both integers of the [`symmetry_anchor`].
pub fn truncate(f: &CnfFormula, m: u64) -> Result<CnfFormula, EncodeError> {
    let n = f.meta.n;
    let k = f.meta.k;
    if k == 0 {
        return Err(EncodeError::Parameter("formula carries no variable map".into()));
    }
    if m == 0 || m >= n {
        return Err(EncodeError::Parameter(format!("truncation to {m} needs 1 <= m < n = {n}")));
    }
    let limit = m as i64 * k as i64;
    let bounds = f.meta.groups.bounds();
    let mut out = CnfFormula {
        var_count: (m * k as u64) as u32,
        lits: Vec::new(),
        ends: Vec::new(),
        meta: FormulaMeta { n: m, groups: ClauseGroups::default(), ..f.meta.clone() },
    };
    let mut counts = [0usize; 4];
    let mut group = 0;
    for (idx, c) in f.clauses().enumerate() {
        while group < 3 && idx >= bounds[group] {
            group += 1;
        }
        if c.iter().all(|&l| (l.unsigned_abs() as i64) <= limit) {
            out.push(c);
            counts[group] += 1;
        }
    }
    out.meta.groups = ClauseGroups {
        positive: counts[0],
        negative: counts[1],
        optional: counts[2],
        symmetry: counts[3],
    };
    Ok(out)
}

/// Decodes a signed assignment (DIMACS `v` literals) into a coloring: `j`
/// gets the least color `i` with `v_j^i` true.
pub fn decode_model(model: &[i32], n: u64, k: u32) -> Result<Coloring, EncodeError> {
    let map = VarMap::new(n, k)?;
    let mut value = vec![None; map.var_count() as usize];
    for &l in model {
        if let Some(slot) = value.get_mut(l.unsigned_abs() as usize - 1) {
            *slot = Some(l > 0);
        }
    }
    if let Some(v) = value.iter().position(|v| v.is_none()) {
        return Err(EncodeError::PartialModel(v as u32 + 1));
    }
    let mut colors = Vec::with_capacity(n as usize);
    for j in 1..=n {
        let c = (1..=k)
            .find(|&i| value[map.var(j, i) as usize - 1] == Some(true))
            .ok_or(EncodeError::Uncolored(j))?;
        colors.push(c);
    }
    Ok(Coloring::new(k, colors)?)
}

/// Signed literals for an assignment vector indexed by `var - 1`.
pub fn signed_model(assignment: &[bool]) -> Vec<i32> {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &b)| if b { i as i32 + 1 } else { -(i as i32 + 1) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_equation;

    fn opts(optional: bool, symmetry: bool) -> EncodeOptions {
        EncodeOptions { optional, symmetry }
    }

    #[test]
    fn schur_four_three_groups() {
        let eq = parse_equation("x+y=z").unwrap();
        let f = build_formula(&eq, 4, 3, opts(true, false)).unwrap();
        let g = f.meta().groups;
        assert_eq!((g.positive, g.negative, g.optional, g.symmetry), (4, 18, 12, 0));
        assert_eq!(f.var_count(), 12);
        // (1,1,2) in color 1 after duplicate removal
        assert_eq!(f.clause(4), &[-1, -4]);
    }

    #[test]
    fn small_formulas() {
        let eq = parse_equation("x+y=z").unwrap();
        let f = build_formula(&eq, 1, 1, opts(true, false)).unwrap();
        assert_eq!((f.clause_count(), f.meta().groups.negative), (1, 0));
        let eq = parse_equation("x-y=5z").unwrap();
        let f = build_formula(&eq, 7, 1, opts(false, false)).unwrap();
        assert_eq!((f.meta().groups.positive, f.meta().groups.negative), (7, 2));
        assert!(build_formula(&eq, 0, 3, opts(true, false)).is_err());
        assert!(matches!(
            build_formula(&eq, 1 << 31, 3, opts(true, false)),
            Err(EncodeError::VariableOverflow(_))
        ));
    }

    #[test]
    fn symmetry_examples() {
        let map = VarMap::new(10, 3).unwrap();
        let eq = parse_equation("x+y=z").unwrap();
        let s = symmetry_clauses(&eq, 10, 3).unwrap();
        assert_eq!(s, vec![Clause::new([map.var(1, 1)]).unwrap(), Clause::new([map.var(2, 2)]).unwrap()]);
        assert!(symmetry_clauses(&eq, 1, 3).unwrap().is_empty());
        let eq = parse_equation("x-y=2z").unwrap();
        let a = symmetry_anchor(&eq, 3).unwrap();
        assert_eq!((a.solution.values.clone(), a.first, a.second), (vec![3, 1, 1], 1, 3));
        assert!(symmetry_anchor(&eq, 2).is_none());
    }

    #[test]
    fn first_use_clauses_for_four_colors() {
        let eq = parse_equation("x+y=z").unwrap();
        let s = symmetry_clauses(&eq, 5, 4).unwrap();
        assert_eq!(s.len(), 2 + 5);
        let map = VarMap::new(5, 4).unwrap();
        assert_eq!(s[2].literals(), &[-map.var(1, 4)]);
        assert_eq!(s[4].literals(), &[-map.var(3, 4), map.var(1, 3), map.var(2, 3)]);
    }

    #[test]
    fn truncation_matches_rebuild() {
        for (text, k, sym) in [("x+y=z", 3, false), ("x-y=2z", 3, true), ("x+y=z", 4, true), ("2x+y=3z", 2, false)] {
            let eq = parse_equation(text).unwrap();
            let big = build_formula(&eq, 20, k, opts(true, sym)).unwrap();
            // symmetry units only survive once both pinned integers fit
            let low = if sym { symmetry_anchor(&eq, 20).unwrap().solution.values.into_iter().max().unwrap() } else { 1 };
            for m in [1, 2, 3, 7, 19].into_iter().filter(|&m| m >= low) {
                let t = truncate(&big, m).unwrap();
                let direct = build_formula(&eq, m, k, opts(true, sym)).unwrap();
                assert_eq!(t, direct, "{text} m={m}");
                assert_eq!(t.fingerprint(), direct.fingerprint());
            }
            assert!(truncate(&big, 20).is_err());
            assert!(truncate(&big, 0).is_err());
        }
    }

    #[test]
    fn truncation_drops_exactly_the_high_clauses() {
        let eq = parse_equation("x-y=2z").unwrap();
        let f = build_formula(&eq, 43, 3, opts(true, false)).unwrap();
        let t = truncate(&f, 42).unwrap();
        let mentioning_43 = f
            .clauses()
            .filter(|c| c.iter().any(|&l| l.unsigned_abs() > 42 * 3))
            .count();
        assert_eq!(f.clause_count() - t.clause_count(), mentioning_43);
    }

    #[test]
    fn decode_examples() {
        let map = VarMap::new(4, 3).unwrap();
        let trues = [map.var(1, 1), map.var(2, 2), map.var(3, 3), map.var(4, 3)];
        let model: Vec<i32> = (1..=12).map(|v| if trues.contains(&v) { v } else { -v }).collect();
        assert_eq!(decode_model(&model, 4, 3).unwrap().colors(), &[1, 2, 3, 3]);
        assert!(matches!(decode_model(&model[..11], 4, 3), Err(EncodeError::PartialModel(12))));
        let none: Vec<i32> = (1..=12).map(|v| -v).collect();
        assert!(matches!(decode_model(&none, 4, 3), Err(EncodeError::Uncolored(1))));
    }

    #[test]
    fn clause_dedup() {
        assert_eq!(Clause::new([-1, -1, -2]).unwrap().literals(), &[-1, -2]);
        assert!(matches!(Clause::new([]), Err(EncodeError::EmptyClause)));
    }
}

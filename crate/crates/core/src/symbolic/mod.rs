//! Parametric upper-bound proofs. Atoms are integer polynomials in one or
//! two parameters; a clause set over atoms that is unsatisfiable gives an
//! upper bound for every admissible parameter value at once, provided each
//! atom stays within `[1, f]` on the whole domain.

mod family;
mod poly;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{CnfFormula, ClauseGroups, EncodeError, VarMap};
use crate::solver::{solve, BackendConfig, SolveStatus, SolverError};

pub use family::{bounded_integer_polynomial, Certification, FamilySpec, ParametricFamily};
pub use poly::{parse_polynomial, Polynomial, MAX_DEGREE};

#[derive(Debug, Error)]
pub enum SymbolicError {
    #[error("alphabet of {0} parameters is unsupported (need 1 or 2)")]
    Alphabet(usize),
    #[error("degree {0} exceeds the supported maximum")]
    Degree(usize),
    #[error("cannot parse polynomial `{text}`: {msg}")]
    Parse { text: String, msg: String },
    #[error("family: {0}")]
    Family(String),
    #[error("tuple {0} is not over the atom set")]
    NotOverAtoms(String),
    #[error("tuple {0} does not satisfy the equation identically")]
    NotASolution(String),
    #[error("parameter values {0:?} are outside the family domain")]
    Domain(Vec<i64>),
    #[error("atom {atom} evaluates to {value}, outside [1, {bound}]")]
    AtomOutOfRange { atom: String, value: i128, bound: i128 },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Seed files shipped with the crate, by file stem.
pub const SHIPPED_FAMILIES: &[(&str, &str)] = &[
    ("x_minus_y_eq_m_minus_2_z", include_str!("../../families/x_minus_y_eq_m_minus_2_z.json")),
    ("a_x_minus_y_eq_a_minus_1_z", include_str!("../../families/a_x_minus_y_eq_a_minus_1_z.json")),
    ("a_x_minus_y_eq_b_z", include_str!("../../families/a_x_minus_y_eq_b_z.json")),
];

pub fn shipped_family(name: &str) -> Option<ParametricFamily> {
    SHIPPED_FAMILIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ParametricFamily::from_json(text).expect("shipped family parses"))
}

/// Memoized [`bounded_integer_polynomial`].
struct BoundCache<'a> {
    fam: &'a ParametricFamily,
    max_degree: usize,
    seen: HashMap<Polynomial, bool>,
}

impl<'a> BoundCache<'a> {
    fn new(fam: &'a ParametricFamily) -> Self {
        Self { fam, max_degree: fam.bound.degree().unwrap_or(0), seen: HashMap::new() }
    }

    fn check(&mut self, p: &Polynomial) -> Result<bool, SymbolicError> {
        if p.degree().unwrap_or(0) > self.max_degree {
            return Ok(false);
        }
        if let Some(&v) = self.seen.get(p) {
            return Ok(v);
        }
        let v = bounded_integer_polynomial(p, self.fam)?.is_verified();
        self.seen.insert(*p, v);
        Ok(v)
    }
}

/// Atom set and symbolic solutions produced by [`find_polynomials`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialSets {
    pub atoms: Vec<Polynomial>,
    pub gaps: Vec<Polynomial>,
    pub tuples: Vec<Vec<Polynomial>>,
}

/// Grows `S` from `s0` using gaps from `g0` for a family of the form
/// `alpha (x - y) = beta z`: gaps are exact quotients `(p - q) / beta`,
/// new atoms are `p +- beta q`, and solutions are `(p, p - beta q, alpha q)`.
/// Only polynomials certified within `[1, f]` are kept.
pub fn find_polynomials(
    fam: &ParametricFamily,
    s0: &[Polynomial],
    g0: &[Polynomial],
    max_iterations: usize,
) -> Result<PolynomialSets, SymbolicError> {
    let (alpha, beta) = fam
        .difference_form()
        .ok_or_else(|| SymbolicError::Family("find_polynomials needs a template alpha(x - y) = beta z".into()))?;
    let mut cache = BoundCache::new(fam);
    let mut s: BTreeSet<Polynomial> = s0.iter().copied().collect();
    let mut g: BTreeSet<Polynomial> = g0.iter().copied().collect();
    for _ in 0..max_iterations {
        let snapshot: Vec<Polynomial> = s.iter().copied().collect();
        for p in &snapshot {
            for q in &snapshot {
                if p == q {
                    continue;
                }
                if let Some(r) = (*p - *q).exact_div(&beta) {
                    if cache.check(&r)? {
                        g.insert(r);
                    }
                }
            }
        }
        let gaps: Vec<Polynomial> = g.iter().copied().collect();
        for p in &snapshot {
            for q in &gaps {
                let Ok(bq) = beta.mul(q) else { continue };
                for r in [*p + bq, *p - bq] {
                    if cache.check(&r)? {
                        s.insert(r);
                    }
                }
            }
        }
    }
    let snapshot: Vec<Polynomial> = s.iter().copied().collect();
    let mut tuples = BTreeSet::new();
    for p in &snapshot {
        for q in &snapshot {
            let (Ok(bq), Ok(z)) = (beta.mul(q), alpha.mul(q)) else { continue };
            let y = *p - bq;
            if cache.check(p)? && cache.check(&y)? && cache.check(&z)? {
                let t = vec![*p, y, z];
                assert!(fam.is_identity(&t)?, "constructed tuple is not a solution");
                s.extend([y, z]);
                tuples.insert(t);
            }
        }
    }
    Ok(PolynomialSets { atoms: s.into_iter().collect(), gaps: g.into_iter().collect(), tuples: tuples.into_iter().collect() })
}

/// Ground CNF over atoms: atom `i` (0-based) with color `c` is variable
/// `i k + c`, matching the concrete encoder's layout with atoms in place
/// of integers.
#[derive(Debug, Clone)]
pub struct ParametricFormula {
    pub k: u32,
    pub atoms: Vec<Polynomial>,
    /// Tuples as atom indices.
    pub tuples: Vec<Vec<usize>>,
    pub cnf: CnfFormula,
    pub groups: ClauseGroups,
}

/// Builds positive, negative and optional clauses over the atoms.
pub fn build_parametric_formula(
    fam: &ParametricFamily,
    k: u32,
    atoms: &[Polynomial],
    tuples: &[Vec<Polynomial>],
) -> Result<ParametricFormula, SymbolicError> {
    let atoms: Vec<Polynomial> = atoms.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let index: HashMap<Polynomial, usize> = atoms.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let show = |t: &[Polynomial]| format!("({})", t.iter().map(|p| fam.show(p)).collect::<Vec<_>>().join(", "));
    let mut ids = Vec::with_capacity(tuples.len());
    for t in tuples {
        let idx = t
            .iter()
            .map(|p| index.get(p).copied())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| SymbolicError::NotOverAtoms(show(t)))?;
        if !fam.is_identity(t)? {
            return Err(SymbolicError::NotASolution(show(t)));
        }
        ids.push(idx);
    }
    let vars = VarMap::new(atoms.len() as u64, k)?;
    let v = |atom: usize, c: u32| vars.var(atom as u64 + 1, c);
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    for a in 0..atoms.len() {
        clauses.push((1..=k).map(|c| v(a, c)).collect());
    }
    let mut negative = 0;
    for t in &ids {
        for c in 1..=k {
            let mut cl: Vec<i32> = t.iter().map(|&a| -v(a, c)).collect();
            cl.sort_unstable();
            cl.dedup();
            clauses.push(cl);
            negative += 1;
        }
    }
    for a in 0..atoms.len() {
        for c1 in 1..=k {
            for c2 in c1 + 1..=k {
                clauses.push(vec![-v(a, c1), -v(a, c2)]);
            }
        }
    }
    let groups = ClauseGroups {
        positive: atoms.len(),
        negative,
        optional: atoms.len() * (k as usize * (k as usize).saturating_sub(1) / 2),
        symmetry: 0,
    };
    let cnf = CnfFormula::from_clauses(vars.var_count(), clauses)?;
    Ok(ParametricFormula { k, atoms, tuples: ids, cnf, groups })
}

impl ParametricFormula {
    pub fn solve(&self, cfg: &BackendConfig) -> Result<SolveStatus, SymbolicError> {
        Ok(solve(&self.cnf, cfg)?.status)
    }

    /// Each clause with atoms replaced by their values at `values`, in
    /// the concrete encoder's variable numbering.
    pub fn concrete_clauses(&self, fam: &ParametricFamily, values: &[i64]) -> Result<Vec<Vec<i32>>, SymbolicError> {
        let n = fam.bound.eval(values);
        let at: Vec<u64> = self.atoms.iter().map(|p| p.eval(values).clamp(1, n.max(1)) as u64).collect();
        let vars = VarMap::new(n.max(1) as u64, self.k)?;
        let old = VarMap::new(self.atoms.len() as u64, self.k)?;
        Ok(self
            .cnf
            .clauses()
            .map(|c| {
                let mut out: Vec<i32> = c
                    .iter()
                    .map(|&l| {
                        let (atom, color) = old.integer_and_color(l.abs());
                        l.signum() * vars.var(at[atom as usize - 1], color)
                    })
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect())
    }

    /// Negative clauses only, in the same form as [`Self::concrete_clauses`].
    pub fn concrete_negative_clauses(&self, fam: &ParametricFamily, values: &[i64]) -> Result<Vec<Vec<i32>>, SymbolicError> {
        let all = self.concrete_clauses(fam, values)?;
        let start = self.groups.positive;
        Ok(all[start..start + self.groups.negative].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstantiationReport {
    pub values: Vec<i64>,
    pub equation: String,
    /// `f(values)`: the proven bound `R_k <= f(values)` when the parametric
    /// formula is unsatisfiable.
    pub bound: u64,
    pub atoms: usize,
    pub distinct_values: usize,
    pub tuples_checked: usize,
}

/// Evaluates every atom and tuple at `values`: atoms must land in
/// `[1, f(values)]` and tuples must be solutions of the instantiated
/// equation.
pub fn instantiate_and_check(
    pf: &ParametricFormula,
    fam: &ParametricFamily,
    values: &[i64],
) -> Result<InstantiationReport, SymbolicError> {
    if !fam.contains(values) {
        return Err(SymbolicError::Domain(values.to_vec()));
    }
    let bound = fam.bound.eval(values);
    let mut at = Vec::with_capacity(pf.atoms.len());
    for p in &pf.atoms {
        let value = p.eval(values);
        if value < 1 || value > bound {
            return Err(SymbolicError::AtomOutOfRange { atom: fam.show(p), value, bound });
        }
        at.push(value as u64);
    }
    let eq = fam.instantiate(values)?;
    for t in &pf.tuples {
        let sol: Vec<u64> = t.iter().map(|&i| at[i]).collect();
        if !eq.is_solution(&sol) {
            let tuple: Vec<Polynomial> = t.iter().map(|&i| pf.atoms[i]).collect();
            return Err(SymbolicError::NotASolution(format!("{tuple:?} at {values:?}")));
        }
    }
    let distinct = at.iter().collect::<BTreeSet<_>>().len();
    Ok(InstantiationReport {
        values: values.to_vec(),
        equation: eq.to_string(),
        bound: bound as u64,
        atoms: at.len(),
        distinct_values: distinct,
        tuples_checked: pf.tuples.len(),
    })
}

/// Serializable record of a parametric run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofBundle {
    pub family: FamilySpec,
    pub k: u32,
    pub atoms: Vec<String>,
    pub tuples: Vec<Vec<usize>>,
    pub groups: ClauseGroups,
    pub fingerprint: String,
    pub status: SolveStatus,
    pub instantiations: Vec<InstantiationReport>,
}

impl ProofBundle {
    pub fn new(fam: &ParametricFamily, pf: &ParametricFormula, status: SolveStatus, inst: Vec<InstantiationReport>) -> Self {
        Self {
            family: fam.to_spec(),
            k: pf.k,
            atoms: pf.atoms.iter().map(|p| fam.show(p)).collect(),
            tuples: pf.tuples.clone(),
            groups: pf.groups,
            fingerprint: pf.cnf.fingerprint(),
            status,
            instantiations: inst,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ParametricFamily {
        ParametricFamily::from_json(
            r#"{"name": "a(x-y)=(a-1)z", "params": ["a"], "coefficients": ["a", "-a", "-(a-1)"],
                "domain": ["a-16"], "bound": "a^3+(a-1)^2"}"#,
        )
        .unwrap()
    }

    #[test]
    fn zero_iterations_give_identity_tuple() {
        let fam = toy();
        let s0 = [fam.parse("1").unwrap(), fam.parse("a").unwrap()];
        let sets = find_polynomials(&fam, &s0, &[fam.parse("1").unwrap()], 0).unwrap();
        let want = vec![fam.parse("a").unwrap(), fam.parse("1").unwrap(), fam.parse("a").unwrap()];
        assert!(sets.tuples.contains(&want), "{:?}", sets.tuples);
    }

    #[test]
    fn small_formula_counts() {
        let fam = toy();
        let (one, a) = (fam.parse("1").unwrap(), fam.parse("a").unwrap());
        let pf = build_parametric_formula(&fam, 1, &[one, a], &[vec![a, one, a]]).unwrap();
        assert_eq!(pf.groups, ClauseGroups { positive: 2, negative: 1, optional: 0, symmetry: 0 });
        assert_eq!(pf.cnf.clause(2).len(), 2);
        assert_eq!(pf.solve(&BackendConfig::default()).unwrap(), SolveStatus::Unsat);
    }

    #[test]
    fn build_rejects_bad_tuples() {
        let fam = toy();
        let (one, a) = (fam.parse("1").unwrap(), fam.parse("a").unwrap());
        let a2 = fam.parse("a^2").unwrap();
        assert!(matches!(
            build_parametric_formula(&fam, 2, &[one, a], &[vec![a2, one, a]]),
            Err(SymbolicError::NotOverAtoms(_))
        ));
        assert!(matches!(
            build_parametric_formula(&fam, 2, &[one, a], &[vec![a, a, one]]),
            Err(SymbolicError::NotASolution(_))
        ));
    }

    #[test]
    fn instantiation_guards() {
        let fam = toy();
        let (one, a) = (fam.parse("1").unwrap(), fam.parse("a").unwrap());
        let pf = build_parametric_formula(&fam, 2, &[one, a], &[vec![a, one, a]]).unwrap();
        let r = instantiate_and_check(&pf, &fam, &[16]).unwrap();
        assert_eq!(r.bound, 16 * 16 * 16 + 15 * 15);
        assert_eq!(r.equation, "16x1 - 16x2 - 15x3 = 0");
        assert!(matches!(instantiate_and_check(&pf, &fam, &[15]), Err(SymbolicError::Domain(_))));
        let big = fam.parse("a^3+a^2").unwrap();
        let pf = build_parametric_formula(&fam, 2, &[one, big], &[]).unwrap();
        assert!(matches!(instantiate_and_check(&pf, &fam, &[16]), Err(SymbolicError::AtomOutOfRange { .. })));
    }

    #[test]
    fn shipped_families_parse() {
        for (name, _) in SHIPPED_FAMILIES {
            let fam = shipped_family(name).unwrap();
            assert!(fam.difference_form().is_some(), "{name}");
            for p in fam.s0.iter().chain(&fam.g0) {
                if fam.params.len() == 1 {
                    assert!(bounded_integer_polynomial(p, &fam).unwrap().is_verified(), "{name}: {}", fam.show(p));
                }
            }
        }
    }
}

use std::collections::BTreeMap;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::poly::{parse_polynomial, Polynomial};
use super::SymbolicError;
use crate::equation::LinearEquation;

/// On-disk form of a family: every polynomial is an expression string over
/// `params`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub params: Vec<String>,
    /// Coefficients `c_i` of `sum c_i x_i = 0`.
    pub coefficients: Vec<String>,
    /// Each generator `g` contributes the constraint `g >= 0`.
    pub domain: Vec<String>,
    /// Recorded only; never used by the certification.
    #[serde(default)]
    pub coprime: bool,
    pub bound: String,
    #[serde(default)]
    pub s0: Vec<String>,
    #[serde(default)]
    pub g0: Vec<String>,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_iterations() -> usize {
    3
}

/// A parametrized equation `sum c_i(params) x_i = 0` together with its
/// parameter domain and the claimed upper bound `f(params)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricFamily {
    pub name: String,
    pub params: Vec<String>,
    pub coefficients: Vec<Polynomial>,
    pub domain: Vec<Polynomial>,
    pub coprime: bool,
    pub bound: Polynomial,
    pub s0: Vec<Polynomial>,
    pub g0: Vec<Polynomial>,
    pub max_iterations: usize,
}

impl ParametricFamily {
    pub fn from_spec(spec: &FamilySpec) -> Result<Self, SymbolicError> {
        if spec.params.is_empty() || spec.params.len() > 2 {
            return Err(SymbolicError::Alphabet(spec.params.len()));
        }
        let parse = |v: &[String]| -> Result<Vec<Polynomial>, SymbolicError> {
            v.iter().map(|s| parse_polynomial(s, &spec.params)).collect()
        };
        let fam = Self {
            name: spec.name.clone(),
            params: spec.params.clone(),
            coefficients: parse(&spec.coefficients)?,
            domain: parse(&spec.domain)?,
            coprime: spec.coprime,
            bound: parse_polynomial(&spec.bound, &spec.params)?,
            s0: parse(&spec.s0)?,
            g0: parse(&spec.g0)?,
            max_iterations: spec.max_iterations,
        };
        if fam.coefficients.len() < 2 || fam.coefficients.iter().any(Polynomial::is_zero) {
            return Err(SymbolicError::Family("need at least two nonzero coefficients".into()));
        }
        if fam.params.len() == 1 {
            fam.univariate_start()?;
        }
        Ok(fam)
    }

    pub fn to_spec(&self) -> FamilySpec {
        let show = |v: &[Polynomial]| v.iter().map(|p| self.show(p)).collect();
        FamilySpec {
            name: self.name.clone(),
            params: self.params.clone(),
            coefficients: show(&self.coefficients),
            domain: show(&self.domain),
            coprime: self.coprime,
            bound: self.show(&self.bound),
            s0: show(&self.s0),
            g0: show(&self.g0),
            max_iterations: self.max_iterations,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SymbolicError> {
        let spec: FamilySpec = serde_json::from_str(text).map_err(|e| SymbolicError::Family(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn show(&self, p: &Polynomial) -> String {
        p.display_with(&self.params)
    }

    pub fn parse(&self, text: &str) -> Result<Polynomial, SymbolicError> {
        parse_polynomial(text, &self.params)
    }

    /// For one parameter: the least admissible value, read off a generator
    /// of the form `a - a0`.
    pub fn univariate_start(&self) -> Result<i64, SymbolicError> {
        self.domain
            .iter()
            .filter(|g| g.is_univariate() && g.univariate_coeffs().len() == 2 && g.coeff(1, 0) == 1)
            .map(|g| -g.coeff(0, 0))
            .max()
            .ok_or_else(|| SymbolicError::Family("univariate domain needs a generator `a - a0`".into()))
    }

    pub fn contains(&self, values: &[i64]) -> bool {
        values.len() == self.params.len()
            && self.domain.iter().all(|g| g.eval(values) >= 0)
            && (!self.coprime || values.len() < 2 || values[0].gcd(&values[1]) == 1)
    }

    /// The concrete equation at a parameter assignment.
    pub fn instantiate(&self, values: &[i64]) -> Result<LinearEquation, SymbolicError> {
        let coeffs = self
            .coefficients
            .iter()
            .map(|c| i64::try_from(c.eval(values)).map_err(|_| SymbolicError::Family("coefficient overflow".into())))
            .collect::<Result<Vec<_>, _>>()?;
        LinearEquation::new(coeffs).map_err(|e| SymbolicError::Family(e.to_string()))
    }

    /// `sum c_i t_i == 0` as a polynomial identity.
    pub fn is_identity(&self, tuple: &[Polynomial]) -> Result<bool, SymbolicError> {
        if tuple.len() != self.coefficients.len() {
            return Ok(false);
        }
        let mut sum = Polynomial::zero();
        for (c, t) in self.coefficients.iter().zip(tuple) {
            sum = sum + c.mul(t)?;
        }
        Ok(sum.is_zero())
    }

    /// `(alpha, beta)` when the template is `alpha (x - y) = beta z`.
    pub fn difference_form(&self) -> Option<(Polynomial, Polynomial)> {
        match self.coefficients.as_slice() {
            [x, y, z] if *x == -*y => Some((*x, -*z)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Certification {
    Verified,
    Unverified(String),
}

impl Certification {
    pub fn is_verified(&self) -> bool {
        matches!(self, Certification::Verified)
    }
}

/// Decides whether `1 <= p <= f` on the family's domain. Exact for one
/// parameter; for two it searches for a nonnegative combination of products
/// of domain generators and may answer Unverified for true statements.
pub fn bounded_integer_polynomial(p: &Polynomial, fam: &ParametricFamily) -> Result<Certification, SymbolicError> {
    let lower = *p - Polynomial::constant(1);
    let upper = fam.bound - *p;
    match fam.params.len() {
        1 => {
            if !p.is_univariate() {
                return Err(SymbolicError::Alphabet(2));
            }
            let a0 = fam.univariate_start()?;
            for (g, what) in [(lower, "p >= 1"), (upper, "p <= f")] {
                if let Some(a) = nonnegative_from(&g.univariate_coeffs(), a0) {
                    return Ok(Certification::Unverified(format!("{what} fails at {} = {a}", fam.params[0])));
                }
            }
            Ok(Certification::Verified)
        }
        2 => {
            for (g, what) in [(lower, "p >= 1"), (upper, "p <= f")] {
                if !handelman_certificate(&g, &fam.domain)? {
                    return Ok(Certification::Unverified(format!("no certificate for {what}")));
                }
            }
            Ok(Certification::Verified)
        }
        n => Err(SymbolicError::Alphabet(n)),
    }
}

/// The first integer `a >= a0` with `g(a) < 0`, or `None` if `g` is
/// nonnegative on all integers from `a0` on. Past a root bound the sign of
/// `g` is that of its leading coefficient, so only finitely many points
/// need checking.
fn nonnegative_from(c: &[i64], a0: i64) -> Option<i64> {
    let Some(&lead) = c.last() else { return None };
    let eval = |a: i64| -> i128 { c.iter().rev().fold(0i128, |acc, &ci| acc * a as i128 + ci as i128) };
    let n = c.len() - 1;
    let lc = (lead as f64).abs();
    let cauchy = 1.0 + c[..n].iter().map(|&x| (x as f64).abs() / lc).fold(0.0, f64::max);
    let fujiwara = 2.0
        * (1..=n)
            .map(|i| {
                let mut r = (c[n - i] as f64).abs() / lc;
                if i == n {
                    r /= 2.0;
                }
                r.powf(1.0 / i as f64)
            })
            .fold(0.0, f64::max);
    let root_bound = cauchy.min(fujiwara).ceil() as i64 + 1;
    let last = root_bound.max(a0);
    if let Some(a) = (a0..=last).find(|&a| eval(a) < 0) {
        return Some(a);
    }
    if lead < 0 {
        // negative from some point past the root bound on
        return Some((last + 1..).find(|&a| eval(a) < 0).expect("negative leading coefficient"));
    }
    None
}

/// Tries to write `target` as a nonnegative rational combination of
/// products of the generators. The LP answer is rounded and checked in
/// exact arithmetic, so a `true` is always sound.
fn handelman_certificate(target: &Polynomial, generators: &[Polynomial]) -> Result<bool, SymbolicError> {
    if target.is_zero() {
        return Ok(true);
    }
    let degree = target.degree().unwrap_or(0).max(2);
    let mut products = vec![Polynomial::constant(1)];
    let mut frontier = vec![(Polynomial::constant(1), 0usize, 0usize)];
    for d in 1..=degree {
        let mut next = Vec::new();
        for (p, first, _) in &frontier {
            for (gi, g) in generators.iter().enumerate().skip(*first) {
                if let Ok(q) = p.mul(g) {
                    products.push(q);
                    next.push((q, gi, d));
                }
            }
        }
        frontier = next;
    }
    let mut rows: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (k, h) in products.iter().enumerate() {
        for (c, i, j) in h.terms() {
            rows.entry((i, j)).or_default().push((k, c as f64));
        }
    }
    for (_, i, j) in target.terms() {
        rows.entry((i, j)).or_default();
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = products.iter().map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for ((i, j), entries) in &rows {
        let expr: Vec<_> = entries.iter().map(|&(k, c)| (vars[k], c)).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, target.coeff(*i, *j) as f64);
    }
    let Ok(sol) = lp.solve() else { return Ok(false) };
    let fracs: Option<Vec<(i64, i64)>> = vars.iter().map(|&v| rationalize(sol[v].max(0.0), 100_000)).collect();
    let Some(fracs) = fracs else { return Ok(false) };
    let Some(denom) = fracs.iter().try_fold(1i64, |acc, &(_, d)| {
        let l = acc.lcm(&d);
        (l <= 1 << 40).then_some(l)
    }) else {
        return Ok(false);
    };
    let mut sum = Polynomial::zero();
    for (h, &(n, d)) in products.iter().zip(&fracs) {
        if n > 0 {
            sum = sum + h.scale(n * (denom / d));
        }
    }
    Ok(sum == target.scale(denom))
}

/// Best rational approximation with denominator at most `max_den`, by
/// continued fractions.
fn rationalize(x: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() || x > 1e12 {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    loop {
        let a = r.floor() as i64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac < 1e-9 || (h1 as f64 / k1 as f64 - x).abs() < 1e-9 {
            break;
        }
        r = 1.0 / frac;
    }
    (k1 > 0).then_some((h1, k1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube_family() -> ParametricFamily {
        ParametricFamily::from_spec(&FamilySpec {
            name: "x-y=(m-2)z".into(),
            params: vec!["m".into()],
            coefficients: vec!["1".into(), "-1".into(), "-(m-2)".into()],
            domain: vec!["m-3".into()],
            coprime: false,
            bound: "m^3-m^2-m-1".into(),
            s0: vec![],
            g0: vec![],
            max_iterations: 3,
        })
        .unwrap()
    }

    fn bivariate() -> ParametricFamily {
        ParametricFamily::from_spec(&FamilySpec {
            name: "a(x-y)=bz".into(),
            params: vec!["a".into(), "b".into()],
            coefficients: vec!["a".into(), "-a".into(), "-b".into()],
            domain: vec!["a-16".into(), "b-1".into(), "a-2-b".into()],
            coprime: true,
            bound: "a^3".into(),
            s0: vec![],
            g0: vec![],
            max_iterations: 3,
        })
        .unwrap()
    }

    #[test]
    fn univariate_examples() {
        let fam = cube_family();
        let check = |s: &str| bounded_integer_polynomial(&fam.parse(s).unwrap(), &fam).unwrap();
        assert_eq!(check("m^2-m-1"), Certification::Verified);
        assert_eq!(check("m^3-m^2-m-1"), Certification::Verified);
        assert!(!check("-m+1").is_verified());
        assert!(!check("m^3").is_verified());
        // 1 at m = 3 is the only point where m - 2 is small; still >= 1
        assert!(check("m-2").is_verified());
        assert!(!check("m-3").is_verified());
        assert!(!check("m^3-m^2-m").is_verified());
    }

    #[test]
    fn exact_near_boundary() {
        assert_eq!(nonnegative_from(&[25, -10, 1], 3), None);
        // (a - 4)(a - 6) is negative only at a = 5
        assert_eq!(nonnegative_from(&[24, -10, 1], 3), Some(5));
        assert_eq!(nonnegative_from(&[24, -10, 1], 7), None);
        assert_eq!(nonnegative_from(&[1000, 0, -1], 3), Some(32));
        assert_eq!(nonnegative_from(&[], 3), None);
    }

    #[test]
    fn bivariate_certificates() {
        let fam = bivariate();
        let check = |s: &str| bounded_integer_polynomial(&fam.parse(s).unwrap(), &fam).unwrap();
        assert!(check("a").is_verified());
        assert!(check("b").is_verified());
        assert!(check("a-b").is_verified());
        assert!(check("a*b").is_verified());
        assert!(check("a^2").is_verified());
        assert!(!check("b-1").is_verified());
        assert!(!check("a^3+1").is_verified());
        assert!(!check("2-b").is_verified());
    }

    #[test]
    fn rationalize_recovers_fractions() {
        assert_eq!(rationalize(24.0 / 169.0, 100_000), Some((24, 169)));
        assert_eq!(rationalize(386.0 / 2197.0 + 1e-15, 100_000), Some((386, 2197)));
        assert_eq!(rationalize(3.0, 10), Some((3, 1)));
        assert_eq!(rationalize(0.0, 10), Some((0, 1)));
    }

    #[test]
    fn family_helpers() {
        let fam = cube_family();
        assert_eq!(fam.univariate_start().unwrap(), 3);
        assert!(fam.contains(&[3]) && !fam.contains(&[2]));
        assert_eq!(fam.instantiate(&[10]).unwrap().coeffs(), &[1, -1, -8]);
        let (alpha, beta) = fam.difference_form().unwrap();
        assert_eq!((fam.show(&alpha), fam.show(&beta)), ("1".to_string(), "m-2".to_string()));
        let spec = fam.to_spec();
        assert_eq!(ParametricFamily::from_spec(&spec).unwrap(), fam);
        let bad = FamilySpec { params: vec![], ..spec.clone() };
        assert!(matches!(ParametricFamily::from_spec(&bad), Err(SymbolicError::Alphabet(0))));
        let three = FamilySpec { params: vec!["a".into(), "b".into(), "c".into()], ..spec };
        assert!(matches!(ParametricFamily::from_spec(&three), Err(SymbolicError::Alphabet(3))));
        let b = bivariate();
        assert!(b.contains(&[17, 3]) && !b.contains(&[18, 4]) && !b.contains(&[17, 16]));
    }

    proptest! {
        #[test]
        fn univariate_verified_is_sound(c in proptest::collection::vec(-20i64..20, 1..5)) {
            let fam = cube_family();
            let p = Polynomial::from_univariate(&c).unwrap();
            if bounded_integer_polynomial(&p, &fam).unwrap().is_verified() {
                for m in 3..2000i64 {
                    let v = p.eval(&[m]);
                    prop_assert!(v >= 1 && v <= fam.bound.eval(&[m]));
                }
            }
        }

        #[test]
        fn bivariate_verified_is_sound(c in proptest::collection::vec(-3i64..4, 6)) {
            let fam = bivariate();
            let mut p = Polynomial::zero();
            for (k, (i, j)) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)].into_iter().enumerate() {
                p = p + Polynomial::monomial(c[k], i, j).unwrap();
            }
            if bounded_integer_polynomial(&p, &fam).unwrap().is_verified() {
                for a in 16..80i64 {
                    for b in 1..=a - 2 {
                        let v = p.eval(&[a, b]);
                        prop_assert!(v >= 1 && v <= fam.bound.eval(&[a, b]));
                    }
                }
            }
        }
    }
}

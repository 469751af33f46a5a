//! Linear homogeneous equations `c_1 x_1 + ... + c_m x_m = 0` and their
//! positive integer solutions.

use std::fmt;
use std::ops::{ControlFlow, Range};
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest coefficient count accepted by the exhaustive subset scan in
/// [`LinearEquation::is_regular`].
pub const MAX_SUBSET_SCAN: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EquationError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("coefficient of variable {0} is zero")]
    ZeroCoefficient(String),
    #[error("an equation needs at least 2 variables, got {0}")]
    TooFewVariables(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("valuation of zero is undefined")]
    ZeroValuation,
    #[error("{0} is not a prime")]
    NotPrime(u64),
}

/// A homogeneous linear equation with nonzero integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearEquation {
    coeffs: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    display: Option<String>,
}

/// A positive integer solution of an equation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SolutionTuple {
    pub values: Vec<u64>,
}

/// Coefficients of an equation brought to the shape
/// `a_1 x_1 + ... + a_{m-1} x_{m-1} = a_m x_m` with every `a_i > 0` and
/// `a_1 <= ... <= a_{m-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneSidedForm {
    /// Sorted left-hand coefficients.
    pub lhs: Vec<u64>,
    pub rhs: u64,
}

impl OneSidedForm {
    /// `S`, the sum of the left-hand coefficients.
    pub fn lhs_sum(&self) -> u64 {
        self.lhs.iter().sum()
    }

    pub fn smallest(&self) -> u64 {
        self.lhs[0]
    }
}

impl LinearEquation {
    pub fn new(coeffs: Vec<i64>) -> Result<Self, EquationError> {
        if coeffs.len() < 2 {
            return Err(EquationError::TooFewVariables(coeffs.len()));
        }
        if let Some(i) = coeffs.iter().position(|&c| c == 0) {
            return Err(EquationError::ZeroCoefficient(format!("x{}", i + 1)));
        }
        Ok(Self { coeffs, display: None })
    }

    pub fn with_display(mut self, display: impl Into<String>) -> Self {
        self.display = Some(display.into());
        self
    }

    /// `ax + by = cz`.
    pub fn three_term(a: i64, b: i64, c: i64) -> Result<Self, EquationError> {
        Ok(Self::new(vec![a, b, -c])?.with_display(format!("{a}x+{b}y={c}z")))
    }

    /// `a(x - y) = bz`.
    pub fn difference(a: i64, b: i64) -> Result<Self, EquationError> {
        Ok(Self::new(vec![a, -a, -b])?.with_display(format!("{a}(x-y)={b}z")))
    }

    /// `a(x + y) = bz`.
    pub fn sum(a: i64, b: i64) -> Result<Self, EquationError> {
        Ok(Self::new(vec![a, a, -b])?.with_display(format!("{a}(x+y)={b}z")))
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn arity(&self) -> usize {
        self.coeffs.len()
    }

    pub fn display_form(&self) -> Option<&str> {
        self.display.as_deref()
    }

    /// gcd of the absolute values of the coefficients. Equations are never
    /// divided through by it.
    pub fn coefficient_gcd(&self) -> u64 {
        self.coeffs
            .iter()
            .fold(0u64, |g, &c| g.gcd(&c.unsigned_abs()))
    }

    pub fn is_coprime(&self) -> bool {
        self.coefficient_gcd() == 1
    }

    /// Rado's criterion: regular iff some nonempty subset of the coefficients
    /// sums to zero.
    pub fn is_regular(&self) -> Result<bool, EquationError> {
        let m = self.coeffs.len();
        if m > MAX_SUBSET_SCAN {
            return Err(EquationError::Unsupported(format!(
                "subset scan over {m} coefficients (limit {MAX_SUBSET_SCAN})"
            )));
        }
        Ok((1u64..(1u64 << m)).any(|mask| {
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &c)| c as i128)
                .sum::<i128>()
                == 0
        }))
    }

    /// Rado's 2-regularity criterion for `m >= 3`: both signs occur.
    pub fn is_two_regular(&self) -> Result<bool, EquationError> {
        if self.coeffs.len() < 3 {
            return Err(EquationError::Unsupported(
                "2-regularity criterion needs at least 3 variables".into(),
            ));
        }
        Ok(self.has_mixed_signs())
    }

    pub fn has_mixed_signs(&self) -> bool {
        self.coeffs.iter().any(|&c| c > 0) && self.coeffs.iter().any(|&c| c < 0)
    }

    /// Returns the one-sided form when exactly one coefficient has a sign
    /// opposite to all the others.
    pub fn one_sided_form(&self) -> Option<OneSidedForm> {
        let pos = self.coeffs.iter().filter(|&&c| c > 0).count();
        let neg = self.coeffs.len() - pos;
        let lone_negative = if neg == 1 {
            true
        } else if pos == 1 {
            false
        } else {
            return None;
        };
        let mut lhs = Vec::with_capacity(self.coeffs.len() - 1);
        let mut rhs = 0;
        for &c in &self.coeffs {
            if (c < 0) == lone_negative {
                rhs = c.unsigned_abs();
            } else {
                lhs.push(c.unsigned_abs());
            }
        }
        lhs.sort_unstable();
        Some(OneSidedForm { lhs, rhs })
    }

    /// `Σ c_i v_i`.
    pub fn evaluate(&self, values: &[u64]) -> i128 {
        self.coeffs
            .iter()
            .zip(values)
            .map(|(&c, &v)| c as i128 * v as i128)
            .sum()
    }

    pub fn is_solution(&self, values: &[u64]) -> bool {
        values.len() == self.coeffs.len()
            && values.iter().all(|&v| v >= 1)
            && self.evaluate(values) == 0
    }

    /// All positive solutions with every coordinate in `[1, n]`, in
    /// lexicographic order of `(x_1, ..., x_{m-1})`.
    pub fn enumerate_solutions(&self, n: u64) -> Solutions {
        let mut out = Vec::new();
        self.visit_solutions(n, |s| out.push(SolutionTuple { values: s.to_vec() }));
        Solutions { inner: out.into_iter() }
    }

    /// Streams solutions to `visit` without allocating per tuple.
    pub fn visit_solutions<F: FnMut(&[u64])>(&self, n: u64, visit: F) {
        self.visit_solutions_in(n, 1..n.saturating_add(1), visit)
    }

    /// Like [`visit_solutions`](Self::visit_solutions) but restricted to
    /// `x_1 ∈ first`. Disjoint ranges partition the solution set, which lets
    /// callers split clause generation across workers.
    pub fn visit_solutions_in<F: FnMut(&[u64])>(&self, n: u64, first: Range<u64>, mut visit: F) {
        let _ = self.try_visit_solutions_in(n, first, |s| {
            visit(s);
            ControlFlow::Continue(())
        });
    }

    /// Early-exit variant of [`visit_solutions_in`](Self::visit_solutions_in).
    pub fn try_visit_solutions_in<F>(&self, n: u64, first: Range<u64>, mut visit: F) -> ControlFlow<()>
    where
        F: FnMut(&[u64]) -> ControlFlow<()>,
    {
        if n == 0 {
            return ControlFlow::Continue(());
        }
        let m = self.coeffs.len();
        let mut buf = vec![0u64; m];
        if m == 2 {
            return self.last_two(n, 0, &mut buf, Some(first), &mut visit);
        }
        let lo = first.start.max(1);
        let hi = first.end.min(n + 1);
        for x1 in lo..hi {
            buf[0] = x1;
            self.outer(n, 1, self.coeffs[0] as i128 * x1 as i128, &mut buf, &mut visit)?;
        }
        ControlFlow::Continue(())
    }

    fn outer<F>(&self, n: u64, pos: usize, partial: i128, buf: &mut [u64], visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[u64]) -> ControlFlow<()>,
    {
        let m = self.coeffs.len();
        if pos == m - 2 {
            return self.last_two(n, partial, buf, None, visit);
        }
        let c = self.coeffs[pos] as i128;
        for x in 1..=n {
            buf[pos] = x;
            self.outer(n, pos + 1, partial + c * x as i128, buf, visit)?;
        }
        ControlFlow::Continue(())
    }

    /// Solves `c x + d w = -partial` over `x, w ∈ [1, n]` for the last two
    /// coordinates, walking `x` along its residue class.
    fn last_two<F>(
        &self,
        n: u64,
        partial: i128,
        buf: &mut [u64],
        restrict: Option<Range<u64>>,
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[u64]) -> ControlFlow<()>,
    {
        let m = self.coeffs.len();
        let c = self.coeffs[m - 2] as i128;
        let d = self.coeffs[m - 1] as i128;
        let rhs = -partial;
        let g = c.gcd(&d);
        if rhs % g != 0 {
            return ControlFlow::Continue(());
        }
        let modulus = (d / g).abs();
        // x ≡ x0 (mod modulus)
        let x0 = if modulus == 1 {
            0
        } else {
            let inv = mod_inverse((c / g).rem_euclid(modulus), modulus);
            ((rhs / g).rem_euclid(modulus) * inv).rem_euclid(modulus)
        };
        // w = (rhs - c x) / d ∈ [1, n]  <=>  c x ∈ [rhs - d n, rhs - d] (d > 0)
        let n_i = n as i128;
        let (wlo, whi) = if d > 0 { (d, d * n_i) } else { (d * n_i, d) };
        let (cx_lo, cx_hi) = (rhs - whi, rhs - wlo);
        let (mut xlo, mut xhi) = if c > 0 {
            (ceil_div(cx_lo, c), floor_div(cx_hi, c))
        } else {
            (ceil_div(cx_hi, c), floor_div(cx_lo, c))
        };
        xlo = xlo.max(1);
        xhi = xhi.min(n_i);
        if let Some(r) = restrict {
            xlo = xlo.max(r.start as i128);
            xhi = xhi.min(r.end as i128 - 1);
        }
        if xlo > xhi {
            return ControlFlow::Continue(());
        }
        let mut x = xlo + (x0 - xlo).rem_euclid(modulus);
        while x <= xhi {
            let w = (rhs - c * x) / d;
            debug_assert!((1..=n_i).contains(&w));
            buf[m - 2] = x as u64;
            buf[m - 1] = w as u64;
            debug_assert!(self.evaluate(buf) == 0);
            visit(buf)?;
            x += modulus;
        }
        ControlFlow::Continue(())
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b) - if b < 0 && a.rem_euclid(b) != 0 { 1 } else { 0 }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

fn mod_inverse(a: i128, m: i128) -> i128 {
    let e = a.extended_gcd(&m);
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m)
}

/// Iterator returned by [`LinearEquation::enumerate_solutions`].
pub struct Solutions {
    inner: std::vec::IntoIter<SolutionTuple>,
}

impl Iterator for Solutions {
    type Item = SolutionTuple;

    fn next(&mut self) -> Option<SolutionTuple> {
        self.inner.next()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

impl ExactSizeIterator for Solutions {}

impl fmt::Display for LinearEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = &self.display {
            return f.write_str(d);
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if !first {
                f.write_str(if c < 0 { " - " } else { " + " })?;
            } else if c < 0 {
                f.write_str("-")?;
            }
            first = false;
            let a = c.unsigned_abs();
            if a != 1 {
                write!(f, "{a}")?;
            }
            write!(f, "x{}", i + 1)?;
        }
        f.write_str(" = 0")
    }
}

impl FromStr for LinearEquation {
    type Err = EquationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_equation(s)
    }
}

/// Parses `x+y=z`, `3(x-y)=2z`, `2x+3y=5z`, `x1+x2+x3=9x4`, or a raw
/// comma-separated coefficient list such as `1,1,-4`.
pub fn parse_equation(text: &str) -> Result<LinearEquation, EquationError> {
    let trimmed = text.trim();
    if !trimmed.contains('=') {
        return parse_coefficient_list(trimmed);
    }
    let mut p = Parser { src: trimmed.as_bytes(), pos: 0, vars: Vec::new() };
    let eq_at = trimmed.find('=').unwrap();
    if trimmed[eq_at + 1..].contains('=') {
        return Err(EquationError::Syntax { pos: eq_at, msg: "more than one '='".into() });
    }
    p.side(1, eq_at)?;
    p.expect(b'=')?;
    p.side(-1, trimmed.len())?;
    let names: Vec<String> = p.vars.iter().map(|(n, _)| n.clone()).collect();
    for (name, c) in &p.vars {
        if *c == 0 {
            return Err(EquationError::ZeroCoefficient(name.clone()));
        }
    }
    if names.len() < 2 {
        return Err(EquationError::TooFewVariables(names.len()));
    }
    let coeffs = p.vars.into_iter().map(|(_, c)| c).collect();
    Ok(LinearEquation::new(coeffs)?.with_display(trimmed.replace(' ', "")))
}

fn parse_coefficient_list(s: &str) -> Result<LinearEquation, EquationError> {
    let mut coeffs = Vec::new();
    let mut offset = 0;
    for part in s.split(',') {
        let t = part.trim();
        let c: i64 = t.parse().map_err(|_| EquationError::Syntax {
            pos: offset,
            msg: format!("expected an integer coefficient, found {t:?}"),
        })?;
        coeffs.push(c);
        offset += part.len() + 1;
    }
    LinearEquation::new(coeffs)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: Vec<(String, i64)>,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, EquationError> {
        Err(EquationError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<(), EquationError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", b as char))
        }
    }

    fn add(&mut self, name: String, c: i64) {
        match self.vars.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => *v += c,
            None => self.vars.push((name, c)),
        }
    }

    /// side := term (('+'|'-') term)*
    fn side(&mut self, sign: i64, end: usize) -> Result<(), EquationError> {
        let mut s = sign;
        if let Some(b'-') = self.peek() {
            self.pos += 1;
            s = -sign;
        } else if let Some(b'+') = self.peek() {
            self.pos += 1;
        }
        self.term(s, end)?;
        loop {
            match self.peek() {
                Some(b'+') if self.pos < end => {
                    self.pos += 1;
                    self.term(sign, end)?;
                }
                Some(b'-') if self.pos < end => {
                    self.pos += 1;
                    self.term(-sign, end)?;
                }
                _ => return Ok(()),
            }
        }
    }

    /// term := [int ['*']] (var | '(' side ')')
    fn term(&mut self, sign: i64, end: usize) -> Result<(), EquationError> {
        let scale = match self.number()? {
            Some(k) => {
                if self.peek() == Some(b'*') {
                    self.pos += 1;
                }
                k
            }
            None => 1,
        };
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let close = self.matching_paren()?;
                self.side(sign * scale, close)?;
                self.expect(b')')
            }
            Some(b) if b.is_ascii_alphabetic() => {
                let name = self.ident();
                self.add(name, sign * scale);
                Ok(())
            }
            _ if self.pos >= end => self.err("unexpected end of expression"),
            _ => self.err("expected a variable or '('"),
        }
    }

    fn matching_paren(&self) -> Result<usize, EquationError> {
        let mut depth = 1;
        for (i, &b) in self.src[self.pos..].iter().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(self.pos + i);
                    }
                }
                _ => {}
            }
        }
        self.err("unbalanced '('")
    }

    fn number(&mut self) -> Result<Option<i64>, EquationError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse() {
            Ok(v) => Ok(Some(v)),
            Err(_) => Err(EquationError::Syntax { pos: start, msg: "coefficient overflows".into() }),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }
}

/// Largest `e` with `p^e | x`, for a prime `p`.
pub fn padic_valuation(x: i64, p: u64) -> Result<u32, EquationError> {
    if !is_prime(p) {
        return Err(EquationError::NotPrime(p));
    }
    base_valuation(x, p)
}

/// Largest `e` with `a^e | x` for any base `a >= 2` (prime or not).
pub fn base_valuation(x: i64, a: u64) -> Result<u32, EquationError> {
    if x == 0 {
        return Err(EquationError::ZeroValuation);
    }
    if a < 2 {
        return Err(EquationError::Unsupported(format!("valuation base {a}")));
    }
    let mut v = x.unsigned_abs();
    let mut e = 0;
    while v % a == 0 {
        v /= a;
        e += 1;
    }
    Ok(e)
}

/// Same as [`base_valuation`] for a positive argument, without the error path.
pub(crate) fn val(x: u64, a: u64) -> u32 {
    debug_assert!(x > 0 && a >= 2);
    let mut v = x;
    let mut e = 0;
    while v % a == 0 {
        v /= a;
        e += 1;
    }
    e
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn primes_up_to(limit: u64) -> impl Iterator<Item = u64> {
    (2..=limit).filter(|&p| is_prime(p))
}

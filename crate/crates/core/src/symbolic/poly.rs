use std::fmt;
use std::ops::{Add, Neg, Sub};

use super::SymbolicError;

/// Highest total degree a [`Polynomial`] may reach.
pub const MAX_DEGREE: usize = 4;
const SLOTS: usize = (MAX_DEGREE + 1) * (MAX_DEGREE + 2) / 2;

fn slot(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

fn exponents(s: usize) -> (usize, usize) {
    let mut d = 0;
    while (d + 1) * (d + 2) / 2 <= s {
        d += 1;
    }
    let j = s - d * (d + 1) / 2;
    (d - j, j)
}

/// An integer polynomial in at most two parameters of total degree at most
/// [`MAX_DEGREE`]. Coefficients are stored densely, so equal polynomials
/// have equal representations.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Polynomial {
    /// Coefficient of `a^i b^j` at `slot(i, j)`; graded by total degree.
    coeffs: [i64; SLOTS],
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        Self::monomial(c, 0, 0).expect("degree 0")
    }

    /// The first parameter.
    pub fn a() -> Self {
        Self::monomial(1, 1, 0).expect("degree 1")
    }

    /// The second parameter.
    pub fn b() -> Self {
        Self::monomial(1, 0, 1).expect("degree 1")
    }

    /// `c a^i b^j`.
    pub fn monomial(c: i64, i: usize, j: usize) -> Result<Self, SymbolicError> {
        if i + j > MAX_DEGREE {
            return Err(SymbolicError::Degree(i + j));
        }
        let mut p = Self::zero();
        p.coeffs[slot(i, j)] = c;
        Ok(p)
    }

    /// Builds `sum c_i a^i` from coefficients in increasing degree.
    pub fn from_univariate(coeffs: &[i64]) -> Result<Self, SymbolicError> {
        let mut p = Self::zero();
        for (i, &c) in coeffs.iter().enumerate() {
            p = p + Self::monomial(c, i, 0)?;
        }
        Ok(p)
    }

    pub fn coeff(&self, i: usize, j: usize) -> i64 {
        if i + j > MAX_DEGREE {
            0
        } else {
            self.coeffs[slot(i, j)]
        }
    }

    /// Nonzero terms as `(coefficient, i, j)`, lowest degree first.
    pub fn terms(&self) -> impl Iterator<Item = (i64, usize, usize)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0).map(|(s, &c)| {
            let (i, j) = exponents(s);
            (c, i, j)
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms().map(|(_, i, j)| i + j).max()
    }

    /// True when the second parameter does not occur.
    pub fn is_univariate(&self) -> bool {
        self.terms().all(|(_, _, j)| j == 0)
    }

    /// Coefficients in the first parameter, increasing degree, trailing zeros
    /// removed. Only meaningful when [`Self::is_univariate`].
    pub fn univariate_coeffs(&self) -> Vec<i64> {
        let mut v: Vec<i64> = (0..=MAX_DEGREE).map(|i| self.coeff(i, 0)).collect();
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    pub fn scale(&self, k: i64) -> Self {
        let mut p = *self;
        for c in &mut p.coeffs {
            *c = c.checked_mul(k).expect("coefficient overflow");
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SymbolicError> {
        let mut out = Self::zero();
        for (c1, i1, j1) in self.terms() {
            for (c2, i2, j2) in other.terms() {
                let (i, j) = (i1 + i2, j1 + j2);
                if i + j > MAX_DEGREE {
                    return Err(SymbolicError::Degree(i + j));
                }
                let c = c1.checked_mul(c2).expect("coefficient overflow");
                out.coeffs[slot(i, j)] = out.coeffs[slot(i, j)].checked_add(c).expect("coefficient overflow");
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Self, SymbolicError> {
        let mut out = Self::constant(1);
        for _ in 0..e {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Evaluates at `values[0]` for the first parameter and `values[1]` (or
    /// 0) for the second.
    pub fn eval(&self, values: &[i64]) -> i128 {
        let a = values.first().copied().unwrap_or(0) as i128;
        let b = values.get(1).copied().unwrap_or(0) as i128;
        self.terms().map(|(c, i, j)| c as i128 * a.pow(i as u32) * b.pow(j as u32)).sum()
    }

    fn leading(&self) -> Option<(i64, usize, usize)> {
        // graded order: highest total degree, then highest power of the first parameter
        self.terms().max_by_key(|&(_, i, j)| (i + j, i))
    }

    /// `self / d` when the division is exact over the integers.
    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        let (dc, di, dj) = d.leading()?;
        let mut rem = *self;
        let mut quot = Self::zero();
        while let Some((c, i, j)) = rem.leading() {
            if i < di || j < dj || c % dc != 0 {
                return None;
            }
            let t = Self::monomial(c / dc, i - di, j - dj).ok()?;
            quot = quot + t;
            rem = rem - t.mul(d).ok()?;
        }
        Some(quot)
    }

    /// Renders with the given parameter names.
    pub fn display_with(&self, names: &[String]) -> String {
        let name = |k: usize| names.get(k).map(String::as_str).unwrap_or(["a", "b"][k]);
        let mut terms: Vec<(i64, usize, usize)> = self.terms().collect();
        if terms.is_empty() {
            return "0".into();
        }
        terms.reverse();
        let mut s = String::new();
        for (n, (c, i, j)) in terms.into_iter().enumerate() {
            let vars = [(0, i), (1, j)]
                .into_iter()
                .filter(|&(_, e)| e > 0)
                .map(|(k, e)| if e > 1 { format!("{}^{e}", name(k)) } else { name(k).to_string() })
                .collect::<Vec<_>>()
                .join("*");
            let sign = if c < 0 { "-" } else if n > 0 { "+" } else { "" };
            let mag = c.unsigned_abs();
            s.push_str(sign);
            if vars.is_empty() || mag != 1 {
                s.push_str(&mag.to_string());
                if !vars.is_empty() {
                    s.push('*');
                }
            }
            s.push_str(&vars);
        }
        s
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&[]))
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

impl Add for Polynomial {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (c, r) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *c = c.checked_add(r).expect("coefficient overflow");
        }
        self
    }
}

impl Sub for Polynomial {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + -rhs
    }
}

impl Neg for Polynomial {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1)
    }
}

/// Parses expressions such as `a^3+(a-1)^2` or `2*m - 3` over the given
/// parameter names. Juxtaposition (`2a`, `a(b+1)`) is multiplication.
pub fn parse_polynomial(text: &str, names: &[String]) -> Result<Polynomial, SymbolicError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens: &tokens, pos: 0, names, text };
    let poly = p.expr()?;
    if p.pos != tokens.len() {
        return Err(p.error("trailing input"));
    }
    Ok(poly)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(i64),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, SymbolicError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_digit() {
            let mut v: i64 = 0;
            while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                v = v
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(d as i64))
                    .ok_or_else(|| SymbolicError::Parse { text: text.into(), msg: "number too large".into() })?;
                chars.next();
            }
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek().filter(|c| c.is_alphanumeric() || **c == '_') {
                s.push(c);
                chars.next();
            }
            out.push(Tok::Ident(s));
        } else if "+-*^()−".contains(c) {
            out.push(Tok::Sym(if c == '−' { '-' } else { c }));
            chars.next();
        } else {
            return Err(SymbolicError::Parse { text: text.into(), msg: format!("unexpected `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Tok],
    pos: usize,
    names: &'a [String],
    text: &'a str,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> SymbolicError {
        SymbolicError::Parse { text: self.text.into(), msg: format!("{msg} at token {}", self.pos) }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Polynomial, SymbolicError> {
        let mut acc = if self.eat('-') { -self.term()? } else { self.term()? };
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, SymbolicError> {
        let mut acc = self.power()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.power()?)?;
            } else if matches!(self.peek(), Some(Tok::Num(_) | Tok::Ident(_) | Tok::Sym('('))) {
                acc = acc.mul(&self.power()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<Polynomial, SymbolicError> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.peek() {
                Some(&Tok::Num(e)) if e <= MAX_DEGREE as i64 => {
                    self.pos += 1;
                    base.pow(e as u32)
                }
                _ => Err(self.error("expected a small exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, SymbolicError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Polynomial::constant(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match self.names.iter().position(|n| *n == name) {
                    Some(0) => Ok(Polynomial::a()),
                    Some(1) => Ok(Polynomial::b()),
                    _ => Err(self.error(&format!("unknown parameter `{name}`"))),
                }
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                Ok(-self.power()?)
            }
            _ => Err(self.error("expected a term")),
        }
    }
}

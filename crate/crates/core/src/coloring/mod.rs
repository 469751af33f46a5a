//! Colorings of `[1, n]`, monochromatic-solution checks, and the explicit
//! solution-free colorings behind the lower bounds and non-regularity rules.

mod cycle;
mod lemmas;

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equation::{EquationError, LinearEquation, SolutionTuple};

pub use cycle::CycleGraph;
pub use lemmas::{
    chi_aminus1_coloring, logd_coloring, logd_hypothesis, product_coloring_for_setup, product_coloring_unique_prime, unique_prime_setups,
    va_coloring, vp_modk_coloring, LogVariant, ProductCase, ProductColoring, UniquePrimeSetup, PRIME_SEARCH_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColoringError {
    #[error("coloring has {len} entries but n = {n}")]
    LengthMismatch { n: usize, len: usize },
    #[error("integer {index} has color {color}, outside 1..={k}")]
    ColorOutOfRange { index: usize, color: u32, k: u32 },
    #[error("domain [1, {n}] exceeds the construction's bound {bound}")]
    DomainTooLarge { n: u64, bound: u64 },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("hypothesis fails: {0}")]
    HypothesisFails(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Equation(#[from] EquationError),
}

/// A total map `[1, n] -> [1, k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawColoring", into = "RawColoring")]
pub struct Coloring {
    k: u32,
    colors: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct RawColoring {
    n: usize,
    k: u32,
    colors: Vec<u32>,
}

impl TryFrom<RawColoring> for Coloring {
    type Error = ColoringError;

    fn try_from(raw: RawColoring) -> Result<Self, Self::Error> {
        if raw.colors.len() != raw.n {
            return Err(ColoringError::LengthMismatch { n: raw.n, len: raw.colors.len() });
        }
        Coloring::new(raw.k, raw.colors)
    }
}

impl From<Coloring> for RawColoring {
    fn from(c: Coloring) -> Self {
        RawColoring { n: c.colors.len(), k: c.k, colors: c.colors }
    }
}

impl Coloring {
    /// `colors[j - 1]` is the color of `j`.
    pub fn new(k: u32, colors: Vec<u32>) -> Result<Self, ColoringError> {
        if let Some((i, &c)) = colors.iter().enumerate().find(|(_, &c)| c == 0 || c > k) {
            return Err(ColoringError::ColorOutOfRange { index: i + 1, color: c, k });
        }
        Ok(Self { k, colors })
    }

    pub(crate) fn from_fn(n: u64, k: u32, mut f: impl FnMut(u64) -> u32) -> Self {
        let colors = (1..=n).map(|j| f(j)).collect();
        Self { k, colors }
    }

    pub fn n(&self) -> usize {
        self.colors.len()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    /// Color of integer `j`, `1 <= j <= n`.
    pub fn color(&self, j: u64) -> u32 {
        self.colors[(j - 1) as usize]
    }

    /// Number of distinct colors actually used.
    pub fn palette_size(&self) -> usize {
        let mut seen = vec![false; self.k as usize + 1];
        self.colors.iter().for_each(|&c| seen[c as usize] = true);
        seen.iter().filter(|&&s| s).count()
    }

    /// The restriction to `[1, m]`.
    pub fn restrict(&self, m: usize) -> Coloring {
        Coloring { k: self.k, colors: self.colors[..m.min(self.colors.len())].to_vec() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coloring serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// A monochromatic solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub tuple: SolutionTuple,
    pub color: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Verification {
    Valid,
    Witness(Witness),
}

impl Verification {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verification::Valid)
    }
}

/// Scans every solution in `[1, n]` and returns the first monochromatic one
/// in enumeration order.
pub fn verify_coloring(eq: &LinearEquation, coloring: &Coloring) -> Verification {
    let n = coloring.n() as u64;
    let mut found = None;
    let _ = eq.try_visit_solutions_in(n, 1..n + 1, |s| {
        let c = coloring.color(s[0]);
        if s[1..].iter().all(|&v| coloring.color(v) == c) {
            found = Some(Witness { tuple: SolutionTuple { values: s.to_vec() }, color: c });
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    match found {
        Some(w) => Verification::Witness(w),
        None => Verification::Valid,
    }
}

use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use super::cycle::{mul_mod, CycleGraph};
use super::{Coloring, ColoringError};
use crate::equation::{is_prime, primes_up_to, val, LinearEquation, OneSidedForm};

/// Primes searched when looking for a valuation pattern.
pub const PRIME_SEARCH_LIMIT: u64 = 100;

/// Colors `i` by `v_a(i) mod k`. Avoids monochromatic solutions of
/// `a(x - y) = bz` on `[1, a^k - 1]` whenever `gcd(a, b) = 1`.
pub fn va_coloring(a: u64, k: u32, n: u64) -> Result<Coloring, ColoringError> {
    if a < 2 || k == 0 {
        return Err(ColoringError::Parameter(format!("a = {a}, k = {k}")));
    }
    let bound = a.checked_pow(k).map(|v| v - 1).unwrap_or(u64::MAX);
    if n > bound {
        return Err(ColoringError::DomainTooLarge { n, bound });
    }
    Ok(Coloring::from_fn(n, k, |i| val(i, a) % k + 1))
}

/// The three-class coloring of `[1, a^3 + (a-1)^2 - 1]` avoiding
/// monochromatic solutions of `a(x - y) = (a - 1)z`. Classes 0, 1, 2 map to
/// colors 1, 2, 3.
pub fn chi_aminus1_coloring(a: u64) -> Result<Coloring, ColoringError> {
    if a < 3 {
        return Err(ColoringError::Parameter(format!("a = {a} (need a >= 3)")));
    }
    let n = a * a * a + (a - 1) * (a - 1) - 1;
    Ok(Coloring::from_fn(n, 3, |i| chi_aminus1_class(a, i) + 1))
}

pub(crate) fn chi_aminus1_class(a: u64, i: u64) -> u32 {
    match val(i, a) {
        2 => 0,
        0 if i < a * a - a || i > a * a * a - a => 0,
        1 => 1,
        _ => 2,
    }
}

/// Colors by `v_p(i) mod k`.
pub fn vp_modk_coloring(p: u64, k: u32, n: u64) -> Result<Coloring, ColoringError> {
    if !is_prime(p) {
        return Err(ColoringError::Parameter(format!("{p} is not prime")));
    }
    if k == 0 {
        return Err(ColoringError::Parameter("k = 0".into()));
    }
    Ok(Coloring::from_fn(n, k, |i| val(i, p) % k + 1))
}

/// Which of the two logarithmic colorings to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogVariant {
    /// Base `d = (S / a_m)^(1/(k-1)) > 1`; needs `S a_m^(k-2) <= a_1^(k-1)`.
    Expanding,
    /// Base `d = (a_1 / a_m)^(1/(k-1)) < 1`; needs `S^(k-1) <= a_1 a_m^(k-2)`.
    Contracting,
}

impl LogVariant {
    pub fn inequality(self) -> &'static str {
        match self {
            LogVariant::Expanding => "S <= a_1^(k-1) / a_m^(k-2)",
            LogVariant::Contracting => "S <= a_1^(1/(k-1)) * a_m^(1-1/(k-1))",
        }
    }
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

/// Checks the hypothesis of the chosen logarithmic coloring in exact integer
/// arithmetic.
pub fn logd_hypothesis(form: &OneSidedForm, k: u32, variant: LogVariant) -> Result<(), ColoringError> {
    if k < 2 {
        return Err(ColoringError::Parameter(format!("k = {k} (need k >= 2)")));
    }
    if form.lhs.len() < 2 {
        return Err(ColoringError::Parameter("need at least two left-hand terms".into()));
    }
    let s = big(form.lhs_sum());
    let a1 = big(form.smallest());
    let am = big(form.rhs);
    let holds = match variant {
        LogVariant::Expanding => &s * Pow::pow(&am, k - 2) <= Pow::pow(&a1, k - 1),
        LogVariant::Contracting => Pow::pow(&s, k - 1) <= &a1 * Pow::pow(&am, k - 2),
    };
    if holds {
        Ok(())
    } else {
        Err(ColoringError::HypothesisFails(format!(
            "{} with S = {}, a_1 = {}, a_m = {}, k = {k}",
            variant.inequality(),
            form.lhs_sum(),
            form.smallest(),
            form.rhs
        )))
    }
}

/// `χ(i) = ⌈log_d i⌉ mod k` restricted to `[1, n]`, evaluated with integer
/// power comparisons only.
pub fn logd_coloring(eq: &LinearEquation, k: u32, variant: LogVariant, n: u64) -> Result<Coloring, ColoringError> {
    let form = eq
        .one_sided_form()
        .ok_or_else(|| ColoringError::NotApplicable(format!("{eq} is not of the form a_1x_1+...=a_m x_m")))?;
    logd_hypothesis(&form, k, variant)?;
    let kk = k as u64;
    let e = k - 1;
    let mut colors = Vec::with_capacity(n as usize);
    match variant {
        LogVariant::Expanding => {
            // ⌈log_d i⌉ = min { t >= 0 : S^t >= i^(k-1) a_m^t }
            let s = big(form.lhs_sum());
            let am = big(form.rhs);
            let (mut st, mut amt, mut t) = (BigUint::one(), BigUint::one(), 0u64);
            for i in 1..=n {
                let ie = Pow::pow(&big(i), e);
                while st < &ie * &amt {
                    st *= &s;
                    amt *= &am;
                    t += 1;
                }
                colors.push((t % kk) as u32 + 1);
            }
        }
        LogVariant::Contracting => {
            // ⌈log_d i⌉ = -⌊log_D i⌋ with D = 1/d,
            // ⌊log_D i⌋ = max { t >= 0 : a_m^t <= i^(k-1) a_1^t }
            let a1 = big(form.smallest());
            let am = big(form.rhs);
            let (mut amt, mut a1t, mut t) = (am.clone(), a1.clone(), 0u64);
            for i in 1..=n {
                let ie = Pow::pow(&big(i), e);
                while amt <= &ie * &a1t {
                    amt *= &am;
                    a1t *= &a1;
                    t += 1;
                }
                colors.push(((kk - t % kk) % kk) as u32 + 1);
            }
        }
    }
    Coloring::new(k, colors)
}

/// The two valuation patterns that yield product colorings for
/// `ax + by + cz = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductCase {
    /// `0 = v_p(a) = v_p(b) = v_p(a + b) < v_p(c) = r`, multiplier `-a/b`.
    UnitPairSum,
    /// `0 = v_p(a) < v_p(b) = v_p(c) = v_p(b + c) = r`, multiplier `-b'/c'`
    /// with `b = p^r b'`, `c = p^r c'`. The unit group is taken mod `p^r`.
    SharedValuation,
}

/// A prime and role assignment satisfying one of the [`ProductCase`]
/// patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquePrimeSetup {
    pub case: ProductCase,
    pub prime: u64,
    pub r: u32,
    /// Indices of the coefficients playing `a`, `b`, `c`.
    pub roles: [usize; 3],
    /// The multiplier `g`, reduced mod `p^r`.
    pub multiplier: u64,
    pub multiplier_order: u64,
}

impl UniquePrimeSetup {
    pub fn modulus(&self) -> u64 {
        self.prime.pow(self.r)
    }

    /// Colors in the resulting product coloring: 4 for even multiplier
    /// order, 6 otherwise.
    pub fn color_count(&self) -> u32 {
        if self.multiplier_order % 2 == 0 {
            4
        } else {
            6
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductColoring {
    pub coloring: Coloring,
    pub setup: UniquePrimeSetup,
    pub graph: CycleGraph,
    /// Set for [`ProductCase::SharedValuation`], whose modulus exponent is
    /// taken to be `r`.
    pub modulus_exponent_assumed: bool,
}

fn v_signed(x: i64, p: u64) -> u32 {
    val(x.unsigned_abs(), p)
}

fn inverse_mod(a: u64, m: u64) -> u64 {
    use num_integer::Integer;
    let e = (a as i128).extended_gcd(&(m as i128));
    e.x.rem_euclid(m as i128) as u64
}

fn residue(x: i64, m: u64) -> u64 {
    x.rem_euclid(m as i64) as u64
}

/// Every prime `p <= 100` and role assignment for which the chosen pattern
/// holds. Returns nothing for regular equations or arities other than 3.
pub fn unique_prime_setups(eq: &LinearEquation, case: ProductCase) -> Vec<UniquePrimeSetup> {
    let c = eq.coeffs();
    if c.len() != 3 || eq.is_regular().unwrap_or(true) {
        return Vec::new();
    }
    let roles: [[usize; 3]; 3] = [[0, 1, 2], [0, 2, 1], [1, 2, 0]];
    let mut out = Vec::new();
    for p in primes_up_to(PRIME_SEARCH_LIMIT) {
        for perm in roles {
            let setup = match case {
                ProductCase::UnitPairSum => {
                    // a, b = perm[0], perm[1]; c = perm[2]
                    let (a, b, cc) = (c[perm[0]], c[perm[1]], c[perm[2]]);
                    let r = v_signed(cc, p);
                    if v_signed(a, p) != 0 || v_signed(b, p) != 0 || a + b == 0 || v_signed(a + b, p) != 0 || r == 0 {
                        continue;
                    }
                    let m = p.pow(r);
                    let g = mul_mod(residue(-a, m), inverse_mod(residue(b, m), m), m);
                    (perm, r, g)
                }
                ProductCase::SharedValuation => {
                    // a = perm[2]; b, c = perm[0], perm[1]
                    let (a, b, cc) = (c[perm[2]], c[perm[0]], c[perm[1]]);
                    let r = v_signed(b, p);
                    if v_signed(a, p) != 0 || r == 0 || v_signed(cc, p) != r || b + cc == 0 || v_signed(b + cc, p) != r {
                        continue;
                    }
                    let m = p.pow(r);
                    let pr = m as i64;
                    let g = mul_mod(residue(-(b / pr), m), inverse_mod(residue(cc / pr, m), m), m);
                    ([perm[2], perm[0], perm[1]], r, g)
                }
            };
            let (roles, r, g) = setup;
            let modulus = p.pow(r);
            if g == 1 % modulus {
                continue;
            }
            out.push(UniquePrimeSetup {
                case,
                prime: p,
                r,
                roles,
                multiplier: g,
                multiplier_order: super::cycle::multiplicative_order(g, modulus),
            });
        }
    }
    out
}

/// Builds the product coloring `C = (C_1, C_2)` on `[1, n]` for the setup
/// with the fewest colors.
pub fn product_coloring_unique_prime(
    eq: &LinearEquation,
    case: ProductCase,
    n: u64,
) -> Result<ProductColoring, ColoringError> {
    if eq.arity() != 3 {
        return Err(ColoringError::NotApplicable("needs exactly three variables".into()));
    }
    if eq.is_regular()? {
        return Err(ColoringError::NotApplicable(format!("{eq} is regular")));
    }
    let mut best: Option<UniquePrimeSetup> = None;
    for setup in unique_prime_setups(eq, case) {
        if CycleGraph::new(setup.modulus(), setup.multiplier).is_err() {
            continue;
        }
        if best.as_ref().is_none_or(|s| setup.color_count() < s.color_count()) {
            best = Some(setup);
        }
    }
    let setup = best.ok_or_else(|| {
        ColoringError::NotApplicable(format!("no prime p <= {PRIME_SEARCH_LIMIT} satisfies the {case:?} pattern"))
    })?;
    product_coloring_for_setup(setup, n)
}

/// The product coloring for one specific prime and role assignment.
pub fn product_coloring_for_setup(setup: UniquePrimeSetup, n: u64) -> Result<ProductColoring, ColoringError> {
    let case = setup.case;
    let graph = CycleGraph::new(setup.modulus(), setup.multiplier)?;
    let pr = setup.modulus();
    let q = pr * pr;
    let palette = graph.palette_size() as u32;
    let coloring = Coloring::from_fn(n, 2 * palette, |x| {
        let mut reduced = x;
        while reduced % q == 0 {
            reduced /= q;
        }
        let (vertex, layer) = if reduced % pr != 0 { (reduced % pr, 1) } else { ((reduced / pr) % pr, 2) };
        (graph.color(vertex) as u32 - 1) * 2 + layer
    });
    Ok(ProductColoring {
        coloring,
        modulus_exponent_assumed: case == ProductCase::SharedValuation,
        setup,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::verify_coloring;
    use crate::parse_equation;

    #[test]
    fn va_colors_by_two_adic_valuation() {
        let c = va_coloring(2, 3, 7).unwrap();
        assert_eq!(c.colors(), &[1, 2, 1, 3, 1, 2, 1]);
        assert!(matches!(va_coloring(2, 3, 8), Err(ColoringError::DomainTooLarge { .. })));
    }

    #[test]
    fn va_coloring_lower_bounds() {
        let eq = parse_equation("3(x-y)=z").unwrap();
        assert!(verify_coloring(&eq, &va_coloring(3, 3, 26).unwrap()).is_valid());
        let eq = parse_equation("5(x-y)=2z").unwrap();
        assert!(verify_coloring(&eq, &va_coloring(5, 3, 124).unwrap()).is_valid());
        for a in 2..=5u64 {
            for b in 1..=4i64 {
                if num_integer::gcd(a as i64, b) != 1 {
                    continue;
                }
                let eq = LinearEquation::difference(a as i64, b).unwrap();
                for k in [2, 3] {
                    let c = va_coloring(a, k, a.pow(k) - 1).unwrap();
                    assert!(verify_coloring(&eq, &c).is_valid(), "a={a} b={b} k={k}");
                }
            }
        }
    }

    #[test]
    fn vp_coloring_examples() {
        let eq = parse_equation("x+2y=4z").unwrap();
        let c = vp_modk_coloring(2, 3, 1000).unwrap();
        assert_eq!(c.color(8), 1);
        assert!(verify_coloring(&eq, &c).is_valid());
        let eq = parse_equation("x+3y=9z").unwrap();
        assert!(verify_coloring(&eq, &vp_modk_coloring(3, 3, 500).unwrap()).is_valid());
        // the valuation pattern of x - y = 2z is (0, 0, 0) for p = 3, so the
        // v_3 coloring cannot work: 4 - 2 = 2 * 1 is monochromatic
        let eq = parse_equation("x-y=2z").unwrap();
        let c = vp_modk_coloring(3, 3, 26).unwrap();
        match verify_coloring(&eq, &c) {
            crate::coloring::Verification::Witness(w) => assert_eq!(w.tuple.values, vec![4, 2, 1]),
            v => panic!("{v:?}"),
        }
        assert!(vp_modk_coloring(4, 3, 10).is_err());
    }

    #[test]
    fn chi_coloring_examples() {
        assert_eq!(chi_aminus1_class(3, 9), 0);
        let c = chi_aminus1_coloring(3).unwrap();
        assert_eq!(c.n(), 30);
        assert!(verify_coloring(&parse_equation("3(x-y)=2z").unwrap(), &c).is_valid());
        let c = chi_aminus1_coloring(4).unwrap();
        assert_eq!(c.n(), 72);
        assert!(verify_coloring(&parse_equation("4(x-y)=3z").unwrap(), &c).is_valid());
        for a in 3..=8u64 {
            let eq = LinearEquation::difference(a as i64, a as i64 - 1).unwrap();
            assert!(verify_coloring(&eq, &chi_aminus1_coloring(a).unwrap()).is_valid(), "a={a}");
        }
        assert!(chi_aminus1_coloring(2).is_err());
    }

    #[test]
    fn log_colorings() {
        let eq = parse_equation("x+y=4z").unwrap();
        let c = logd_coloring(&eq, 3, LogVariant::Contracting, 1000).unwrap();
        assert!(verify_coloring(&eq, &c).is_valid());
        let eq = parse_equation("x1+x2+x3=9x4").unwrap();
        let c = logd_coloring(&eq, 3, LogVariant::Contracting, 500).unwrap();
        assert!(verify_coloring(&eq, &c).is_valid());
        let eq = parse_equation("4(x+y)=z").unwrap();
        let c = logd_coloring(&eq, 3, LogVariant::Expanding, 1000).unwrap();
        assert!(verify_coloring(&eq, &c).is_valid());
        let err = logd_coloring(&parse_equation("x+y=3z").unwrap(), 3, LogVariant::Contracting, 10).unwrap_err();
        assert!(matches!(err, ColoringError::HypothesisFails(_)));
    }

    #[test]
    fn log_colorings_on_grid_whenever_hypothesis_holds() {
        let mut checked = 0;
        for a in 1..=6 {
            for b in a..=6 {
                for c in 1..=24 {
                    let eq = LinearEquation::three_term(a, b, c).unwrap();
                    let form = eq.one_sided_form().unwrap();
                    for k in 3..=5 {
                        for variant in [LogVariant::Expanding, LogVariant::Contracting] {
                            if logd_hypothesis(&form, k, variant).is_ok() {
                                let col = logd_coloring(&eq, k, variant, 2000).unwrap();
                                assert!(verify_coloring(&eq, &col).is_valid(), "{eq} k={k} {variant:?}");
                                checked += 1;
                            }
                        }
                    }
                }
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn product_coloring_not_applicable_when_sum_divisible() {
        // 1 + 2 = 3 is divisible by 3
        let eq = LinearEquation::new(vec![1, 2, -9]).unwrap();
        assert!(unique_prime_setups(&eq, ProductCase::UnitPairSum).iter().all(|s| s.prime != 3));
    }

    #[test]
    fn product_colorings_verify() {
        for (text, case, colors) in [
            ("x+y=5z", ProductCase::UnitPairSum, 4),
            ("x+y=3z", ProductCase::UnitPairSum, 4),
            ("7x+y=9z", ProductCase::UnitPairSum, 4),
            ("x+3y=6z", ProductCase::SharedValuation, 4),
            ("x+5y=10z", ProductCase::SharedValuation, 4),
            ("x+14y=7z", ProductCase::SharedValuation, 6),
        ] {
            let eq = parse_equation(text).unwrap();
            let pc = product_coloring_unique_prime(&eq, case, 2000).unwrap();
            assert_eq!(pc.coloring.k(), colors, "{text}");
            assert!(pc.graph.is_proper());
            assert!(verify_coloring(&eq, &pc.coloring).is_valid(), "{text}");
        }
    }

    #[test]
    fn odd_order_setup_gives_six_colors() {
        let eq = parse_equation("5x+y=7z").unwrap();
        let setup = unique_prime_setups(&eq, ProductCase::UnitPairSum)
            .into_iter()
            .find(|s| s.prime == 7)
            .unwrap();
        assert_eq!((setup.multiplier, setup.multiplier_order), (2, 3));
        let pc = product_coloring_for_setup(setup, 2000).unwrap();
        assert_eq!(pc.coloring.k(), 6);
        assert!(verify_coloring(&eq, &pc.coloring).is_valid());
        // another prime gives an even order, so the best choice has 4 colors
        let best = product_coloring_unique_prime(&eq, ProductCase::UnitPairSum, 2000).unwrap();
        assert_eq!(best.coloring.k(), 4);
        assert!(verify_coloring(&eq, &best.coloring).is_valid());
    }

    #[test]
    fn figure_graph_mod_nine() {
        let eq = parse_equation("7x+y=9z").unwrap();
        let pc = product_coloring_unique_prime(&eq, ProductCase::UnitPairSum, 100).unwrap();
        assert_eq!((pc.setup.prime, pc.setup.r), (3, 2));
        assert_eq!(pc.graph.multiplier(), 2);
        assert_eq!(pc.graph.palette_size(), 2);
    }
}

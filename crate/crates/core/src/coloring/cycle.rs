use serde::{Deserialize, Serialize};

use super::ColoringError;

/// The functional graph of `y -> g y (mod M)` on `{1, ..., M - 1}`, with a
/// proper vertex coloring using as few colors as its cycle structure allows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleGraph {
    modulus: u64,
    multiplier: u64,
    /// `colors[x - 1]` is the color of vertex `x`, in `{1, 2, 3}`.
    colors: Vec<u8>,
    order: u64,
}

impl CycleGraph {
    /// `multiplier` must be a unit modulo `modulus`. Fails when some vertex
    /// maps to itself, since a loop admits no proper coloring.
    pub fn new(modulus: u64, multiplier: u64) -> Result<Self, ColoringError> {
        if modulus < 2 {
            return Err(ColoringError::Parameter(format!("modulus {modulus}")));
        }
        let g = multiplier % modulus;
        if num_integer::gcd(g, modulus) != 1 {
            return Err(ColoringError::Parameter(format!("{g} is not a unit mod {modulus}")));
        }
        let order = multiplicative_order(g, modulus);
        let m = modulus as usize;
        let mut colors = vec![0u8; m - 1];
        for start in 1..m {
            if colors[start - 1] != 0 {
                continue;
            }
            let mut cycle = vec![start as u64];
            let mut y = mul_mod(start as u64, g, modulus);
            while y != start as u64 {
                cycle.push(y);
                y = mul_mod(y, g, modulus);
            }
            if cycle.len() == 1 {
                return Err(ColoringError::NotApplicable(format!(
                    "vertex {start} is fixed by multiplication by {g} mod {modulus}"
                )));
            }
            let odd = cycle.len() % 2 == 1;
            let last = cycle.len() - 1;
            for (i, &v) in cycle.iter().enumerate() {
                colors[v as usize - 1] = if odd && i == last { 3 } else { 1 + (i % 2) as u8 };
            }
        }
        Ok(Self { modulus, multiplier: g, colors, order })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn multiplier(&self) -> u64 {
        self.multiplier
    }

    /// Order of the multiplier in the unit group.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// Color of a nonzero residue.
    pub fn color(&self, residue: u64) -> u8 {
        self.colors[(residue % self.modulus) as usize - 1]
    }

    pub fn palette_size(&self) -> usize {
        self.colors.iter().copied().max().unwrap_or(0) as usize
    }

    /// Edges `(x, y)` with `x = g y mod M`.
    pub fn edges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        (1..self.modulus).map(|y| (mul_mod(y, self.multiplier, self.modulus), y))
    }

    pub fn is_proper(&self) -> bool {
        self.edges().all(|(x, y)| self.color(x) != self.color(y))
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Order of a unit `g` modulo `m`, by direct iteration.
pub(crate) fn multiplicative_order(g: u64, m: u64) -> u64 {
    let mut x = g % m;
    let mut k = 1;
    while x != 1 % m {
        x = mul_mod(x, g, m);
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_mod_nine_is_two_colored() {
        let g = CycleGraph::new(9, 2).unwrap();
        assert_eq!(g.order(), 6);
        assert!(g.is_proper());
        assert_eq!(g.palette_size(), 2);
    }

    #[test]
    fn odd_order_needs_three_colors() {
        // 2 has order 3 mod 7
        let g = CycleGraph::new(7, 2).unwrap();
        assert_eq!(g.order(), 3);
        assert!(g.is_proper());
        assert_eq!(g.palette_size(), 3);
    }

    #[test]
    fn even_order_always_two_colors() {
        for m in [3u64, 5, 7, 9, 11, 13, 25, 27, 49] {
            for g in 2..m {
                if num_integer::gcd(g, m) != 1 {
                    continue;
                }
                match CycleGraph::new(m, g) {
                    Ok(cg) => {
                        assert!(cg.is_proper(), "m={m} g={g}");
                        if cg.order() % 2 == 0 {
                            assert_eq!(cg.palette_size(), 2, "m={m} g={g}");
                        } else {
                            assert!(cg.palette_size() <= 3);
                        }
                    }
                    Err(ColoringError::NotApplicable(_)) => {
                        // g ≡ 1 mod some p-power divisor leaves fixed points
                        assert!((1..m).any(|y| mul_mod(y, g, m) == y));
                    }
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn identity_has_loops() {
        assert!(matches!(CycleGraph::new(9, 1), Err(ColoringError::NotApplicable(_))));
        assert!(matches!(CycleGraph::new(9, 3), Err(ColoringError::Parameter(_))));
    }
}

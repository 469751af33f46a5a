//! Published Rado number and degree-of-regularity tables, shipped as data,
//! and a harness that recomputes single entries.
//!
//! Each table is a grid with rows indexed by `b` and columns by `a`. Cells
//! are a number, `inf`, `>N` for a lower bound only, or `-` for no entry.

use serde::{Deserialize, Serialize};

use crate::dor::{compute_dor, DorConfig, DorValue};
use crate::equation::LinearEquation;
use crate::search::{rado_number, SearchConfig, SearchError, SearchOutcome, SearchResult};

/// How `(a, b, c)` turn into an equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `a(x - y) = bz`
    Difference,
    /// `a(x + y) = bz`
    Sum,
    /// `ax + by = cz`
    ThreeTerm,
}

impl Family {
    pub fn equation(self, a: i64, b: i64, c: i64) -> LinearEquation {
        let (eq, text) = match self {
            Family::Difference => (LinearEquation::difference(a, b), format!("{a}(x-y)={b}z")),
            Family::Sum => (LinearEquation::sum(a, b), format!("{a}(x+y)={b}z")),
            Family::ThreeTerm => (LinearEquation::three_term(a, b, c), format!("{a}x+{b}y={c}z")),
        };
        eq.expect("table parameters are nonzero").with_display(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `R_k`
    Rado(u32),
    Dor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Expected {
    Finite(u64),
    Infinite,
    AtLeast(u64),
}

pub struct Table {
    pub id: &'static str,
    pub family: Family,
    pub quantity: Quantity,
    /// Fixed `c` for three-term tables.
    pub c: i64,
    pub first_b: i64,
    pub first_a: i64,
    data: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableEntry {
    pub table: &'static str,
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub expected: Expected,
}

impl Table {
    pub fn entries(&self) -> Vec<TableEntry> {
        let mut out = Vec::new();
        for (i, row) in self.data.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
            for (j, cell) in row.split_whitespace().enumerate() {
                let expected = match cell {
                    "-" => continue,
                    "inf" => Expected::Infinite,
                    s => match s.strip_prefix('>') {
                        Some(n) => Expected::AtLeast(n.parse::<u64>().expect("table cell") + 1),
                        None => Expected::Finite(s.parse().expect("table cell")),
                    },
                };
                out.push(TableEntry {
                    table: self.id,
                    a: self.first_a + j as i64,
                    b: self.first_b + i as i64,
                    c: self.c,
                    expected,
                });
            }
        }
        out
    }

    pub fn entry(&self, a: i64, b: i64) -> Option<TableEntry> {
        self.entries().into_iter().find(|e| e.a == a && e.b == b)
    }

    pub fn equation(&self, e: &TableEntry) -> LinearEquation {
        self.family.equation(e.a, e.b, e.c)
    }
}

const R3_DIFFERENCE: &str = "
14 14 27 64 125 216 343 512 729 1000 1331 1728 2197 2744 3375
43 14 31 14 125 27 343 64 729 125 1331 216 2197 343 3375
94 61 14 73 125 14 343 512 27 1000 1331 64 2197 2744 125
173 43 109 14 141 31 343 14 729 125 1331 27 2197 343 3375
286 181 186 180 14 241 343 512 729 14 1331 1728 2197 2744 27
439 94 43 61 300 14 379 73 31 125 1331 14 2197 343 125
638 428 442 456 470 462 14 561 729 1000 1331 1728 2197 14 3375
889 173 633 43 665 109 644 14 793 141 1331 31 2197 343 3375
1198 856 94 892 910 61 896 896 14 1081 1331 73 2197 2744 125
1571 286 1171 181 43 186 1190 180 1206 14 1431 241 2197 343 31
2014 1508 1530 1552 1574 1596 1618 1584 1575 1580 14 1849 2197 2744 3375
2533 439 173 94 2005 43 2053 61 109 300 2024 14 2341 379 141
3134 2432 2458 2484 2510 2536 2562 2588 2574 2530 2541 2544 14 2913 3375
3823 638 3039 428 3095 442 43 456 3207 470 3113 462 3146 14 3571
4606 3676 286 3736 94 181 3826 3856 186 61 3795 180 3835 3836 14
";

const R3_SUM: &str = "
14 inf inf inf inf inf inf inf inf inf
1 14 243 inf inf inf inf inf inf inf
54 54 14 384 2000 inf inf inf inf inf
inf 1 108 14 875 243 4459 inf inf inf
inf 105 135 180 14 864 3430 3072 12393 inf
inf 54 1 54 750 14 3087 384 243 2000
inf 455 336 308 875 756 14 1536 8748 7500
inf inf 432 1 1000 108 2744 14 8019 875
inf inf 54 585 1125 54 3087 1224 14 6000
inf inf 1125 105 1 135 3430 180 7290 14
";

const R3_SUM_LARGE_B: &str = "
2019 847 1958 1188
inf 54 2400 1
inf 1710 3445 1963
inf 455 3675 336
inf 5408 54 105
inf inf 5725 432
inf inf 8330 4743
inf inf 12069 54
inf inf 16397 6726
inf inf inf 1025
";

const R3_THREE_TERM: [&str; 6] = [
    "
14 43 94 173 286 439
- inf 1093 inf 2975 4422
- - inf inf inf inf
- - - inf inf inf
- - - - inf inf
- - - - - inf
",
    "
1 14 54 inf 70 126
- 14 61 43 181 94
- - 243 inf 395 648
- - - inf inf 1093
- - - - inf inf
- - - - - inf
",
    "
54 1 27 54 89 195
- 54 31 inf 140 108
- - 14 109 186 43
- - - 384 220 inf
- - - - 2000 1074
- - - - - inf
",
    "
inf inf 1 64 100 inf
- 1 inf 14 inf 54
- - 108 73 105 inf
- - - 14 180 61
- - - - 141 inf
- - - - - 31
",
    "
inf 45 60 1 125 150
- 105 1 inf 125 70
- - 135 100 125 108
- - - 180 141 inf
- - - - 14 300
- - - - - 864
",
    "
inf 40 81 inf 1 216
- 54 81 1 90 27
- - 1 inf 135 14
- - - 54 inf 31
- - - - 750 241
- - - - - 14
",
];

const R4_DIFFERENCE: &str = "
45 56 81 256 625
171 45 103 56 -
469 >225 45 - -
1037 - - - -
";

const DOR_THREE_TERM: [&str; 5] = [
    "
inf inf inf inf inf
inf 2 3 2 3
inf 3 2 2 2
inf 2 2 2 2
inf 3 2 2 2
",
    "
inf inf 3 2 3
inf inf inf inf inf
3 inf 3 2 3
2 inf 2 2 2
3 inf 3 2 2
",
    "
3 inf inf 3 3
inf 3 inf 2 3
inf inf inf inf inf
3 2 inf 3 3
3 3 inf 3 3
",
    "
2 2 inf inf 3
2 inf 2 inf 2
inf 2 3 inf 3
inf inf inf inf inf
3 2 3 inf 3
",
    "
2 3 3 inf inf
3 3 inf 2 inf
3 inf 3 3 inf
inf 2 3 3 inf
inf inf inf inf inf
",
];

fn three_term_id(c: usize, dor: bool) -> &'static str {
    const R: [&str; 6] = ["r3_ax_by_1z", "r3_ax_by_2z", "r3_ax_by_3z", "r3_ax_by_4z", "r3_ax_by_5z", "r3_ax_by_6z"];
    const D: [&str; 5] = ["dor_ax_by_1z", "dor_ax_by_2z", "dor_ax_by_3z", "dor_ax_by_4z", "dor_ax_by_5z"];
    if dor {
        D[c - 1]
    } else {
        R[c - 1]
    }
}

/// Every shipped table.
pub fn all_tables() -> Vec<Table> {
    let mut t = vec![
        Table { id: "r3_difference", family: Family::Difference, quantity: Quantity::Rado(3), c: 0, first_b: 1, first_a: 1, data: R3_DIFFERENCE },
        Table { id: "r3_sum", family: Family::Sum, quantity: Quantity::Rado(3), c: 0, first_b: 1, first_a: 1, data: R3_SUM },
        Table { id: "r3_sum_large_b", family: Family::Sum, quantity: Quantity::Rado(3), c: 0, first_b: 11, first_a: 3, data: R3_SUM_LARGE_B },
        Table { id: "r4_difference", family: Family::Difference, quantity: Quantity::Rado(4), c: 0, first_b: 1, first_a: 1, data: R4_DIFFERENCE },
    ];
    for (i, data) in R3_THREE_TERM.iter().enumerate() {
        t.push(Table {
            id: three_term_id(i + 1, false),
            family: Family::ThreeTerm,
            quantity: Quantity::Rado(3),
            c: i as i64 + 1,
            first_b: 1,
            first_a: 1,
            data,
        });
    }
    for (i, data) in DOR_THREE_TERM.iter().enumerate() {
        t.push(Table {
            id: three_term_id(i + 1, true),
            family: Family::ThreeTerm,
            quantity: Quantity::Dor,
            c: i as i64 + 1,
            first_b: 1,
            first_a: 1,
            data,
        });
    }
    t
}

pub fn table(id: &str) -> Option<Table> {
    all_tables().into_iter().find(|t| t.id == id)
}

/// A printed cell that disagrees with another shipped table on the same
/// equation. Such cells are checked against the other table's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub table: &'static str,
    pub a: i64,
    pub b: i64,
    pub other_table: &'static str,
    pub other_a: i64,
    pub other_b: i64,
    pub note: &'static str,
}

pub const CONFLICTS: &[Conflict] = &[
    Conflict {
        table: "r3_ax_by_4z",
        a: 5,
        b: 5,
        other_table: "r3_sum",
        other_a: 5,
        other_b: 4,
        note: "5x+5y=4z is 5(x+y)=4z; the printed 141 is the a(x-y)=bz value at a=5, b=4",
    },
    Conflict {
        table: "r3_ax_by_4z",
        a: 6,
        b: 6,
        other_table: "r3_sum",
        other_a: 3,
        other_b: 2,
        note: "6x+6y=4z scales to 3(x+y)=2z; the printed 31 is the a(x-y)=bz value at a=6, b=4",
    },
];

pub fn conflict_for(table: &str, a: i64, b: i64) -> Option<&'static Conflict> {
    CONFLICTS.iter().find(|c| c.table == table && c.a == a && c.b == b)
}

#[derive(Debug, Clone, Serialize)]
pub struct EntryCheck {
    pub entry: TableEntry,
    /// Value compared against; differs from `entry.expected` for conflicts.
    pub checked_against: Expected,
    pub equation: String,
    pub passed: bool,
    pub computed: String,
    pub message: String,
    #[serde(skip)]
    pub outcome: Option<SearchOutcome>,
}

/// Recomputes one table entry and compares. Infinite entries must come
/// with a justification whose hypothesis re-checks; finite ones with valid
/// certificates.
pub fn check_table_entry(table: &Table, a: i64, b: i64, cfg: &SearchConfig) -> Result<EntryCheck, SearchError> {
    let entry = table
        .entry(a, b)
        .ok_or_else(|| SearchError::Parameter(format!("{} has no entry at a = {a}, b = {b}", table.id)))?;
    let eq = table.equation(&entry);
    let equation = eq.to_string();
    let conflict = conflict_for(table.id, a, b);
    let target = match conflict {
        Some(c) => {
            let other = self::table(c.other_table).and_then(|t| t.entry(c.other_a, c.other_b));
            other.expect("conflict references an existing cell").expected
        }
        None => entry.expected,
    };
    let note = conflict.map(|c| c.note.to_string()).unwrap_or_default();
    let join = |m: String| match (m.is_empty(), note.is_empty()) {
        (true, _) => note.clone(),
        (false, true) => m,
        (false, false) => format!("{m}; {note}"),
    };
    match table.quantity {
        Quantity::Rado(k) => {
            let out = rado_number(&eq, k, cfg)?;
            let certs = out.check_certificates();
            let (passed, computed) = match (&out.result, target) {
                (SearchResult::Finite { value }, Expected::Finite(v)) => (*value == v, value.to_string()),
                (SearchResult::Finite { value }, Expected::AtLeast(v)) => (*value >= v, value.to_string()),
                (SearchResult::Infinite { justification }, Expected::Infinite) => {
                    (justification.holds_for(&eq), format!("inf ({:?})", justification.rule))
                }
                (SearchResult::Unknown { lower, upper }, Expected::AtLeast(v)) => {
                    (*lower + 1 >= v, format!("unknown in [{}, {upper:?}]", lower + 1))
                }
                (r, _) => (false, format!("{r:?}")),
            };
            let message = match &certs {
                Ok(()) => String::new(),
                Err(e) => format!("certificate check failed: {e}"),
            };
            Ok(EntryCheck {
                entry,
                checked_against: target,
                equation,
                passed: passed && certs.is_ok(),
                computed,
                message: join(message),
                outcome: Some(out),
            })
        }
        Quantity::Dor => {
            let r = compute_dor(&eq, &DorConfig { search: cfg.clone(), k_cap: 0 })?;
            let (passed, computed) = match (&r.value, target) {
                (DorValue::Finite { value }, Expected::Finite(v)) => (*value as u64 == v, value.to_string()),
                (DorValue::Infinite, Expected::Infinite) => (true, "inf".into()),
                (v, _) => (false, format!("{v:?}")),
            };
            let bad = r.searches.iter().find_map(|s| s.check_certificates().err());
            Ok(EntryCheck {
                entry,
                checked_against: target,
                equation,
                passed: passed && bad.is_none(),
                computed,
                message: join(bad.map(|e| format!("certificate check failed: {e}")).unwrap_or_default()),
                outcome: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shapes() {
        let sizes: Vec<(&str, usize)> = all_tables().iter().map(|t| (t.id, t.entries().len())).collect();
        let get = |id| sizes.iter().find(|(i, _)| *i == id).unwrap().1;
        assert_eq!(get("r3_difference"), 225);
        assert_eq!(get("r3_sum"), 100);
        assert_eq!(get("r3_sum_large_b"), 40);
        assert_eq!(get("r4_difference"), 13);
        assert_eq!(get("r3_ax_by_1z"), 21);
        for c in 1..=5 {
            assert_eq!(get(three_term_id(c, true)), 25);
        }
    }

    #[test]
    fn spot_values() {
        let t = table("r3_difference").unwrap();
        assert_eq!(t.entry(1, 2).unwrap().expected, Expected::Finite(43));
        assert_eq!(t.entry(5, 2).unwrap().expected, Expected::Finite(125));
        assert_eq!(t.entry(15, 15).unwrap().expected, Expected::Finite(14));
        let t = table("r3_sum").unwrap();
        assert_eq!(t.entry(2, 3).unwrap().expected, Expected::Finite(54));
        assert_eq!(t.entry(1, 4).unwrap().expected, Expected::Infinite);
        let t = table("r3_ax_by_1z").unwrap();
        assert_eq!(t.entry(3, 2).unwrap().expected, Expected::Finite(1093));
        assert!(t.entry(1, 2).is_none());
        let t = table("r4_difference").unwrap();
        assert_eq!(t.entry(2, 3).unwrap().expected, Expected::AtLeast(226));
        let t = table("dor_ax_by_3z").unwrap();
        assert_eq!(t.entry(2, 2).unwrap().expected, Expected::Finite(3));
        assert_eq!(t.equation(&t.entry(2, 2).unwrap()).coeffs(), &[2, 2, -3]);
    }

    fn proportional(x: &[i64], y: &[i64]) -> bool {
        x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p * y[0] == q * x[0])
    }

    #[test]
    fn conflicts_are_consistent() {
        for c in CONFLICTS {
            let t = table(c.table).unwrap();
            let o = table(c.other_table).unwrap();
            let e = t.entry(c.a, c.b).unwrap();
            let oe = o.entry(c.other_a, c.other_b).unwrap();
            // same equation up to scaling, different printed value
            assert!(proportional(t.equation(&e).coeffs(), o.equation(&oe).coeffs()), "{c:?}");
            assert_ne!(e.expected, oe.expected);
        }
        // the printed values coincide with the difference table at b = 4
        let d = table("r3_difference").unwrap();
        assert_eq!(d.entry(5, 4).unwrap().expected, table("r3_ax_by_4z").unwrap().entry(5, 5).unwrap().expected);
        assert_eq!(d.entry(6, 4).unwrap().expected, table("r3_ax_by_4z").unwrap().entry(6, 6).unwrap().expected);
    }

    #[test]
    fn conflict_cell_checks_other_table() {
        let t = table("r3_ax_by_4z").unwrap();
        let r = check_table_entry(&t, 6, 6, &SearchConfig::default()).unwrap();
        assert_eq!(r.checked_against, Expected::Finite(243));
        assert!(r.passed && r.computed == "243", "{r:?}");
    }

    #[test]
    fn small_entries_recompute() {
        let cfg = SearchConfig::default();
        for (id, a, b) in [("r3_difference", 1, 2), ("r3_sum", 2, 3), ("r3_sum", 1, 4), ("r3_ax_by_2z", 1, 1), ("dor_ax_by_3z", 2, 2)] {
            let t = table(id).unwrap();
            let r = check_table_entry(&t, a, b, &cfg).unwrap();
            assert!(r.passed, "{id} {a} {b}: {r:?}");
        }
    }

    #[test]
    fn dor_tables_respect_symmetry_and_regularity() {
        // ax + by = cz and bx + ay = cz are the same equation
        for c in 1..=5 {
            let t = table(three_term_id(c, true)).unwrap();
            for e in t.entries() {
                let swapped = t.entry(e.b, e.a).unwrap();
                assert_eq!(e.expected, swapped.expected, "c={c} a={} b={}", e.a, e.b);
                let regular = t.equation(&e).is_regular().unwrap();
                assert_eq!(regular, e.expected == Expected::Infinite, "c={c} a={} b={}", e.a, e.b);
            }
        }
    }
}

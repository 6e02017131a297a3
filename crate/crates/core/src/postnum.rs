//! Numerology of a fat point plus `d` lines: the `(a, b)` ledger, critical
//! values, expected cohomology, and the identities and inequalities the
//! induction leans on.
//!
//! For `k >= m - 1` the ledger cell `(a_{m,k}, b_{m,k})` is the unique pair with
//!
//! ```text
//! C(m+2,3) + (k+1) a + b = C(k+3,3),    0 <= b <= k
//! ```
//!
//! i.e. `a` lines and `b` extra conditions exactly fill the degree-`k` forms
//! once the fat point `mP` has been imposed.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PostnumError {
    #[error("ledger cell (m={m}, k={k}) undefined: C(k+3,3) < C(m+2,3)")]
    Undefined { m: u64, k: u64 },
}

/// `C(n, r)` with the convention `C(n, r) = 0` for `n < r` (including
/// negative `n`). Panics on `u64` overflow.
pub fn binom(n: i64, r: u32) -> u64 {
    if n < r as i64 {
        return 0;
    }
    let n = n as u64;
    let mut acc: u64 = 1;
    for i in 0..r as u64 {
        acc = acc
            .checked_mul(n - i)
            .expect("binomial overflow")
            / (i + 1);
    }
    acc
}

/// Degree of the fat point `mP` in P^3; zero for `m = 0`.
pub fn fatpoint_degree(m: u64) -> u64 {
    binom(m as i64 + 2, 3)
}

/// Number of degree-`t` forms on P^3.
pub fn forms_p3(t: u64) -> u64 {
    binom(t as i64 + 3, 3)
}

/// One ledger cell `(m, k, a_{m,k}, b_{m,k})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CombinatoricsCell {
    pub m: u64,
    pub k: u64,
    pub a: u64,
    pub b: u64,
}

pub fn ab(m: u64, k: u64) -> Result<CombinatoricsCell, PostnumError> {
    let total = forms_p3(k);
    let fat = fatpoint_degree(m);
    if total < fat {
        return Err(PostnumError::Undefined { m, k });
    }
    let rest = total - fat;
    Ok(CombinatoricsCell {
        m,
        k,
        a: rest / (k + 1),
        b: rest % (k + 1),
    })
}

/// `a_{m,k}`; panics where the cell is undefined.
pub fn a(m: u64, k: u64) -> u64 {
    ab(m, k).expect("ledger cell in range").a
}

/// `b_{m,k}`; panics where the cell is undefined.
pub fn b(m: u64, k: u64) -> u64 {
    ab(m, k).expect("ledger cell in range").b
}

/// Minimal `k >= m` with `C(m+2,3) + (k+1) d <= C(k+3,3)`.
pub fn critical_value(m: u64, d: u64) -> u64 {
    let fat = fatpoint_degree(m);
    (m..)
        .find(|&k| fat + (k + 1) * d <= forms_p3(k))
        .expect("forms eventually outgrow linear conditions")
}

/// `(h0, h1)` a general union would have if it imposed independent
/// conditions: `delta = C(t+3,3) - C(m+2,3) - d(t+1)` split by sign.
pub fn expected_cohomology(m: u64, d: u64, t: u64) -> (u64, u64) {
    let delta = forms_p3(t) as i128 - fatpoint_degree(m) as i128 - (d as i128) * (t as i128 + 1);
    if delta >= 0 {
        (delta as u64, 0)
    } else {
        (0, (-delta) as u64)
    }
}

/// The cells where a general union provably fails maximal rank.
pub fn is_exceptional(m: u64, d: u64, t: u64) -> bool {
    2 <= d && d <= m && t == m
}

/// `2a_{m,k-2} + (k+1)(a_{m,k} - a_{m,k-2}) + b_{m,k} - b_{m,k-2} = (k+1)^2`.
pub fn identity_eq2(m: u64, k: u64) -> bool {
    assert!(k >= m + 2, "two-step identity needs k >= m + 2");
    let (lo, hi) = (ab(m, k - 2).unwrap(), ab(m, k).unwrap());
    let lhs = 2 * lo.a as i64 + (k as i64 + 1) * (hi.a as i64 - lo.a as i64) + hi.b as i64
        - lo.b as i64;
    lhs == ((k + 1) * (k + 1)) as i64
}

/// `a_{m-1,m+1} + (m+3)(a_{m,m+2} - a_{m-1,m+1}) + b_{m,m+2} - b_{m-1,m+1} = 3m+6`.
pub fn identity_eq3(m: u64) -> bool {
    assert!(m >= 1);
    let prev = ab(m - 1, m + 1).unwrap();
    let cur = ab(m, m + 2).unwrap();
    let lhs = prev.a as i64 + (m as i64 + 3) * (cur.a as i64 - prev.a as i64) + cur.b as i64
        - prev.b as i64;
    lhs == 3 * m as i64 + 6
}

/// `(m+3) a_{m,m+2} + b_{m,m+2} = (3m^2 + 15m + 20) / 2`.
pub fn identity_eq4(m: u64) -> bool {
    let cell = ab(m, m + 2).unwrap();
    2 * ((m + 3) * cell.a + cell.b) == 3 * m * m + 15 * m + 20
}

/// `a_{m,k} - a_{m,k-2} >= a_{0,k} - a_{0,k-2} - 1 >= ceil(k/2)` for `k >= m+3`.
pub fn gap_lemma(m: u64, k: u64) -> bool {
    assert!(k >= m + 3, "gap inequality needs k >= m + 3");
    let lhs = a(m, k) as i64 - a(m, k - 2) as i64;
    let mid = a(0, k) as i64 - a(0, k - 2) as i64 - 1;
    lhs >= mid && mid >= k.div_ceil(2) as i64
}

/// A number of the form `n / 2`, stored as `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt(pub i128);

impl HalfInt {
    pub fn from_int(x: i128) -> Self {
        HalfInt(2 * x)
    }

    pub fn twice(self) -> i128 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl std::fmt::Display for HalfInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// `psi(k,m) = 2C(k+3,3) - 2C(m+2,3) - (k-1)(k-2+k/2) - 2k + 4`.
pub fn psi(k: u64, m: u64) -> HalfInt {
    let (k, bk, bm) = (k as i128, forms_p3(k) as i128, fatpoint_degree(m) as i128);
    // twice each term
    let twice = 4 * bk - 4 * bm - (k - 1) * (3 * k - 4) - 4 * k + 8;
    HalfInt(twice)
}

/// `psi(k,m) >= 0` and `psi(k+1,m) >= psi(k,m)` for `m+5 <= k <= k_max`.
pub fn claim1_holds(m: u64, k_max: u64) -> bool {
    (m + 5..=k_max).all(|k| psi(k, m) >= HalfInt(0) && psi(k + 1, m) >= psi(k, m))
}

/// Remark-style closed forms for `(a_{m,m+j}, b_{m,m+j})`, `j = 1..=4`,
/// on the domain each branch is stated for; `None` outside that domain.
pub mod closed_forms {
    pub fn shift1(m: u64) -> Option<(u64, u64)> {
        Some((m + 2, 0))
    }

    pub fn shift2(m: u64) -> Option<(u64, u64)> {
        if m.is_multiple_of(2) {
            Some((3 * m / 2 + 3, 1))
        } else {
            Some(((3 * m + 5) / 2, (m + 5) / 2))
        }
    }

    pub fn shift3(m: u64) -> Option<(u64, u64)> {
        (m >= 1).then_some((2 * m + 4, 4))
    }

    pub fn shift4(m: u64) -> Option<(u64, u64)> {
        match m {
            2 | 4 => Some((5 * m / 2 + 6, 5 - m)),
            m if m % 2 == 0 && m >= 6 => Some((5 * m / 2 + 5, 10)),
            3..=15 => Some(((5 * m + 11) / 2, (15 - m) / 2)),
            m if m >= 17 => Some(((5 * m + 9) / 2, (m + 25) / 2)),
            _ => None,
        }
    }
}

/// One line of the reconciliation between stated closed forms and values
/// derived from the ledger's defining relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconciliationRow {
    pub item: String,
    pub stated: String,
    pub derived: String,
    pub domain: String,
    pub consistent: bool,
    pub verdict: String,
}

fn row(
    item: &str,
    stated: &str,
    derived: &str,
    domain: &str,
    first_bad: Option<String>,
) -> ReconciliationRow {
    let consistent = first_bad.is_none();
    let verdict = match first_bad {
        None => "consistent on the whole domain".to_string(),
        Some(w) => format!("stated form inconsistent {w}"),
    };
    ReconciliationRow {
        item: item.into(),
        stated: stated.into(),
        derived: derived.into(),
        domain: domain.into(),
        consistent,
        verdict,
    }
}

/// Checks every stated closed form and identity of the ledger against the
/// defining relation for `m <= m_max`.
pub fn reconcile(m_max: u64) -> Vec<ReconciliationRow> {
    let mut rows = Vec::new();
    let first = |it: &mut dyn Iterator<Item = Option<String>>| it.flatten().next();

    // ledger relation with C(m+1,3) in place of the fat-point degree
    let bad = first(&mut (1..=m_max).flat_map(|m| (m..=m + 40).map(move |k| (m, k))).map(
        |(m, k)| {
            let rest = forms_p3(k) - binom(m as i64 + 1, 3);
            let stated = (rest / (k + 1), rest % (k + 1));
            let cell = ab(m, k).unwrap();
            (stated != (cell.a, cell.b)).then(|| {
                format!("at m={m}, k={k}: (a,b)={stated:?} vs {:?}", (cell.a, cell.b))
            })
        },
    ));
    rows.push(row(
        "ledger relation, fat-point term",
        "C(m+1,3) + (k+1)a + b = C(k+3,3)",
        "C(m+2,3) + (k+1)a + b = C(k+3,3)",
        "1 <= m <= m_max, m <= k <= m+40",
        bad,
    ));

    let bad = first(&mut (0..=m_max.min(20)).flat_map(|m| (m + 2..=m + 40).map(move |k| (m, k))).map(
        |(m, k)| {
            let (lo, hi, next) = (ab(m, k - 2).unwrap(), ab(m, k).unwrap(), ab(m, k + 1).unwrap());
            let lhs = 2 * lo.a as i64 + (k as i64 + 1) * (hi.a as i64 - lo.a as i64) + hi.b as i64
                - next.b as i64;
            let rhs = ((k + 1) * (k + 1)) as i64;
            (lhs != rhs).then(|| format!("at m={m}, k={k}: {lhs} vs {rhs}"))
        },
    ));
    rows.push(row(
        "two-step difference identity, last b index",
        "2a(m,k-2) + (k+1)(a(m,k)-a(m,k-2)) + b(m,k) - b(m,k+1) = (k+1)^2",
        "2a(m,k-2) + (k+1)(a(m,k)-a(m,k-2)) + b(m,k) - b(m,k-2) = (k+1)^2",
        "0 <= m <= 20, m+2 <= k <= m+40",
        bad,
    ));

    let bad = first(&mut (1..=m_max).map(|m| {
        let lhs = a(m - 1, m + 1) as i64 + (m as i64 + 3) * (a(m, m + 2) as i64 - a(m - 1, m + 2) as i64)
            + b(m, m + 2) as i64
            - b(m - 1, m + 1) as i64;
        let rhs = 3 * m as i64 + 6;
        (lhs != rhs).then(|| format!("at m={m}: {lhs} vs {rhs}"))
    }));
    rows.push(row(
        "consecutive-multiplicity identity, subtracted a index",
        "a(m-1,m+1) + (m+3)(a(m,m+2) - a(m-1,m+2)) + b(m,m+2) - b(m-1,m+1) = 3m+6",
        "a(m-1,m+1) + (m+3)(a(m,m+2) - a(m-1,m+1)) + b(m,m+2) - b(m-1,m+1) = 3m+6",
        "1 <= m <= m_max",
        bad,
    ));

    let bad = first(&mut (1..=m_max).map(|m| {
        let cell = ab(m, m + 2).unwrap();
        let lhs = (m + 3) * cell.a + cell.b;
        let stated = (3 * m * m + 15 * m + 30) / 2;
        (lhs != stated).then(|| format!("at m={m}: {stated} vs {lhs}"))
    }));
    rows.push(row(
        "k = m+2 weighted sum, constant term",
        "(m+3)a(m,m+2) + b(m,m+2) = (3m^2+15m+30)/2",
        "(m+3)a(m,m+2) + b(m,m+2) = (3m^2+15m+20)/2",
        "1 <= m <= m_max",
        bad,
    ));

    let closed = |name: &str, stated: &str, shift: u64, f: fn(u64) -> Option<(u64, u64)>, lo: u64| {
        let bad = first(&mut (lo..=m_max).map(|m| {
            let claimed = f(m)?;
            let cell = ab(m, m + shift).unwrap();
            (claimed != (cell.a, cell.b))
                .then(|| format!("at m={m}: {claimed:?} vs {:?}", (cell.a, cell.b)))
        }));
        row(name, stated, "quotient and remainder of the ledger relation",
            &format!("{lo} <= m <= m_max where the branch applies"), bad)
    };
    rows.push(closed("(a,b) at k = m+1", "(m+2, 0)", 1, closed_forms::shift1, 0));
    rows.push(closed(
        "(a,b) at k = m+2",
        "even m: (3m/2+3, 1); odd m: (3m/2+5/2, m/2+5/2)",
        2,
        closed_forms::shift2,
        0,
    ));
    rows.push(closed("(a,b) at k = m+3", "(2m+4, 4) for m >= 1", 3, closed_forms::shift3, 1));
    rows.push(closed(
        "(a,b) at k = m+4",
        "m in {2,4}: (5m/2+6, 5-m); even m >= 6: (5m/2+5, 10); odd 3..15: (5m/2+11/2, (15-m)/2); odd m >= 17: (5m/2+9/2, (m+25)/2)",
        4,
        closed_forms::shift4,
        2,
    ));

    let bad = first(&mut (3..=m_max).map(|m| {
        let (prev, cur) = (a(m - 1, m + 1), a(m, m + 2));
        let step = if m % 2 == 0 { 2 } else { 1 };
        (prev <= m || cur != prev + step)
            .then(|| format!("at m={m}: a(m-1,m+1)={prev}, a(m,m+2)={cur}"))
    }));
    rows.push(row(
        "growth of a(m,m+2)",
        "a(m-1,m+1) > m; a(m,m+2) = a(m-1,m+1) + 2 (m even) or + 1 (m odd)",
        "ledger values",
        "3 <= m <= m_max",
        bad,
    ));

    let cell = ab(0, 3).unwrap();
    rows.push(row(
        "(a,b) at m = 0, k = 3",
        "(6, 2)",
        &format!("({}, {})", cell.a, cell.b),
        "single cell",
        ((6, 2) != (cell.a, cell.b)).then(|| format!("at m=0: (6, 2) vs ({}, {})", cell.a, cell.b)),
    ));

    let bad = first(&mut (0..=m_max).map(|m| {
        let diff = forms_p3(m + 3) - fatpoint_degree(m);
        let stated = 2 * m * m + 12 * m + 10;
        (diff != stated).then(|| format!("at m={m}: {stated} vs {diff}"))
    }));
    rows.push(row(
        "expansion of C(m+6,3) - C(m+2,3)",
        "2m^2+12m+10",
        "2m^2+12m+20",
        "0 <= m <= m_max",
        bad,
    ));

    let bad = first(&mut (0..=m_max).map(|m| {
        let diff = forms_p3(m + 4) - fatpoint_degree(m);
        let stated = (5 * m * m + 35 * m + 70) / 2;
        (diff != stated).then(|| format!("at m={m}: {stated} vs {diff}"))
    }));
    rows.push(row(
        "expansion of C(m+7,3) - C(m+2,3)",
        "(5m^2+35m+70)/2",
        "(5m^2+35m+70)/2",
        "0 <= m <= m_max",
        bad,
    ));

    let bad = first(&mut (0..=m_max + 40).map(|x| {
        let stated = if x % 3 == 2 { (x + 1) / 3 } else { 0 };
        let got = b(0, x);
        (stated != got).then(|| format!("at k={x}: {stated} vs {got}"))
    }));
    rows.push(row(
        "b(0,k) by residue of k mod 3",
        "0 if k = 0,1 mod 3; (k+1)/3 if k = 2 mod 3",
        "ledger values",
        "0 <= k <= m_max+40",
        bad,
    ));

    let bad = first(&mut (1..=m_max).map(|m| {
        let m_i = m as i128;
        // twice the displayed closed form for psi(m+5, m)
        let stated = HalfInt(
            2 * (m_i + 8) * (m_i + 7) * (m_i + 6) / 3 - 2 * (m_i + 2) * (m_i + 1) * m_i / 3
                - (m_i + 4) * (3 * m_i + 11)
                - 4 * m_i
                + 12,
        );
        let got = psi(m + 5, m);
        (stated != got).then(|| format!("at m={m}: {stated} vs {got}"))
    }));
    rows.push(row(
        "closed form of psi(m+5,m), linear tail",
        "(m+8)(m+7)(m+6)/3 - (m+2)(m+1)m/3 - (m+4)(3m+11)/2 - 2m + 6",
        "(m+8)(m+7)(m+6)/3 - (m+2)(m+1)m/3 - (m+4)(3m+11)/2 - 2m - 6",
        "1 <= m <= m_max",
        bad,
    ));

    let bad = first(&mut (0..=m_max.min(20)).flat_map(|m| (m + 3..=m + 40).map(move |k| (m, k)))
        .map(|(m, k)| (!gap_lemma(m, k)).then(|| format!("at m={m}, k={k}"))));
    rows.push(row(
        "gap inequality",
        "a(m,k)-a(m,k-2) >= a(0,k)-a(0,k-2)-1 >= ceil(k/2), k >= m+3",
        "ledger values",
        "0 <= m <= 20, m+3 <= k <= m+40",
        bad,
    ));

    let bad = first(&mut (1..=m_max.min(50)).map(|m| (!claim1_holds(m, m + 45)).then(|| format!("at m={m}"))));
    rows.push(row(
        "psi(k,m) >= 0 and nondecreasing in k",
        "psi(k,m) >= 0, psi(k+1,m) >= psi(k,m) for k >= m+5",
        "exact half-integer evaluation",
        "1 <= m <= 50, m+5 <= k <= m+45",
        bad,
    ));

    rows
}

/// Markdown rendering of [`reconcile`].
pub fn render_reconciliation(rows: &[ReconciliationRow]) -> String {
    let mut out = String::from("# Ledger reconciliation\n\n");
    let bad = rows.iter().filter(|r| !r.consistent).count();
    let _ = writeln!(out, "{} items checked, {} inconsistent.\n", rows.len(), bad);
    out.push_str("| item | stated | derived | domain | verdict |\n|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | `{}` | `{}` | {} | {} |",
            r.item, r.stated, r.derived, r.domain, r.verdict
        );
    }
    out
}

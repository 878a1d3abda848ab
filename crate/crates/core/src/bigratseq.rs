//! Exact critical orbit of `f(x) = x^2 + 1/c`.
//!
//! `f^n(0) = a_n(c) / c^(2^(n-1))` with `a_1 = 1` and
//! `a_n = a_{n-1}^2 + c^(2^(n-1) - 1)`. The numerators double in size at every
//! step, so exact work is guarded by a bit budget; callers that hit it switch
//! to modular or lattice arguments.

use std::collections::BTreeMap;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the size of an exactly computed `a_n`, in bits.
pub const DEFAULT_BIT_BUDGET: u64 = 1 << 26;

/// Upper estimate for the bit length of `a_n(c)`.
///
/// `|a_n| <= (2|c|)^(2^(n-1))` for all nonzero `c`, which gives
/// `2^(n-1) * (bitlen(c) + 1)`.
pub fn estimated_bits(c: &Integer, n: u32) -> u64 {
    if n == 0 {
        return 1;
    }
    let per = u64::from(c.significant_bits()) + 1;
    if n - 1 >= 63 {
        return u64::MAX;
    }
    (1u64 << (n - 1)).saturating_mul(per)
}

fn check_budget(c: &Integer, n: u32, budget: u64) -> Result<()> {
    let needed = estimated_bits(c, n);
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }
    Ok(())
}

fn check_c(c: &Integer) -> Result<()> {
    if *c == 0 {
        return Err(Error::Domain("c must be nonzero".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalNumerator {
    #[serde(with = "crate::json::int")]
    pub c: Integer,
    pub n: u32,
    #[serde(with = "crate::json::int")]
    pub value: Integer,
}

impl CriticalNumerator {
    pub fn is_square(&self) -> bool {
        is_perfect_square(&self.value)
    }
}

/// Incremental generator for `a_1(c), a_2(c), ...`.
///
/// Keeps `c^(2^(n-1) - 1)` alongside `a_n` so each step costs two squarings.
#[derive(Debug, Clone)]
pub struct NumeratorSeq {
    c: Integer,
    n: u32,
    a: Integer,
    cpow: Integer,
    budget: u64,
}

impl NumeratorSeq {
    pub fn new(c: &Integer) -> Result<Self> {
        Self::with_budget(c, DEFAULT_BIT_BUDGET)
    }

    pub fn with_budget(c: &Integer, budget: u64) -> Result<Self> {
        check_c(c)?;
        Ok(NumeratorSeq {
            c: c.clone(),
            n: 1,
            a: Integer::from(1),
            cpow: Integer::from(1),
            budget,
        })
    }

    pub fn index(&self) -> u32 {
        self.n
    }

    pub fn current(&self) -> &Integer {
        &self.a
    }

    /// Moves to `a_{n+1}`.
    pub fn advance(&mut self) -> Result<&Integer> {
        check_budget(&self.c, self.n + 1, self.budget)?;
        self.cpow.square_mut();
        self.cpow *= &self.c;
        self.a.square_mut();
        self.a += &self.cpow;
        self.n += 1;
        Ok(&self.a)
    }
}

/// `a_n(c)`.
pub fn compute_a(c: &Integer, n: u32) -> Result<CriticalNumerator> {
    compute_a_with_budget(c, n, DEFAULT_BIT_BUDGET)
}

pub fn compute_a_with_budget(c: &Integer, n: u32, budget: u64) -> Result<CriticalNumerator> {
    if n == 0 {
        return Err(Error::Domain("index n must be at least 1".into()));
    }
    check_c(c)?;
    check_budget(c, n, budget)?;
    let mut seq = NumeratorSeq::with_budget(c, budget)?;
    while seq.index() < n {
        seq.advance()?;
    }
    Ok(CriticalNumerator {
        c: c.clone(),
        n,
        value: seq.a,
    })
}

/// `[a_1, ..., a_n]`.
pub fn a_sequence(c: &Integer, n: u32) -> Result<Vec<Integer>> {
    check_c(c)?;
    check_budget(c, n, DEFAULT_BIT_BUDGET)?;
    let mut seq = NumeratorSeq::new(c)?;
    let mut out = Vec::with_capacity(n as usize);
    if n >= 1 {
        out.push(seq.current().clone());
    }
    while seq.index() < n {
        out.push(seq.advance()?.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitPoint {
    #[serde(with = "crate::json::int")]
    pub c: Integer,
    pub n: u32,
    #[serde(with = "crate::json::rat")]
    pub value: Rational,
}

/// `f^n(0)` as an exact rational.
pub fn orbit_point(c: &Integer, n: u32) -> Result<OrbitPoint> {
    orbit_point_with_budget(c, n, DEFAULT_BIT_BUDGET)
}

pub fn orbit_point_with_budget(c: &Integer, n: u32, budget: u64) -> Result<OrbitPoint> {
    check_c(c)?;
    let value = if n == 0 {
        Rational::new()
    } else {
        let a = compute_a_with_budget(c, n, budget)?.value;
        let den = c.clone().pow_exact(1u32 << (n - 1).min(31), budget)?;
        Rational::from((a, den))
    };
    Ok(OrbitPoint {
        c: c.clone(),
        n,
        value,
    })
}

trait PowExact {
    fn pow_exact(self, e: u32, budget: u64) -> Result<Integer>;
}

impl PowExact for Integer {
    fn pow_exact(self, e: u32, budget: u64) -> Result<Integer> {
        let needed = u64::from(self.significant_bits()) * u64::from(e);
        if needed > budget {
            return Err(Error::Budget { needed, budget });
        }
        Ok(rug::ops::Pow::pow(self, e))
    }
}

pub fn is_perfect_square(x: &Integer) -> bool {
    x.is_perfect_square()
}

/// `Some(s)` with `s >= 0` and `s^2 == x`, or `None`.
pub fn exact_sqrt(x: &Integer) -> Option<Integer> {
    if *x < 0 {
        return None;
    }
    let (s, r) = x.clone().sqrt_rem(Integer::new());
    if r == 0 {
        Some(s)
    } else {
        None
    }
}

/// A rational is a square in Q iff it is non-negative and its reduced
/// numerator and denominator are both integer squares.
pub fn is_rational_square(q: &Rational) -> bool {
    *q >= 0 && q.numer().is_perfect_square() && q.denom().is_perfect_square()
}

/// Exponent of the prime `p` in `x`.
pub fn padic_valuation(x: &Integer, p: &Integer) -> Result<u32> {
    if *x == 0 {
        return Err(Error::Domain("valuation of zero".into()));
    }
    if *p < 2 {
        return Err(Error::Domain(format!("{p} is not a prime")));
    }
    let (_, e) = x.clone().remove_factor(p);
    Ok(e)
}

/// Whether `b_n = (a_{n-1} + sqrt(a_n)) / 2` can be a rational square.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BSquareStatus {
    /// `a_n` is not a perfect square, so `b_n` is irrational.
    Irrational,
    RationalNonsquare {
        #[serde(with = "crate::json::int")]
        sqrt_a: Integer,
        #[serde(with = "crate::json::rat")]
        b: Rational,
        /// Set to -1 when the numerator `a_{n-1} + sqrt(a_n)` is odd.
        two_adic: Option<i32>,
    },
    Square {
        #[serde(with = "crate::json::int")]
        sqrt_a: Integer,
        #[serde(with = "crate::json::int")]
        b: Integer,
        #[serde(with = "crate::json::int")]
        root: Integer,
    },
}

pub fn b_square_status(c: &Integer, n: u32) -> Result<BSquareStatus> {
    if *c < 1 {
        return Err(Error::Domain(
            "b_n is only classified for c >= 1; use negativity for c < 0".into(),
        ));
    }
    if n < 2 {
        return Err(Error::Domain("b_n needs n >= 2".into()));
    }
    let seq = a_sequence(c, n)?;
    let a_n = &seq[n as usize - 1];
    let a_prev = &seq[n as usize - 2];
    let Some(s) = exact_sqrt(a_n) else {
        return Ok(BSquareStatus::Irrational);
    };
    let num = Integer::from(a_prev + &s);
    if num.is_odd() {
        return Ok(BSquareStatus::RationalNonsquare {
            sqrt_a: s,
            b: Rational::from((num, 2)),
            two_adic: Some(-1),
        });
    }
    let b = num / 2u32;
    match exact_sqrt(&b) {
        Some(root) => Ok(BSquareStatus::Square { sqrt_a: s, b, root }),
        None => Ok(BSquareStatus::RationalNonsquare {
            sqrt_a: s,
            b: Rational::from(b),
            two_adic: None,
        }),
    }
}

/// How an index was certified non-square.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Negative,
    ClosedFormA3A4,
    Sieve,
    RigidClosure { base: u32 },
    Lattice,
    Direct,
    AnalyticBound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonSquareIndexSet {
    #[serde(with = "crate::json::int")]
    pub c: Integer,
    pub proven: BTreeMap<u32, Provenance>,
}

impl NonSquareIndexSet {
    pub fn new(c: &Integer) -> Self {
        NonSquareIndexSet {
            c: c.clone(),
            proven: BTreeMap::new(),
        }
    }

    /// Records `n`; an existing entry keeps its original provenance.
    pub fn insert(&mut self, n: u32, p: Provenance) {
        self.proven.entry(n).or_insert(p);
    }

    pub fn contains(&self, n: u32) -> bool {
        self.proven.contains_key(&n)
    }
}

/// Adds every multiple `j*m <= horizon` of each certified base index `m`.
///
/// A positive non-square `a_m` has a prime of odd valuation, and rigid
/// divisibility carries that valuation to every `a_{jm}`. For `c < 0` all
/// `a_n` with `n >= 2` are negative already, so the set is returned as is.
pub fn rigid_closure(s: &NonSquareIndexSet, horizon: u32) -> Result<NonSquareIndexSet> {
    let mut out = s.clone();
    if s.c < 0 {
        return Ok(out);
    }
    for (&m, prov) in &s.proven {
        if *prov == Provenance::Negative {
            return Err(Error::Inconsistent(format!(
                "index {m} certified by sign for c = {} > 0",
                s.c
            )));
        }
        if m < 2 {
            continue;
        }
        let mut k = 2 * m;
        while k <= horizon {
            out.insert(k, Provenance::RigidClosure { base: m });
            k += m;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(x: i64) -> Integer {
        Integer::from(x)
    }

    #[test]
    fn small_closed_forms() {
        for c in [-7i64, -2, 1, 2, 5, 30] {
            let c = int(c);
            assert_eq!(compute_a(&c, 1).unwrap().value, 1);
            assert_eq!(compute_a(&c, 2).unwrap().value, Integer::from(&c + 1));
            let c3 = Integer::from(&c * &c) * &c;
            let want = c3 + Integer::from(&c * &c) + Integer::from(2 * &c) + 1;
            assert_eq!(compute_a(&c, 3).unwrap().value, want);
        }
        assert_eq!(compute_a(&int(2), 4).unwrap().value, 417);
    }

    #[test]
    fn zero_and_index_rejected() {
        assert!(matches!(compute_a(&int(0), 3), Err(Error::Domain(_))));
        assert!(matches!(compute_a(&int(3), 0), Err(Error::Domain(_))));
    }

    #[test]
    fn budget_guard() {
        let r = compute_a_with_budget(&int(1_000_000_000), 40, DEFAULT_BIT_BUDGET);
        assert!(matches!(r, Err(Error::Budget { .. })));
        assert!(compute_a_with_budget(&int(10), 12, 1 << 20).is_ok());
    }

    #[test]
    fn squares() {
        assert_eq!(exact_sqrt(&int(49)), Some(int(7)));
        assert!(!is_perfect_square(&int(17)));
        assert_eq!(exact_sqrt(&compute_a(&int(3), 2).unwrap().value), Some(int(2)));
        assert_eq!(exact_sqrt(&int(-4)), None);
        assert!(is_rational_square(&Rational::from((49, 256))));
        assert!(!is_rational_square(&Rational::from((129, 256))));
        assert!(!is_rational_square(&Rational::from((-1, 4))));
    }

    #[test]
    fn b_status_examples() {
        assert_eq!(b_square_status(&int(2), 3).unwrap(), BSquareStatus::Irrational);
        match b_square_status(&int(3), 2).unwrap() {
            BSquareStatus::RationalNonsquare { sqrt_a, b, two_adic } => {
                assert_eq!(sqrt_a, 2);
                assert_eq!(b, Rational::from((3, 2)));
                assert_eq!(two_adic, Some(-1));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(b_square_status(&int(3), 1).is_err());
        assert!(b_square_status(&int(-3), 3).is_err());
    }

    #[test]
    fn valuations() {
        assert_eq!(padic_valuation(&int(12), &int(2)).unwrap(), 2);
        assert_eq!(padic_valuation(&int(417), &int(3)).unwrap(), 1);
        assert_eq!(padic_valuation(&int(7), &int(2)).unwrap(), 0);
        assert!(padic_valuation(&int(0), &int(2)).is_err());
    }

    #[test]
    fn orbit_points() {
        let p = orbit_point(&int(5), 2).unwrap();
        assert_eq!(p.value, Rational::from((6, 25)));
        assert_eq!(orbit_point(&int(5), 0).unwrap().value, 0);
        let p = orbit_point(&int(-9), 3).unwrap();
        assert!(p.value < 0 && p.value > Rational::from((-1, 3)));
    }

    #[test]
    fn closure() {
        let mut s = NonSquareIndexSet::new(&int(5));
        s.insert(2, Provenance::Direct);
        let t = rigid_closure(&s, 10).unwrap();
        let keys: Vec<u32> = t.proven.keys().copied().collect();
        assert_eq!(keys, vec![2, 4, 6, 8, 10]);
        assert_eq!(rigid_closure(&t, 10).unwrap(), t);

        let mut s = NonSquareIndexSet::new(&int(5));
        s.insert(3, Provenance::ClosedFormA3A4);
        let t = rigid_closure(&s, 12).unwrap();
        assert_eq!(t.proven.keys().copied().collect::<Vec<_>>(), vec![3, 6, 9, 12]);

        let empty = NonSquareIndexSet::new(&int(5));
        assert_eq!(rigid_closure(&empty, 20).unwrap(), empty);

        let mut bad = NonSquareIndexSet::new(&int(5));
        bad.insert(2, Provenance::Negative);
        assert!(matches!(rigid_closure(&bad, 8), Err(Error::Inconsistent(_))));
    }
}

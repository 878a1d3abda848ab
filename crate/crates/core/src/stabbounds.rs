//! Analytic bounds on the index of a square `a_n(c)`.
//!
//! If `a_n(c)` is a square then `c = uv` splits into coprime parts with
//! `v^N - u^N/4 = a_{n-1}(c)` (even `c`, `N = 2^(n-1) - 1`), which forces
//! `N log(v/u)` to be tiny. Every real quantity here is an [`Interval`], and
//! a predicate returns `true` only when it holds on the whole interval.

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::bigratseq::{compute_a, estimated_bits, is_perfect_square, DEFAULT_BIT_BUDGET};
use crate::factor::factorize;
use crate::interval::Interval;
use crate::{Error, Result};

pub const DEFAULT_BITS: u32 = 128;
/// Splits are enumerated only when `c` has at most this many distinct primes.
pub const MAX_SPLIT_PRIMES: usize = 24;

fn need_c_ge_4(c: &Integer) -> Result<()> {
    if *c < 4 {
        return Err(Error::Domain(format!("c = {c} must be at least 4")));
    }
    Ok(())
}

fn ln4(bits: u32) -> Interval {
    Interval::ln2(bits).mul_i64(2)
}

fn n_of(n: u32) -> Result<Integer> {
    if !(1..=4096).contains(&n) {
        return Err(Error::Domain(format!("index n = {n} out of range")));
    }
    Ok((Integer::from(1) << (n - 1)) - 1u32)
}

/// `F(c) = (2/c) / (1 + sqrt(1 - 4/c))`, the cancellation-free form.
pub fn f_of_c(c: &Integer, bits: u32) -> Result<Interval> {
    need_c_ge_4(c)?;
    let ci = Interval::from_int(c, bits);
    let one = Interval::from_i64(1, bits);
    let inner = one.sub(&Interval::from_i64(4, bits).div(&ci));
    // Rounding can push 1 - 4/c slightly below 0 at c = 4.
    let inner = Interval {
        lo: if inner.lo < 0 { rug::Float::with_val(bits, 0) } else { inner.lo },
        hi: inner.hi,
    };
    let denom = one.add(&inner.sqrt());
    Ok(Interval::from_i64(2, bits).div(&ci).div(&denom))
}

/// `abar_n = a_n / c^(2^(n-1) - 1)` via `abar_1 = 1`, `abar_{k+1} = 1 + abar_k^2 / c`.
pub fn abar(c: &Integer, n: u32, bits: u32) -> Result<Interval> {
    need_c_ge_4(c)?;
    if n == 0 {
        return Err(Error::Domain("abar index starts at 1".into()));
    }
    let ci = Interval::from_int(c, bits);
    let mut x = Interval::from_i64(1, bits);
    for _ in 1..n {
        x = x.square().div(&ci).add_int(1);
    }
    Ok(x)
}

/// `eps(n, c) = 2 sqrt(c) atanh(1 / sqrt(1 + c / abar_{n-1}^2))`.
pub fn eps_n(c: &Integer, n: u32, bits: u32) -> Result<Interval> {
    if n < 2 {
        return Err(Error::Domain("eps(n, c) needs n >= 2".into()));
    }
    let a = abar(c, n - 1, bits)?;
    let ci = Interval::from_int(c, bits);
    let t = ci.div(&a.square()).add_int(1).sqrt();
    let arg = Interval::from_i64(1, bits).div(&t);
    Ok(arg.atanh().mul(&ci.sqrt()).mul_i64(2))
}

/// `eps(c) = 2 sqrt(c) atanh(sqrt(F(c)))`, the limit of `eps(n, c)`.
pub fn eps_limit(c: &Integer, bits: u32) -> Result<Interval> {
    let f = f_of_c(c, bits)?;
    let ci = Interval::from_int(c, bits);
    Ok(f.sqrt().atanh().mul(&ci.sqrt()).mul_i64(2))
}

/// `log(1 + 1/sqrt(c))`.
pub fn ln1p_inv_sqrt(c: &Integer, bits: u32) -> Interval {
    let s = Interval::from_int(c, bits).sqrt();
    Interval::from_i64(1, bits).div(&s).ln_1p()
}

/// Coprime splits `|c| = u v` with `0 < u < v`; `(1, |c|)` included.
pub fn coprime_splits(c: &Integer) -> Result<Vec<(Integer, Integer)>> {
    let c = Integer::from(c.abs_ref());
    if c < 2 {
        return Err(Error::Domain("splits need |c| >= 2".into()));
    }
    let fs = factorize(&c)?;
    if fs.len() > MAX_SPLIT_PRIMES {
        return Err(Error::FactorizationBudget(format!(
            "{} distinct primes in {c}",
            fs.len()
        )));
    }
    let blocks: Vec<Integer> = fs.iter().map(|(p, e)| p.clone().pow(*e)).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << blocks.len()) {
        let mut u = Integer::from(1);
        for (i, b) in blocks.iter().enumerate() {
            if mask >> i & 1 == 1 {
                u *= b;
            }
        }
        let v = Integer::from(&c / &u);
        if u < v {
            out.push((u, v));
        }
    }
    out.sort();
    Ok(out)
}

/// `q(c)`: smallest `v/u` over coprime splits with `v > u`.
pub fn q_exact(c: &Integer) -> Result<Rational> {
    coprime_splits(c)?
        .into_iter()
        .map(|(u, v)| Rational::from((v, u)))
        .min()
        .ok_or_else(|| Error::Inconsistent("no coprime split".into()))
}

/// `q~(c)`: as `q(c)` but one part must be a square. `(1, c)` always qualifies.
pub fn qtilde_exact(c: &Integer) -> Result<Rational> {
    coprime_splits(c)?
        .into_iter()
        .filter(|(u, v)| is_perfect_square(u) || is_perfect_square(v))
        .map(|(u, v)| Rational::from((v, u)))
        .min()
        .ok_or_else(|| Error::Inconsistent("no admissible split".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundProfile {
    #[serde(with = "crate::json::int")]
    pub c: Integer,
    pub f: Interval,
    pub eps_limit: Interval,
    #[serde(with = "crate::json::opt_rat")]
    pub q: Option<Rational>,
    #[serde(with = "crate::json::opt_rat")]
    pub qtilde: Option<Rational>,
    pub m_bound: u32,
    pub bits: u32,
}

pub fn profile(c: &Integer, bits: u32) -> Result<BoundProfile> {
    need_c_ge_4(c)?;
    let (q, qtilde) = match coprime_splits(c) {
        Ok(_) => (Some(q_exact(c)?), Some(qtilde_exact(c)?)),
        Err(Error::FactorizationBudget(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(BoundProfile {
        c: c.clone(),
        f: f_of_c(c, bits)?,
        eps_limit: eps_limit(c, bits)?,
        q,
        qtilde,
        m_bound: iterate_bound_m_bits(c, bits)?,
        bits,
    })
}

fn m_from_ratio(ratio: &Interval) -> Result<u32> {
    let arg = ratio.add_int(1).log2();
    let fl = arg.hi.clone().floor().to_integer().and_then(|v| v.to_u32());
    fl.map(|v| v + 1)
        .ok_or_else(|| Error::Precision("iterate bound out of range".into()))
}

/// `m = 1 + floor(log2(1 + (log 4 + eps(c)/sqrt(c)) / log(1 + 1/sqrt(c))))`,
/// taken from the upper end of the interval so `m` is never too small.
pub fn iterate_bound_m(c: &Integer) -> Result<u32> {
    iterate_bound_m_bits(c, DEFAULT_BITS)
}

pub fn iterate_bound_m_bits(c: &Integer, bits: u32) -> Result<u32> {
    need_c_ge_4(c)?;
    let sc = Interval::from_int(c, bits).sqrt();
    let num = ln4(bits).add(&eps_limit(c, bits)?.div(&sc));
    m_from_ratio(&num.div(&ln1p_inv_sqrt(c, bits)))
}

/// Threshold above which `eps(c) / (sqrt(c) log(1 + 1/sqrt(c))) < 2.01` is used.
pub const LARGE_C: u32 = 10400;

/// Largest prime index that has to be checked for all even `4 <= c <= x`.
///
/// Below [`LARGE_C`] this is the maximum of `m(c)`; beyond it the bound
/// `1 + floor(log2(3.01 + log 4 / log(1 + 1/sqrt(x))))` takes over.
pub fn prime_cap(x: &Integer) -> Result<u32> {
    need_c_ge_4(x)?;
    let small_top = if *x < LARGE_C { x.to_u32().unwrap() } else { LARGE_C - 1 };
    let mut best = 0;
    let mut c = 4u32;
    while c <= small_top {
        best = best.max(iterate_bound_m(&Integer::from(c))?);
        c += 2;
    }
    if *x >= LARGE_C {
        let bits = DEFAULT_BITS;
        let three01 = Interval::from_rat(&Rational::from((301, 100)), bits);
        let ratio = ln4(bits).div(&ln1p_inv_sqrt(x, bits)).add(&three01);
        let arg = ratio.log2();
        let v = arg.hi.clone().floor().to_integer().and_then(|v| v.to_u32());
        let big = v.ok_or_else(|| Error::Precision("prime cap out of range".into()))? + 1;
        best = best.max(big);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    /// `q(c)` from the factorization of `c`.
    Exact,
    /// The factorization-free bound `q(c) > 1 + 1/sqrt(c)`.
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    /// `c` odd.
    ProvenOdd,
    /// `N log q(c) > log 4 + eps(n, c)/sqrt(c)`.
    ProvenIndex,
    /// `sqrt(c) <= N / log 4 - 3`.
    ProvenSqrt,
    Undecided,
}

impl TailVerdict {
    pub fn is_proven(self) -> bool {
        self != TailVerdict::Undecided
    }
}

/// Decides whether the analytic bound alone shows `a_n(c)` is not a square.
pub fn prop46_nonsquare(c: &Integer, n: u32, mode: QMode) -> Result<TailVerdict> {
    need_c_ge_4(c)?;
    if n < 4 {
        return Err(Error::Domain("the bound needs n >= 4".into()));
    }
    if c.is_odd() {
        return Ok(TailVerdict::ProvenOdd);
    }
    let bits = DEFAULT_BITS + 2 * n.min(2048);
    let nn = Interval::from_int(&n_of(n)?, bits);
    let sc = Interval::from_int(c, bits).sqrt();
    let rhs = nn.div(&ln4(bits)).add_int(-3);
    if sc.certainly_le(&rhs) {
        return Ok(TailVerdict::ProvenSqrt);
    }
    let ln_q = match mode {
        QMode::Exact => match q_exact(c) {
            Ok(q) => Interval::from_rat(&q, bits).ln(),
            Err(Error::FactorizationBudget(_)) => ln1p_inv_sqrt(c, bits),
            Err(e) => return Err(e),
        },
        QMode::LowerBound => ln1p_inv_sqrt(c, bits),
    };
    let lhs = nn.mul(&ln_q);
    let bound = ln4(bits).add(&eps_n(c, n, bits)?.div(&sc));
    if bound.certainly_lt(&lhs) {
        return Ok(TailVerdict::ProvenIndex);
    }
    Ok(TailVerdict::Undecided)
}

/// Sign and valuation split of `|c|` into `(num, den)` for the case 5/6 ratios.
fn split_products(c: &Integer, in_num: impl Fn(&Integer, u32) -> bool) -> Result<(Integer, Integer)> {
    let fs = factorize(&Integer::from(c.abs_ref()))?;
    let mut num = Integer::from(1);
    let mut den = Integer::from(1);
    for (p, e) in fs {
        let pe = p.clone().pow(e);
        if in_num(&p, e) {
            num *= pe;
        } else {
            den *= pe;
        }
    }
    Ok((num, den))
}

/// `ratio > 1.15 |c|^(-1/30)`, decided exactly as `ratio^30 |c| > (23/20)^30`.
fn beats_115(ratio: &Rational, c: &Integer) -> bool {
    let lhs = Rational::from(ratio.pow(30u32)) * Integer::from(c.abs_ref());
    let rhs = Rational::from((23, 20)).pow(30u32);
    lhs > rhs
}

/// The odd-vs-even valuation inequality, for `c` not of the form `4m^2(m^2-1)`.
pub fn case5_inequality(c: &Integer) -> Result<bool> {
    if *c == 0 {
        return Err(Error::Domain("c must be nonzero".into()));
    }
    if matches!(
        crate::polyfactors::reducible_shape(c),
        Some(crate::polyfactors::Shape::TwoStep { .. })
    ) {
        return Ok(false);
    }
    let (num, den) = split_products(c, |_, e| e % 2 == 1)?;
    Ok(beats_115(&Rational::from((num, den)), c))
}

/// The `p != 1 mod 4` vs `p = 1 mod 4` inequality, for `c = k^2`, `k >= 2`.
pub fn case6_inequality(c: &Integer) -> Result<bool> {
    if *c < 4 || !is_perfect_square(c) {
        return Ok(false);
    }
    let (num, den) = split_products(c, |p, _| !p.is_congruent_u(1, 4))?;
    Ok(beats_115(&Rational::from((num, den)), c))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSplit {
    #[serde(with = "crate::json::int")]
    pub u: Integer,
    #[serde(with = "crate::json::int")]
    pub v: Integer,
    pub n: u32,
}

/// Searches all coprime splits `c = uv` (both signs) for the relation a
/// square `a_n(c)` would force: `v^N - u^N/4 = a_{n-1}` for even `c` (with
/// `u` even), `v^N - u^N = 2 a_{n-1}` for odd `c`.
pub fn dioph_split_search(c: &Integer, n: u32) -> Result<Option<FactorSplit>> {
    if *c < 1 || n < 2 {
        return Err(Error::Domain("split search needs c >= 1 and n >= 2".into()));
    }
    let needed = estimated_bits(c, n);
    if needed > DEFAULT_BIT_BUDGET {
        return Err(Error::Budget {
            needed,
            budget: DEFAULT_BIT_BUDGET,
        });
    }
    let nn = n_of(n)?.to_u32().expect("small N");
    let prev = compute_a(c, n - 1)?.value;
    let mut cands: Vec<(Integer, Integer)> = Vec::new();
    if *c == 1 {
        cands.push((Integer::from(1), Integer::from(1)));
    } else {
        for (a, b) in coprime_splits(c)? {
            cands.push((a.clone(), b.clone()));
            cands.push((b, a));
        }
    }
    let even = c.is_even();
    for (u, v) in cands {
        if even && u.is_odd() {
            continue;
        }
        for sign in [1i32, -1] {
            let (u, v) = (Integer::from(&u * sign), Integer::from(&v * sign));
            let vn = v.clone().pow(nn);
            let un = u.clone().pow(nn);
            let holds = if even {
                // v^N - u^N/4 = a  <=>  4 v^N - u^N = 4a
                Integer::from(&vn * 4u32) - &un == Integer::from(&prev * 4u32)
            } else {
                vn - un == Integer::from(&prev * 2u32)
            };
            if holds {
                return Ok(Some(FactorSplit { u, v, n }));
            }
        }
    }
    Ok(None)
}

/// `theta = 2^(1/N)`.
pub fn theta(nn: &Integer, bits: u32) -> Interval {
    Interval::ln2(bits).div_int(nn).exp()
}

/// `(3 +- 2 sqrt 2)^(1/N)`.
pub fn three_pm_root(nn: &Integer, plus: bool, bits: u32) -> Interval {
    let r8 = Interval::from_i64(8, bits).sqrt();
    let base = if plus { Interval::from_i64(3, bits).add(&r8) } else { Interval::from_i64(3, bits).sub(&r8) };
    base.ln().div_int(nn).exp()
}

/// Initial lower bound `ceil((sqrt 2 - 1)^(1/N) / theta * (N / log 4 - 3))` on `|v|`.
///
/// The ceiling is taken of the lower end of the interval, so the result
/// never exceeds the true value.
pub fn initial_b0(n: u32) -> Result<Integer> {
    if n < 5 {
        return Err(Error::Domain("initial bound needs n >= 5".into()));
    }
    let nn = n_of(n)?;
    let bits = DEFAULT_BITS + 2 * n;
    let s = Interval::from_i64(2, bits).sqrt().add_int(-1).ln().div_int(&nn).exp();
    let val = s
        .div(&theta(&nn, bits))
        .mul(&Interval::from_int(&nn, bits).div(&ln4(bits)).add_int(-3));
    Ok(val.lo.clone().ceil().to_integer().expect("finite"))
}

/// The bounds on `u / (theta^2 v)` and its inverse, certified.
pub fn cuv_bounds_check(c: &Integer, split: &FactorSplit) -> bool {
    let _ = c;
    if split.n < 2 {
        return false;
    }
    let Ok(nn) = n_of(split.n) else { return false };
    if split.v == 0 || split.u == 0 {
        return false;
    }
    let bits = DEFAULT_BITS + 2 * split.n;
    let t2 = theta(&nn, bits).square();
    let lo = three_pm_root(&nn, false, bits);
    let hi = three_pm_root(&nn, true, bits);
    let r = Interval::from_int(&split.u, bits).div(&t2.mul_int(&split.v));
    let r_inv = t2.mul_int(&split.v).div_int(&split.u);
    lo.certainly_lt(&r) && r.certainly_lt(&hi) && lo.certainly_lt(&r_inv) && r_inv.certainly_lt(&hi)
}

/// `c > theta^2 (3 - 2 sqrt 2)^(1/N) v^2`, the consequence of the bounds.
pub fn c_exceeds_kappa_v2(c: &Integer, split: &FactorSplit) -> bool {
    if split.n < 2 {
        return false;
    }
    let Ok(nn) = n_of(split.n) else { return false };
    let bits = DEFAULT_BITS + 2 * split.n;
    let k = kappa(&nn, bits);
    let rhs = k.mul_int(&Integer::from(split.v.square_ref()));
    rhs.certainly_lt(&Interval::from_int(c, bits))
}

/// `kappa = theta^2 (3 - 2 sqrt 2)^(1/N)`, so `c > kappa v^2` for a square `a_n`.
pub fn kappa(nn: &Integer, bits: u32) -> Interval {
    theta(nn, bits).square().mul(&three_pm_root(nn, false, bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(v: i64) -> Integer {
        Integer::from(v)
    }

    fn close(x: &Interval, v: f64, tol: f64) -> bool {
        (x.mid_f64() - v).abs() < tol
    }

    #[test]
    fn f_and_eps_at_4() {
        let f = f_of_c(&z(4), 128).unwrap();
        assert!(f.lo <= 0.5 && f.hi >= 0.5);
        let e = eps_limit(&z(4), 128).unwrap();
        let want = 4.0 * (1.0 + 2f64.sqrt()).ln();
        assert!(close(&e, want, 1e-12), "{e}");
        assert!(close(&e, 3.52549, 1e-5));
    }

    #[test]
    fn q_values() {
        assert_eq!(q_exact(&z(6)).unwrap(), Rational::from((3, 2)));
        assert_eq!(q_exact(&z(7)).unwrap(), Rational::from(7));
        assert_eq!(qtilde_exact(&z(6)).unwrap(), Rational::from(6));
        assert_eq!(qtilde_exact(&z(36)).unwrap(), Rational::from((9, 4)));
        assert_eq!(q_exact(&z(1_000_000)).unwrap(), Rational::from((15625, 64)));
    }

    #[test]
    fn iterate_bounds() {
        assert_eq!(iterate_bound_m(&z(4)).unwrap(), 4);
        assert_eq!(iterate_bound_m(&z(1_000_000)).unwrap(), 11);
        let x = Integer::from(10).pow(1000u32);
        assert_eq!(prime_cap(&x).unwrap(), 1662);
    }

    #[test]
    fn prop46_examples() {
        assert_eq!(prop46_nonsquare(&z(5), 4, QMode::Exact).unwrap(), TailVerdict::ProvenOdd);
        assert!(prop46_nonsquare(&z(100), 20, QMode::LowerBound).unwrap().is_proven());
        assert_eq!(prop46_nonsquare(&z(100), 20, QMode::LowerBound).unwrap(), TailVerdict::ProvenSqrt);
        let c = z(1_000_000);
        assert_eq!(prop46_nonsquare(&c, 5, QMode::LowerBound).unwrap(), TailVerdict::Undecided);
        assert_eq!(prop46_nonsquare(&c, 5, QMode::Exact).unwrap(), TailVerdict::ProvenIndex);
    }

    #[test]
    fn case5_case6() {
        for c in [6i64, 10, 30, 2 * 3 * 5 * 7 * 11] {
            assert!(case5_inequality(&z(c)).unwrap());
        }
        assert!(!case5_inequality(&z(1024)).unwrap());
        assert!(case6_inequality(&z(36)).unwrap());
        assert!(!case6_inequality(&z(35)).unwrap());
    }

    #[test]
    fn dioph_small_cases() {
        let s = dioph_split_search(&z(8), 2).unwrap().unwrap();
        assert_eq!((s.u.clone(), s.v.clone()), (z(-8), z(-1)));
        let s = dioph_split_search(&z(3), 2).unwrap().unwrap();
        assert_eq!((s.u.clone(), s.v.clone()), (z(1), z(3)));
        assert_eq!(dioph_split_search(&z(10), 5).unwrap(), None);
    }

    #[test]
    fn initial_bounds() {
        assert_eq!(initial_b0(5).unwrap(), 8);
        assert_eq!(initial_b0(7).unwrap(), 42);
        let mut prev = initial_b0(5).unwrap();
        for n in 6..20 {
            let b = initial_b0(n).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn cuv_synthetic() {
        let s = FactorSplit { u: z(1), v: z(3), n: 2 };
        assert!(!cuv_bounds_check(&z(3), &s));
    }
}

//! Closed intervals of MPFR floats with outward rounding.
//!
//! Every operation rounds the lower end down and the upper end up, so the
//! exact real value stays inside. Decisions are taken only when the whole
//! interval agrees ("certified"); otherwise callers raise precision.

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Constant, Round};
use rug::ops::AssignRound;
use rug::{Float, Integer, Rational};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: Float,
    pub hi: Float,
}

fn down<T>(prec: u32, v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Down).0
}

fn up<T>(prec: u32, v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Up).0
}

macro_rules! round_both {
    ($prec:expr, $lo:expr, $hi:expr) => {{
        let (lo, _) = Float::with_val_round($prec, $lo, Round::Down);
        let (hi, _) = Float::with_val_round($prec, $hi, Round::Up);
        Interval { lo, hi }
    }};
}

impl Interval {
    pub fn prec(&self) -> u32 {
        self.lo.prec()
    }

    pub fn from_int(x: &Integer, prec: u32) -> Self {
        round_both!(prec, x, x)
    }

    pub fn from_i64(x: i64, prec: u32) -> Self {
        round_both!(prec, x, x)
    }

    pub fn from_rat(x: &Rational, prec: u32) -> Self {
        round_both!(prec, x, x)
    }

    pub fn ln2(prec: u32) -> Self {
        round_both!(prec, Constant::Log2, Constant::Log2)
    }

    pub fn add(&self, o: &Self) -> Self {
        let p = self.prec();
        round_both!(p, &self.lo + &o.lo, &self.hi + &o.hi)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let p = self.prec();
        round_both!(p, &self.lo - &o.hi, &self.hi - &o.lo)
    }

    pub fn add_int(&self, k: i64) -> Self {
        let p = self.prec();
        round_both!(p, &self.lo + k, &self.hi + k)
    }

    pub fn neg(&self) -> Self {
        Interval {
            lo: Float::with_val(self.prec(), -&self.hi),
            hi: Float::with_val(self.prec(), -&self.lo),
        }
    }

    /// Product of two intervals, general signs.
    pub fn mul(&self, o: &Self) -> Self {
        let p = self.prec();
        let cands_lo = [
            down(p, &self.lo * &o.lo),
            down(p, &self.lo * &o.hi),
            down(p, &self.hi * &o.lo),
            down(p, &self.hi * &o.hi),
        ];
        let cands_hi = [
            up(p, &self.lo * &o.lo),
            up(p, &self.lo * &o.hi),
            up(p, &self.hi * &o.lo),
            up(p, &self.hi * &o.hi),
        ];
        let lo = cands_lo.into_iter().reduce(|a, b| if b < a { b } else { a }).unwrap();
        let hi = cands_hi.into_iter().reduce(|a, b| if b > a { b } else { a }).unwrap();
        Interval { lo, hi }
    }

    /// Quotient; the divisor must not contain zero.
    pub fn div(&self, o: &Self) -> Self {
        assert!(o.lo > 0 || o.hi < 0, "division by an interval containing 0");
        let p = self.prec();
        let cands_lo = [
            down(p, &self.lo / &o.lo),
            down(p, &self.lo / &o.hi),
            down(p, &self.hi / &o.lo),
            down(p, &self.hi / &o.hi),
        ];
        let cands_hi = [
            up(p, &self.lo / &o.lo),
            up(p, &self.lo / &o.hi),
            up(p, &self.hi / &o.lo),
            up(p, &self.hi / &o.hi),
        ];
        let lo = cands_lo.into_iter().reduce(|a, b| if b < a { b } else { a }).unwrap();
        let hi = cands_hi.into_iter().reduce(|a, b| if b > a { b } else { a }).unwrap();
        Interval { lo, hi }
    }

    pub fn mul_int(&self, k: &Integer) -> Self {
        self.mul(&Interval::from_int(k, self.prec()))
    }

    pub fn div_int(&self, k: &Integer) -> Self {
        self.div(&Interval::from_int(k, self.prec()))
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        self.mul(&Interval::from_i64(k, self.prec()))
    }

    pub fn div_i64(&self, k: i64) -> Self {
        self.div(&Interval::from_i64(k, self.prec()))
    }

    fn monotone(&self, f: impl Fn(&mut Float, Round) -> Ordering) -> Self {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        f(&mut lo, Round::Down);
        f(&mut hi, Round::Up);
        Interval { lo, hi }
    }

    pub fn sqrt(&self) -> Self {
        assert!(self.lo >= 0, "sqrt of a possibly negative interval");
        self.monotone(|x, r| x.sqrt_round(r))
    }

    pub fn exp(&self) -> Self {
        self.monotone(|x, r| x.exp_round(r))
    }

    pub fn ln(&self) -> Self {
        assert!(self.lo > 0, "ln of a possibly non-positive interval");
        self.monotone(|x, r| x.ln_round(r))
    }

    pub fn ln_1p(&self) -> Self {
        assert!(self.lo > -1, "ln_1p below -1");
        self.monotone(|x, r| x.ln_1p_round(r))
    }

    pub fn log2(&self) -> Self {
        assert!(self.lo > 0, "log2 of a possibly non-positive interval");
        self.monotone(|x, r| x.log2_round(r))
    }

    pub fn atanh(&self) -> Self {
        assert!(self.lo > -1 && self.hi < 1, "atanh outside (-1, 1)");
        self.monotone(|x, r| x.atanh_round(r))
    }

    pub fn square(&self) -> Self {
        if self.lo >= 0 {
            self.monotone(|x, r| x.square_round(r))
        } else {
            self.mul(self)
        }
    }

    /// `floor` of every point, when they agree.
    pub fn floor_certified(&self) -> Option<Integer> {
        let a = self.lo.clone().floor().to_integer()?;
        let b = self.hi.clone().floor().to_integer()?;
        (a == b).then_some(a)
    }

    pub fn ceil_certified(&self) -> Option<Integer> {
        let a = self.lo.clone().ceil().to_integer()?;
        let b = self.hi.clone().ceil().to_integer()?;
        (a == b).then_some(a)
    }

    /// Nearest integer with halves rounded up, when every point agrees.
    pub fn round_half_up_certified(&self) -> Option<Integer> {
        self.add_half().floor_certified()
    }

    fn add_half(&self) -> Self {
        let p = self.prec() + 2;
        let half = Float::with_val(p, 0.5);
        round_both!(p, &self.lo + &half, &self.hi + &half)
    }

    /// Smallest integer `>=` every point of the interval.
    pub fn ceil_upper(&self) -> Integer {
        self.hi.clone().ceil().to_integer().expect("finite interval")
    }

    /// Largest integer `<=` every point of the interval.
    pub fn floor_lower(&self) -> Integer {
        self.lo.clone().floor().to_integer().expect("finite interval")
    }

    pub fn certainly_lt(&self, o: &Self) -> bool {
        self.hi < o.lo
    }

    pub fn certainly_le(&self, o: &Self) -> bool {
        self.hi <= o.lo
    }

    pub fn certainly_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn width(&self) -> Float {
        Float::with_val_round(self.prec(), &self.hi - &self.lo, Round::Up).0
    }

    pub fn mid_f64(&self) -> f64 {
        let m = Float::with_val(self.prec(), &self.lo + &self.hi) / 2u32;
        m.to_f64()
    }

    pub fn lo_string(&self, digits: usize) -> String {
        self.lo.to_string_radix_round(10, Some(digits), Round::Down)
    }

    pub fn hi_string(&self, digits: usize) -> String {
        self.hi.to_string_radix_round(10, Some(digits), Round::Up)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo_string(20), self.hi_string(20))
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Interval", 2)?;
        st.serialize_field("lo", &self.lo_string(30))?;
        st.serialize_field("hi", &self.hi_string(30))?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encloses_known_constants() {
        let l = Interval::ln2(128);
        assert!(l.lo <= l.hi);
        assert!(l.lo.to_f64() <= std::f64::consts::LN_2 + 1e-15);
        let two = Interval::from_i64(2, 128);
        let r = two.sqrt();
        let back = r.square();
        assert!(back.lo <= 2 && back.hi >= 2);
        let e = Interval::from_i64(1, 200).exp();
        assert!((e.mid_f64() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn certified_rounding() {
        let x = Interval::from_rat(&Rational::from((7, 2)), 64);
        assert_eq!(x.round_half_up_certified(), Some(Integer::from(4)));
        assert_eq!(x.floor_certified(), Some(Integer::from(3)));
        assert_eq!(x.ceil_certified(), Some(Integer::from(4)));
        let third = Interval::from_i64(1, 64).div_i64(3);
        assert!(third.lo < third.hi);
        assert_eq!(third.round_half_up_certified(), Some(Integer::new()));
        let straddle = Interval {
            lo: Float::with_val(64, 2.999),
            hi: Float::with_val(64, 3.001),
        };
        assert_eq!(straddle.floor_certified(), None);
    }

    #[test]
    fn signs_in_products() {
        let a = Interval::from_i64(-3, 64);
        let b = Interval::from_i64(2, 64);
        let p = a.mul(&b);
        assert_eq!(p.lo, -6);
        assert_eq!(p.hi, -6);
        let q = b.div(&a);
        assert!(q.lo <= q.hi && q.hi < 0);
    }
}

//! Which primes divide the orbit of `t` under `f(x) = x^2 + 1/c`, and how
//! the fraction of such primes behaves up to a bound.
//!
//! A prime `p` (not dividing `c` or the denominator of `t`) divides the
//! orbit when some `f^n(t)` has positive `p`-adic valuation. A hit at
//! `n >= 1` forces `f^{n-1}(t)^2 = -1/c mod p`, so `-c` must be a
//! quadratic residue; every run audits that.

use std::fmt::Write as _;

use primal::Primes;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::bigratseq::is_perfect_square;
use crate::modsieve::{int_mod, inv_mod, jacobi_u64};
use crate::polyfactors::rational_mod;
use crate::{Error, Result};

/// Exact iteration stops once a denominator exceeds this many bits; points
/// of larger height never map to 0 again.
const EXACT_BITS: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub bound: u64,
    pub dividing: u64,
    pub primes: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    #[serde(with = "crate::json::int")]
    pub c: Integer,
    #[serde(with = "crate::json::rat")]
    pub t: Rational,
    pub checkpoints: Vec<Checkpoint>,
    /// Primes dividing `c` or the denominator of `t`.
    pub excluded: Vec<u64>,
    /// Dividing primes `p` not dividing `2c` with `(-c/p) != 1`. Expected empty.
    pub violations: Vec<u64>,
    pub hypothesis_met: bool,
    pub banner: Option<String>,
}

impl DensityProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bound,dividing,primes,fraction\n");
        for cp in &self.checkpoints {
            let _ = writeln!(s, "{},{},{},{:.6}", cp.bound, cp.dividing, cp.primes, cp.fraction);
        }
        s
    }
}

/// Index at which the exact orbit of `t` is 0, if it ever is.
fn exact_zero_index(c: &Integer, t: &Rational) -> Option<usize> {
    let r = Rational::from((Integer::from(1), c.clone()));
    let mut x = t.clone();
    let mut n = 0;
    loop {
        if x == 0 {
            return Some(n);
        }
        if x.denom().significant_bits() > EXACT_BITS {
            return None;
        }
        x = Rational::from(x.square_ref()) + &r;
        n += 1;
    }
}

/// Orbit of `x0` under `x^2 + c0` mod `p`: does 0 occur at an index other than `skip`,
/// and does it occur at an index `>= 1`?
fn zero_hits(x0: u64, c0: u64, p: u64, skip: Option<usize>) -> (bool, bool) {
    let step = |x: u64| ((x as u128 * x as u128 + c0 as u128) % p as u128) as u64;
    // Brent: period lam, then the tail length mu.
    let (mut power, mut lam) = (1usize, 1usize);
    let mut tortoise = x0;
    let mut hare = step(x0);
    while tortoise != hare {
        if power == lam {
            tortoise = hare;
            power *= 2;
            lam = 0;
        }
        hare = step(hare);
        lam += 1;
    }
    let mut tortoise = x0;
    let mut hare = x0;
    for _ in 0..lam {
        hare = step(hare);
    }
    let mut mu = 0;
    while tortoise != hare {
        tortoise = step(tortoise);
        hare = step(hare);
        mu += 1;
    }
    let (mut any, mut late) = (false, false);
    let mut x = x0;
    // Two laps of the cycle: the skipped index hides at most one occurrence.
    for n in 0..mu + 2 * lam {
        if x == 0 && Some(n) != skip {
            any = true;
            late |= n >= 1;
        }
        x = step(x);
    }
    (any, late)
}

fn excluded(p: u64, c: &Integer, t: &Rational) -> bool {
    c.is_divisible_u(p as u32) || t.denom().is_divisible_u(p as u32)
}

fn need_domain(c: &Integer) -> Result<()> {
    if *c == 0 || *c == -1 {
        return Err(Error::Domain(format!("c = {c} is excluded")));
    }
    Ok(())
}

pub fn divides_orbit(p: u64, c: &Integer, t: &Rational) -> Result<bool> {
    need_domain(c)?;
    if p < 2 || p > u32::MAX as u64 || !primal::is_prime(p) {
        return Err(Error::Domain(format!("{p} is not a prime")));
    }
    if excluded(p, c, t) {
        return Err(Error::Domain(format!("excluded prime {p} divides c or the denominator of t")));
    }
    let skip = exact_zero_index(c, t);
    Ok(status(p, c, t, skip).0)
}

/// `(divides, hit at n >= 1)` for a prime already known not to be excluded.
fn status(p: u64, c: &Integer, t: &Rational, skip: Option<usize>) -> (bool, bool) {
    let c0 = inv_mod(int_mod(c, p), p).expect("p does not divide c");
    let x0 = rational_mod(t, p).expect("p does not divide the denominator");
    zero_hits(x0, c0, p, skip)
}

/// Fractions of dividing primes at each checkpoint (and at `b_max`).
pub fn density_profile(c: &Integer, t: &Rational, b_max: u64, checkpoints: &[u64]) -> Result<DensityProfile> {
    need_domain(c)?;
    if b_max > u32::MAX as u64 {
        return Err(Error::Domain("prime bound must fit in 32 bits".into()));
    }
    let neg_sq = *c < 0 && is_perfect_square(&Integer::from(-c));
    let c1_sq = is_perfect_square(&Integer::from(c + 1u32));
    let hypothesis_met = !neg_sq && !c1_sq;
    let banner = (!hypothesis_met).then(|| {
        let which = if neg_sq { "-c" } else { "c + 1" };
        format!("hypothesis not met: {which} is a square; the density statement does not apply")
    });

    let skip = exact_zero_index(c, t);
    let primes: Vec<u64> = Primes::all().map(|p| p as u64).take_while(|&p| p <= b_max).collect();
    let rows: Vec<(u64, Option<(bool, bool)>)> = primes
        .par_iter()
        .map(|&p| (p, (!excluded(p, c, t)).then(|| status(p, c, t, skip))))
        .collect();

    let mut bounds: Vec<u64> = checkpoints.iter().copied().filter(|&b| b <= b_max).collect();
    bounds.push(b_max);
    bounds.sort_unstable();
    bounds.dedup();

    let mut out = DensityProfile {
        c: c.clone(),
        t: t.clone(),
        checkpoints: Vec::new(),
        excluded: Vec::new(),
        violations: Vec::new(),
        hypothesis_met,
        banner,
    };
    let (mut dividing, mut counted) = (0u64, 0u64);
    let mut next = 0;
    let flush = |bound: u64, dividing: u64, counted: u64, out: &mut DensityProfile| {
        let fraction = if counted == 0 { 0.0 } else { dividing as f64 / counted as f64 };
        out.checkpoints.push(Checkpoint { bound, dividing, primes: counted, fraction });
    };
    for (p, st) in rows {
        while next < bounds.len() && p > bounds[next] {
            flush(bounds[next], dividing, counted, &mut out);
            next += 1;
        }
        match st {
            None => out.excluded.push(p),
            Some((div, late)) => {
                counted += 1;
                if div {
                    dividing += 1;
                }
                if late && p != 2 {
                    let neg_c = (p - int_mod(c, p)) % p;
                    if jacobi_u64(neg_c, p) != 1 {
                        out.violations.push(p);
                    }
                }
            }
        }
    }
    while next < bounds.len() {
        flush(bounds[next], dividing, counted, &mut out);
        next += 1;
    }
    Ok(out)
}

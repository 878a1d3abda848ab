//! Lattice escalation: turns a lower bound `B0` on `|v|` into a much larger
//! one, so that `a_p(c)` is shown non-square for every even `c` up to a bound.
//!
//! One pass works with the integral lattice spanned by
//! `(g, t) = (round(gamma B0^4), round(theta^2 B0^8))` and `(0, -B0^8)`,
//! target `(0, round(2 theta B0^8 / N))`, where `theta = 2^(1/N)`.

use std::cmp::Ordering;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::factor::primes_up_to;
use crate::interval::Interval;
use crate::modsieve::{certify_at_prime, SieveCertificate, Target};
use crate::stabbounds::{initial_b0, kappa, prime_cap, three_pm_root, theta};
use crate::{Error, Result};

pub const MAX_GAMMA_DOUBLINGS: u32 = 64;
pub const MAX_PASSES: usize = 64;
const MAX_PREC_DOUBLINGS: u32 = 8;

pub type Vec2 = [Integer; 2];

fn big_n(n: u32) -> Result<Integer> {
    if !(5..=4096).contains(&n) {
        return Err(Error::Domain(format!("lattice index n = {n} out of range")));
    }
    Ok((Integer::from(1) << (n - 1)) - 1u32)
}

/// A real number `mantissa / 2^scale` known to within one unit in the last place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedPointReal {
    #[serde(with = "crate::json::int")]
    pub mantissa: Integer,
    pub scale: u32,
}

/// `theta = 2^(1/N)` as a fixed-point number with certified error below `2^-bits`.
pub fn theta_fixed(nn: &Integer, bits: u32) -> FixedPointReal {
    let mut prec = bits + 64;
    loop {
        let th = theta(nn, prec);
        let scaled = th.mul_int(&(Integer::from(1) << bits));
        if let Some(m) = scaled.floor_certified() {
            return FixedPointReal { mantissa: m, scale: bits };
        }
        // Floor undecided: any neighbour is within one ulp as long as the width is tiny.
        if scaled.width() < 1 {
            return FixedPointReal { mantissa: scaled.floor_lower(), scale: bits };
        }
        prec *= 2;
    }
}

/// The four rounded integers of one pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassIntegers {
    pub g: Integer,
    pub t: Integer,
    pub target: Integer,
    pub d: Integer,
}

/// Interval enclosures of `gamma B0^4`, `theta^2 B0^8`, `2 theta B0^8 / N`, `delta^2 B0^16`.
pub fn pass_reals(nn: &Integer, b0: &Integer, doublings: u32, bits: u32) -> [Interval; 4] {
    let th = theta(nn, bits);
    let delta = three_pm_root(nn, true, bits).mul_i64(4).div(&th.mul_int(nn));
    let d2 = delta.square();
    let b4 = b0.clone().pow(4u32);
    let b8 = Integer::from(b4.square_ref());
    let b16 = Integer::from(b8.square_ref());
    let gamma = d2.mul_int(&(Integer::from(1) << doublings));
    [
        gamma.mul_int(&b4),
        th.square().mul_int(&b8),
        th.mul_int(&b8).mul_i64(2).div_int(nn),
        d2.mul_int(&b16),
    ]
}

fn default_bits(b0: &Integer) -> u32 {
    16 * b0.significant_bits() + 128
}

/// Rounds with nearest-integer (halves up) and ceiling, doubling precision until certified.
pub fn pass_integers(nn: &Integer, b0: &Integer, doublings: u32) -> Result<(PassIntegers, u32)> {
    let mut bits = default_bits(b0);
    for _ in 0..=MAX_PREC_DOUBLINGS {
        let [g, t, tt, d] = pass_reals(nn, b0, doublings, bits);
        let got = (
            g.round_half_up_certified(),
            t.round_half_up_certified(),
            tt.round_half_up_certified(),
            d.ceil_certified(),
        );
        if let (Some(g), Some(t), Some(target), Some(d)) = got {
            return Ok((PassIntegers { g, t, target, d }, bits));
        }
        bits *= 2;
    }
    Err(Error::Precision(format!("rounding undecided for B0 = {b0}")))
}

fn dot(a: &Vec2, b: &Vec2) -> Integer {
    Integer::from(&a[0] * &b[0]) + Integer::from(&a[1] * &b[1])
}

fn norm2(a: &Vec2) -> Integer {
    dot(a, a)
}

fn axpy(y: &Vec2, k: &Integer, x: &Vec2) -> Vec2 {
    [
        Integer::from(&y[0] - Integer::from(k * &x[0])),
        Integer::from(&y[1] - Integer::from(k * &x[1])),
    ]
}

/// Nearest integer to `num/den`, halves up; `den > 0`.
fn round_div(num: &Integer, den: &Integer) -> Integer {
    let two_num = Integer::from(num * 2u32) + den;
    two_num.div_rem_floor(Integer::from(den * 2u32)).0
}

fn rat_floor(q: &Rational) -> Integer {
    let (n, d) = q.clone().into_numer_denom();
    n.div_rem_floor(d).0
}

fn isqrt_rat_upper(q: &Rational) -> Integer {
    if *q <= 0 {
        return Integer::new();
    }
    rat_floor(q).sqrt() + 1u32
}

/// Lagrange-Gauss reduction. Returns the reduced basis and the transform `U`
/// with `reduced[i] = U[i][0] basis[0] + U[i][1] basis[1]`.
pub fn gauss_reduce(basis: &[Vec2; 2]) -> ([Vec2; 2], [Vec2; 2]) {
    let mut b = basis.clone();
    let mut u: [Vec2; 2] = [
        [Integer::from(1), Integer::new()],
        [Integer::new(), Integer::from(1)],
    ];
    loop {
        if norm2(&b[0]) > norm2(&b[1]) {
            b.swap(0, 1);
            u.swap(0, 1);
        }
        let mu = round_div(&dot(&b[0], &b[1]), &norm2(&b[0]));
        if mu == 0 {
            break;
        }
        b[1] = axpy(&b[1], &mu, &b[0]);
        u[1] = axpy(&u[1], &mu, &u[0]);
    }
    (b, u)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePoint {
    /// Coefficients with respect to the basis as given.
    #[serde(with = "crate::json::vec_int")]
    pub coeffs: Vec<Integer>,
    #[serde(with = "crate::json::vec_int")]
    pub point: Vec<Integer>,
    #[serde(with = "crate::json::int")]
    pub dist2: Integer,
}

fn point_order(a: &LatticePoint, b: &LatticePoint) -> Ordering {
    a.dist2.cmp(&b.dist2).then_with(|| a.coeffs.cmp(&b.coeffs))
}

fn make_point(basis: &[Vec2; 2], target: &Vec2, c0: Integer, c1: Integer) -> LatticePoint {
    let p0 = Integer::from(&c0 * &basis[0][0]) + Integer::from(&c1 * &basis[1][0]);
    let p1 = Integer::from(&c0 * &basis[0][1]) + Integer::from(&c1 * &basis[1][1]);
    let e0 = Integer::from(&p0 - &target[0]);
    let e1 = Integer::from(&p1 - &target[1]);
    let dist2 = e0.square() + e1.square();
    LatticePoint { coeffs: vec![c0, c1], point: vec![p0, p1], dist2 }
}

/// Coordinates `(y0, y1)` of `t` in the basis `r`.
fn solve2(r: &[Vec2; 2], t: &Vec2) -> (Rational, Rational) {
    let det = Integer::from(&r[0][0] * &r[1][1]) - Integer::from(&r[0][1] * &r[1][0]);
    let y0 = Integer::from(&t[0] * &r[1][1]) - Integer::from(&t[1] * &r[1][0]);
    let y1 = Integer::from(&r[0][0] * &t[1]) - Integer::from(&r[0][1] * &t[0]);
    (Rational::from((y0, det.clone())), Rational::from((y1, det)))
}

/// The `k` lattice points nearest to `target`, exact, ties broken by
/// lexicographic order of the coefficients.
pub fn closest_points(basis: &[Vec2; 2], target: &Vec2, k: usize) -> Vec<LatticePoint> {
    let (r, u) = gauss_reduce(basis);
    let (y0, y1) = solve2(&r, target);
    let to_orig = |x0: &Integer, x1: &Integer| {
        (
            Integer::from(x0 * &u[0][0]) + Integer::from(x1 * &u[1][0]),
            Integer::from(x0 * &u[0][1]) + Integer::from(x1 * &u[1][1]),
        )
    };
    // Seed radius from a 4x4 box around the real coordinates.
    let (f0, f1) = (rat_floor(&y0), rat_floor(&y1));
    let mut seed = Vec::new();
    for i in -1i32..=2 {
        for j in -1i32..=2 {
            let (c0, c1) = to_orig(&Integer::from(&f0 + i), &Integer::from(&f1 + j));
            seed.push(make_point(basis, target, c0, c1));
        }
    }
    seed.sort_by(point_order);
    let radius = seed[k.min(seed.len()) - 1].dist2.clone();

    // |p - t|^2 = (x0 - y0 + mu (x1 - y1))^2 |r0|^2 + (x1 - y1)^2 |r1*|^2
    let n0 = norm2(&r[0]);
    let mu = Rational::from((dot(&r[0], &r[1]), n0.clone()));
    let r1s = Rational::from(norm2(&r[1])) - Rational::from(mu.square_ref()) * &n0;
    let rad = Rational::from(radius.clone());
    let s1 = isqrt_rat_upper(&Rational::from(&rad / &r1s));
    let mut found = Vec::new();
    let mut x1 = Integer::from(&f1 - &s1);
    let x1_end = Integer::from(&f1 + &s1) + 1u32;
    while x1 <= x1_end {
        let off = Rational::from(&x1 - &y1);
        let e1 = Rational::from(off.square_ref()) * &r1s;
        if e1 <= rad {
            let center = Rational::from(&y0 - Rational::from(&mu * &off));
            let s0 = isqrt_rat_upper(&((Rational::from(&rad - &e1)) / Rational::from(n0.clone())));
            let fc = rat_floor(&center);
            let mut x0 = Integer::from(&fc - &s0);
            let x0_end = Integer::from(&fc + &s0) + 1u32;
            while x0 <= x0_end {
                let (c0, c1) = to_orig(&x0, &x1);
                let p = make_point(basis, target, c0, c1);
                if p.dist2 <= radius {
                    found.push(p);
                }
                x0 += 1u32;
            }
        }
        x1 += 1u32;
    }
    found.sort_by(point_order);
    found.dedup();
    found.truncate(k);
    found
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearPoint {
    #[serde(with = "crate::json::int")]
    pub v: Integer,
    #[serde(with = "crate::json::int")]
    pub u: Integer,
    #[serde(with = "crate::json::int")]
    pub a: Integer,
    #[serde(with = "crate::json::int")]
    pub b: Integer,
}

impl NearPoint {
    /// `max(0, |a| - |v|)^2 + max(0, |b| - |v| - 1)^2`.
    pub fn sigma_term(&self) -> Integer {
        let av = Integer::from(self.v.abs_ref());
        let ta = (Integer::from(self.a.abs_ref()) - &av).max(Integer::new());
        let tb = (Integer::from(self.b.abs_ref()) - av - 1u32).max(Integer::new());
        ta.square() + tb.square()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscalationTrace {
    pub n: u32,
    #[serde(with = "crate::json::int")]
    pub big_n: Integer,
    #[serde(with = "crate::json::int")]
    pub b0_in: Integer,
    /// `gamma = delta^2 * 2^gamma_doublings`.
    pub gamma_doublings: u32,
    pub bits: u32,
    #[serde(with = "crate::json::int")]
    pub g: Integer,
    #[serde(with = "crate::json::int")]
    pub t: Integer,
    #[serde(with = "crate::json::int")]
    pub b8: Integer,
    #[serde(with = "crate::json::int")]
    pub target: Integer,
    #[serde(with = "crate::json::int")]
    pub d: Integer,
    pub points: Vec<NearPoint>,
    #[serde(with = "crate::json::int")]
    pub sigma: Integer,
    #[serde(with = "crate::json::int")]
    pub b0_out: Integer,
}

impl EscalationTrace {
    pub fn basis(&self) -> [Vec2; 2] {
        [
            [self.g.clone(), self.t.clone()],
            [Integer::new(), Integer::from(-&self.b8)],
        ]
    }

    /// `h(x) = g^2 x^6 - sigma x^4 + d`.
    pub fn h(&self, x: &Integer) -> Integer {
        h_eval(&self.g, &self.sigma, &self.d, x)
    }
}

fn h_eval(g: &Integer, sigma: &Integer, d: &Integer, x: &Integer) -> Integer {
    let x2 = Integer::from(x.square_ref());
    let x4 = Integer::from(x2.square_ref());
    let lead = Integer::from(g.square_ref()) * &x2 - sigma;
    lead * x4 + d
}

/// `max{x > b0 : h(x) <= 0} + 1`, given `h(b0) < 0`.
fn next_bound(g: &Integer, sigma: &Integer, d: &Integer, b0: &Integer) -> Integer {
    let g2 = Integer::from(g.square_ref());
    // h(x) > 0 once g^2 x^2 > sigma.
    let mut hi = Integer::from(sigma / &g2).sqrt() + 2u32;
    let mut lo = b0.clone();
    debug_assert!(h_eval(g, sigma, d, &lo) <= 0 && h_eval(g, sigma, d, &hi) > 0);
    while Integer::from(&hi - &lo) > 1 {
        let mid = Integer::from(&lo + &hi) >> 1;
        if h_eval(g, sigma, d, &mid) <= 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + 1u32
}

fn near_points(ints: &PassIntegers, b8: &Integer) -> Vec<NearPoint> {
    let basis = [
        [ints.g.clone(), ints.t.clone()],
        [Integer::new(), Integer::from(-b8)],
    ];
    let target = [Integer::new(), ints.target.clone()];
    closest_points(&basis, &target, 4)
        .into_iter()
        .map(|p| {
            let [v, u]: [Integer; 2] = p.coeffs.try_into().expect("two coefficients");
            let a = Integer::from(&v * &ints.g);
            let b = Integer::from(&v * &ints.t) - Integer::from(&u * b8) - &ints.target;
            NearPoint { v, u, a, b }
        })
        .collect()
}

/// One pass of the loop, doubling `gamma` from `delta^2` until `h(B0) < 0`.
pub fn escalate(n: u32, b0: &Integer) -> Result<EscalationTrace> {
    let nn = big_n(n)?;
    let b8 = b0.clone().pow(8u32);
    for k in 0..=MAX_GAMMA_DOUBLINGS {
        let (ints, bits) = pass_integers(&nn, b0, k)?;
        if ints.g == 0 {
            continue;
        }
        let points = near_points(&ints, &b8);
        let sigma = points
            .iter()
            .map(NearPoint::sigma_term)
            .min()
            .ok_or_else(|| Error::Inconsistent("no lattice points".into()))?;
        if h_eval(&ints.g, &sigma, &ints.d, b0) >= 0 {
            continue;
        }
        let b0_out = next_bound(&ints.g, &sigma, &ints.d, b0);
        return Ok(EscalationTrace {
            n,
            big_n: nn,
            b0_in: b0.clone(),
            gamma_doublings: k,
            bits,
            g: ints.g,
            t: ints.t,
            b8,
            target: ints.target,
            d: ints.d,
            points,
            sigma,
            b0_out,
        });
    }
    Err(Error::Precision(format!(
        "h(B0) >= 0 after {MAX_GAMMA_DOUBLINGS} doublings of gamma (n = {n}, B0 = {b0})"
    )))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonSquareCertificate {
    pub n: u32,
    #[serde(with = "crate::json::int")]
    pub target_bound: Integer,
    #[serde(with = "crate::json::int")]
    pub initial_bound: Integer,
    pub passes: Vec<EscalationTrace>,
    /// Proven: `|v| >= final_bound` for any square `a_n(c)`.
    #[serde(with = "crate::json::int")]
    pub final_bound: Integer,
    /// Proven: `c > c_bound` for any square `a_n(c)`.
    #[serde(with = "crate::json::int")]
    pub c_bound: Integer,
}

impl NonSquareCertificate {
    pub fn gamma_never_doubled(&self) -> bool {
        self.passes.iter().all(|t| t.gamma_doublings == 0)
    }

    /// `B_{k+1} >= B_k^2 / (2 delta)` for every pass.
    pub fn growth_law_holds(&self) -> bool {
        let Ok(nn) = big_n(self.n) else { return false };
        let bits = 128;
        let delta = three_pm_root(&nn, true, bits).mul_i64(4).div(&theta(&nn, bits).mul_int(&nn));
        self.passes.iter().all(|t| {
            let lhs = delta.mul_i64(2).mul_int(&t.b0_out);
            let rhs = Interval::from_int(&Integer::from(t.b0_in.square_ref()), bits);
            rhs.hi <= lhs.hi
        })
    }
}

/// `floor(kappa B^2)` from the lower end of `kappa`.
pub fn c_bound_for(nn: &Integer, b: &Integer) -> Integer {
    let bits = 2 * b.significant_bits() + 128;
    kappa(nn, bits).mul_int(&Integer::from(b.square_ref())).floor_lower()
}

/// `B(n, X) = ceil(sqrt(X / kappa))`, taken from the upper end.
pub fn required_bound(n: u32, x: &Integer) -> Result<Integer> {
    let nn = big_n(n)?;
    let bits = x.significant_bits() + 128;
    Ok(Interval::from_int(x, bits).div(&kappa(&nn, bits)).sqrt().ceil_upper())
}

/// Chains passes until `B0 > bound`.
pub fn verify_to(n: u32, bound: &Integer) -> Result<NonSquareCertificate> {
    let nn = big_n(n)?;
    let initial = initial_b0(n)?;
    let mut b0 = initial.clone();
    let mut passes = Vec::new();
    while b0 <= *bound {
        if passes.len() >= MAX_PASSES {
            return Err(Error::NonTermination(format!("n = {n}: {MAX_PASSES} passes")));
        }
        let tr = escalate(n, &b0)?;
        b0 = tr.b0_out.clone();
        passes.push(tr);
    }
    let c_bound = c_bound_for(&nn, &b0);
    Ok(NonSquareCertificate {
        n,
        target_bound: bound.clone(),
        initial_bound: initial,
        passes,
        final_bound: b0,
        c_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimeOutcome {
    /// `initial_b0(p) >= B(p, X)`: no lattice work needed.
    InitialBound,
    Lattice { certificate: NonSquareCertificate },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeEntry {
    pub p: u32,
    #[serde(with = "crate::json::int")]
    pub initial_bound: Integer,
    #[serde(with = "crate::json::int")]
    pub required_bound: Integer,
    pub outcome: PrimeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallCCertificate {
    #[serde(with = "crate::json::int")]
    pub c: Integer,
    pub sieve: SieveCertificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateCertificate {
    #[serde(with = "crate::json::int")]
    pub x: Integer,
    pub min_prime: u32,
    pub prime_cap: u32,
    pub small_c: Vec<SmallCCertificate>,
    pub primes: Vec<PrimeEntry>,
    pub gamma_never_doubled: bool,
    pub growth_law_held: bool,
}

impl AggregateCertificate {
    pub fn lattice_certificates(&self) -> impl Iterator<Item = &NonSquareCertificate> {
        self.primes.iter().filter_map(|e| match &e.outcome {
            PrimeOutcome::Lattice { certificate } => Some(certificate),
            PrimeOutcome::InitialBound => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StabOptions {
    /// Treat `a_5(c)` as known non-square (an external result), starting at `p = 7`.
    pub assume_a5_nonsquare: bool,
}

/// `a_n(c)` mod 3, 5, 11 for `c = 1, 2, 3`, from `n = 3` on at the latest.
pub fn small_c_certificates(x: &Integer) -> Result<Vec<SmallCCertificate>> {
    let mut out = Vec::new();
    for (c, p) in [(1u32, 3u64), (2, 5), (3, 11)] {
        if *x < c {
            break;
        }
        let c = Integer::from(c);
        let sieve = certify_at_prime(&c, &Target::Numerator, p).ok_or_else(|| {
            Error::Inconsistent(format!("no mod-{p} certificate for c = {c}"))
        })?;
        // Index 2 is the hypothesis that f^2 is irreducible (a_2(3) = 4 is a square).
        if sieve.start > 3 {
            return Err(Error::Inconsistent(format!("mod-{p} certificate for c = {c} starts late")));
        }
        out.push(SmallCCertificate { c, sieve });
    }
    Ok(out)
}

/// For every prime `p` from 5 (7 with the option) up to the prime cap,
/// proves `a_p(c)` is not a square for any even `4 <= c <= X`.
pub fn stab_verify_all(x: &Integer, opts: StabOptions) -> Result<AggregateCertificate> {
    if *x < 1 {
        return Err(Error::Domain("X must be positive".into()));
    }
    let min_prime = if opts.assume_a5_nonsquare { 7 } else { 5 };
    let small_c = small_c_certificates(x)?;
    let cap = if *x >= 4 { prime_cap(x)? } else { 0 };
    let primes: Vec<u32> = primes_up_to(cap as u64)
        .into_iter()
        .map(|p| p as u32)
        .filter(|&p| p >= min_prime)
        .collect();
    let mut entries: Vec<PrimeEntry> = primes
        .par_iter()
        .map(|&p| -> Result<PrimeEntry> {
            let initial = initial_b0(p)?;
            let required = required_bound(p, x)?;
            let outcome = if initial >= required {
                PrimeOutcome::InitialBound
            } else {
                PrimeOutcome::Lattice { certificate: verify_to(p, &required)? }
            };
            Ok(PrimeEntry { p, initial_bound: initial, required_bound: required, outcome })
        })
        .collect::<Result<_>>()?;
    entries.sort_by_key(|e| e.p);
    let mut agg = AggregateCertificate {
        x: x.clone(),
        min_prime,
        prime_cap: cap,
        small_c,
        primes: entries,
        gamma_never_doubled: true,
        growth_law_held: true,
    };
    let never = agg.lattice_certificates().all(|c| c.gamma_never_doubled());
    let growth = agg.lattice_certificates().all(|c| c.growth_law_holds());
    agg.gamma_never_doubled = never;
    agg.growth_law_held = growth;
    Ok(agg)
}

pub mod check {
    //! Re-derives a trace from its own data at doubled precision, with
    //! `theta` from `2^(1/N)` via `exp2` and a second nearest-point search.

    use super::*;
    use rug::float::Round;

    fn theta2(nn: &Integer, bits: u32) -> Interval {
        let e = Interval::from_i64(2, bits).div_int(nn);
        let mut lo = Float::with_val(bits, &e.lo);
        let mut hi = Float::with_val(bits, &e.hi);
        lo.exp2_round(Round::Down);
        hi.exp2_round(Round::Up);
        Interval { lo, hi }
    }

    fn within_one(x: &Interval, k: &Integer) -> bool {
        let k = Interval::from_int(k, x.prec());
        let diff = x.sub(&k);
        diff.lo >= -1 && diff.hi <= 1
    }

    /// Reduction by repeated floor/ceil subtraction, then enumeration with the
    /// outer loop over the other coordinate.
    pub fn closest_points_alt(basis: &[Vec2; 2], target: &Vec2, k: usize) -> Vec<LatticePoint> {
        let mut r = basis.clone();
        let mut u: [Vec2; 2] = [
            [Integer::from(1), Integer::new()],
            [Integer::new(), Integer::from(1)],
        ];
        loop {
            let mut changed = false;
            for (i, j) in [(0usize, 1usize), (1, 0)] {
                let nj = norm2(&r[j]);
                let q = Rational::from((dot(&r[i], &r[j]), nj));
                let fl = rat_floor(&q);
                let mut best = norm2(&r[i]);
                let mut pick = None;
                for cand in [fl.clone(), fl + 1u32] {
                    let nr = axpy(&r[i], &cand, &r[j]);
                    let nn = norm2(&nr);
                    if nn < best {
                        best = nn;
                        pick = Some(cand);
                    }
                }
                if let Some(m) = pick {
                    r[i] = axpy(&r[i], &m, &r[j]);
                    u[i] = axpy(&u[i], &m, &u[j]);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // Outer loop over x0, projecting orthogonally to r1.
        let (y0, y1) = solve2(&r, target);
        let n1 = norm2(&r[1]);
        let mu = Rational::from((dot(&r[0], &r[1]), n1.clone()));
        let r0s = Rational::from(norm2(&r[0])) - Rational::from(mu.square_ref()) * &n1;
        let coeff = |x0: &Integer, x1: &Integer| {
            (
                Integer::from(x0 * &u[0][0]) + Integer::from(x1 * &u[1][0]),
                Integer::from(x0 * &u[0][1]) + Integer::from(x1 * &u[1][1]),
            )
        };
        let near0 = Integer::from(y0.round_ref());
        let near1 = Integer::from(y1.round_ref());
        let mut seeds: Vec<LatticePoint> = Vec::new();
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                let (c0, c1) = coeff(&Integer::from(&near0 + i), &Integer::from(&near1 + j));
                seeds.push(make_point(basis, target, c0, c1));
            }
        }
        seeds.sort_by(point_order);
        let radius = seeds[k - 1].dist2.clone();
        let rad = Rational::from(radius.clone());
        let s0 = isqrt_rat_upper(&Rational::from(&rad / &r0s));
        let mut out = Vec::new();
        let f0 = rat_floor(&y0);
        let mut x0 = Integer::from(&f0 - &s0);
        while x0 <= Integer::from(&f0 + &s0) + 1u32 {
            let off = Rational::from(&x0 - &y0);
            let e0 = Rational::from(off.square_ref()) * &r0s;
            if e0 <= rad {
                let center = Rational::from(&y1 - Rational::from(&mu * &off));
                let s1 = isqrt_rat_upper(&(Rational::from(&rad - &e0) / Rational::from(n1.clone())));
                let fc = rat_floor(&center);
                let mut x1 = Integer::from(&fc - &s1);
                while x1 <= Integer::from(&fc + &s1) + 1u32 {
                    let (c0, c1) = coeff(&x0, &x1);
                    let p = make_point(basis, target, c0, c1);
                    if p.dist2 <= radius {
                        out.push(p);
                    }
                    x1 += 1u32;
                }
            }
            x0 += 1u32;
        }
        out.sort_by(point_order);
        out.dedup();
        out.truncate(k);
        out
    }

    /// Every claim of the trace, or the first one that fails.
    pub fn check_trace(tr: &EscalationTrace) -> std::result::Result<(), String> {
        let nn = big_n(tr.n).map_err(|e| e.to_string())?;
        if tr.big_n != nn {
            return Err("N does not match n".into());
        }
        if tr.b0_in < initial_b0(tr.n).map_err(|e| e.to_string())? {
            return Err("B0 below the initial bound".into());
        }
        if tr.b8 != tr.b0_in.clone().pow(8u32) {
            return Err("B0^8 wrong".into());
        }
        let bits = 2 * tr.bits.max(64);
        let th2 = theta2(&nn, bits);
        let th = th2.sqrt();
        let delta = three_pm_root(&nn, true, bits).mul_i64(4).div(&th.mul_int(&nn));
        let d2 = delta.square();
        let b4 = tr.b0_in.clone().pow(4u32);
        let b16 = Integer::from(tr.b8.square_ref());
        let gamma = d2.mul_int(&(Integer::from(1) << tr.gamma_doublings));
        if !within_one(&gamma.mul_int(&b4), &tr.g) || tr.g == 0 {
            return Err("g is not a rounding of gamma B0^4".into());
        }
        if !within_one(&th2.mul_int(&tr.b8), &tr.t) {
            return Err("t is not a rounding of theta^2 B0^8".into());
        }
        if !within_one(&th.mul_int(&tr.b8).mul_i64(2).div_int(&nn), &tr.target) {
            return Err("target is not a rounding of 2 theta B0^8 / N".into());
        }
        let dd = d2.mul_int(&b16);
        if !(Interval::from_int(&tr.d, bits).sub(&dd).lo >= 0 && Interval::from_int(&tr.d, bits).sub(&dd).hi < 1) {
            return Err("d is not the ceiling of delta^2 B0^16".into());
        }
        let basis = tr.basis();
        let tv = [Integer::new(), tr.target.clone()];
        let alt = closest_points_alt(&basis, &tv, 4);
        let claimed: Vec<Vec<Integer>> = tr.points.iter().map(|p| vec![p.v.clone(), p.u.clone()]).collect();
        let got: Vec<Vec<Integer>> = alt.iter().map(|p| p.coeffs.clone()).collect();
        if claimed != got {
            return Err("nearest points differ".into());
        }
        for p in &tr.points {
            if p.a != Integer::from(&p.v * &tr.g)
                || p.b != Integer::from(&p.v * &tr.t) - Integer::from(&p.u * &tr.b8) - &tr.target
            {
                return Err("(a, b) inconsistent with (v, u)".into());
            }
        }
        let sigma = tr.points.iter().map(NearPoint::sigma_term).min().ok_or("no points")?;
        if sigma != tr.sigma {
            return Err("sigma mismatch".into());
        }
        if tr.h(&tr.b0_in) >= 0 {
            return Err("h(B0_in) >= 0".into());
        }
        let last = Integer::from(&tr.b0_out - 1u32);
        if last < tr.b0_in || tr.h(&last) > 0 || tr.h(&tr.b0_out) <= 0 {
            return Err("B0_out is not the first point past the sign change".into());
        }
        Ok(())
    }

    pub fn check_certificate(cert: &NonSquareCertificate) -> std::result::Result<(), String> {
        let mut b = initial_b0(cert.n).map_err(|e| e.to_string())?;
        if b != cert.initial_bound {
            return Err("initial bound mismatch".into());
        }
        for tr in &cert.passes {
            if tr.b0_in != b {
                return Err("passes do not chain".into());
            }
            check_trace(tr)?;
            b = tr.b0_out.clone();
        }
        if b != cert.final_bound || b <= cert.target_bound {
            return Err("final bound does not exceed the target".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(v: i64) -> Integer {
        Integer::from(v)
    }

    /// Minimum of the sigma expression over all points with `|v| <= 3000`, by brute force.
    fn brute_sigma(g: i64, t: i64, b8: i64, target: i64) -> i128 {
        let (g, t, b8, target) = (g as i128, t as i128, b8 as i128, target as i128);
        let mut best = i128::MAX;
        for v in -3000i128..=3000 {
            let u0 = (v * t - target).div_euclid(b8);
            for u in u0 - 1..=u0 + 2 {
                let a = v * g;
                let b = v * t - u * b8 - target;
                let ta = (a.abs() - v.abs()).max(0);
                let tb = (b.abs() - v.abs() - 1).max(0);
                best = best.min(ta * ta + tb * tb);
            }
        }
        best
    }

    #[test]
    fn n5_lattice_data_and_sigma() {
        let nn = z(15);
        let (ints, _) = pass_integers(&nn, &z(8), 0).unwrap();
        assert_eq!((ints.g.clone(), ints.t.clone(), ints.target.clone()), (z(336), z(18401670), z(2342757)));
        let pts = near_points(&ints, &z(16777216));
        let sigma = pts.iter().map(NearPoint::sigma_term).min().unwrap();
        assert_eq!(sigma.to_i128().unwrap(), brute_sigma(336, 18401670, 16777216, 2342757));
        let tr = escalate(5, &z(8)).unwrap();
        assert!(tr.h(&tr.b0_in) < 0);
        check::check_trace(&tr).unwrap();
    }

    #[test]
    fn theta_fixed_n5() {
        let f = theta_fixed(&z(15), 64);
        let th = Interval::from_int(&f.mantissa, 256).div_int(&(Integer::from(1) << 64u32));
        let t2 = th.square().mul_int(&(Integer::from(1) << 24u32));
        assert_eq!(t2.round_half_up_certified(), Some(z(18401670)));
    }

    #[test]
    fn identity_lattice_tie_break() {
        let basis = [[z(1), z(0)], [z(0), z(1)]];
        let pts = closest_points(&basis, &[z(0), z(0)], 4);
        let cs: Vec<Vec<Integer>> = pts.iter().map(|p| p.coeffs.clone()).collect();
        assert_eq!(cs, vec![vec![z(0), z(0)], vec![z(-1), z(0)], vec![z(0), z(-1)], vec![z(0), z(1)]]);
    }

    #[test]
    fn required_and_c_bounds_agree() {
        let x = Integer::from(10).pow(30u32);
        let b = required_bound(7, &x).unwrap();
        let nn = big_n(7).unwrap();
        assert!(c_bound_for(&nn, &b) >= x);
        assert!(c_bound_for(&nn, &(b - 1u32)) < x);
    }
}

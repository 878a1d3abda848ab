//! Independent oracles shared by the property tests and the acceptance run.
//! Nothing here calls the routine it is checking.
#![allow(dead_code)]

use evstab::bigratseq::{a_sequence, b_square_status, compute_a, orbit_point, BSquareStatus};
use evstab::interval::Interval;
use evstab::latticever::{closest_points, LatticePoint};
use evstab::stabbounds::{dioph_split_search, eps_limit, eps_n, ln1p_inv_sqrt, q_exact};
use num_complex::Complex64;
use rug::ops::Pow;
use rug::{Integer, Rational};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `f^n(0)` by plain rational iteration.
pub fn rational_orbit(c: i64, n: u32) -> Rational {
    let r = Rational::from((1, c));
    let mut x = Rational::new();
    for _ in 0..n {
        x = Rational::from(x.square_ref()) + &r;
    }
    x
}

pub fn closed_forms(c: i64) -> Check {
    let ci = Integer::from(c);
    let a2 = compute_a(&ci, 2).map_err(|e| e.to_string())?.value;
    let a3 = compute_a(&ci, 3).map_err(|e| e.to_string())?.value;
    ensure(a2 == c + 1, || format!("a_2({c}) = {a2}"))?;
    let want = Integer::from(c).pow(3) + Integer::from(c).pow(2) + 2 * c + 1;
    ensure(a3 == want, || format!("a_3({c}) = {a3}, expected {want}"))
}

pub fn matches_rational_iteration(c: i64, n: u32) -> Check {
    let got = orbit_point(&Integer::from(c), n).map_err(|e| e.to_string())?.value;
    let want = rational_orbit(c, n);
    ensure(got == want, || format!("f^{n}(0) for c = {c}: {got} vs {want}"))?;
    // The numerator stays coprime to c, so it is a_n as stored.
    if n >= 1 {
        let a = compute_a(&Integer::from(c), n).map_err(|e| e.to_string())?.value;
        let den = Integer::from(c).pow((1u32 << (n - 1)) - 1) * c;
        let scaled = Rational::from(&want * &Rational::from(den));
        ensure(scaled == Rational::from(a), || format!("a_{n}({c}) disagrees with the scaled orbit"))?;
    }
    Ok(())
}

/// `a_n = 1 mod c` and `gcd(a_n, a_{n-1}) = 1` for `n <= n_max`.
pub fn congruence_and_gcd(c: i64, n_max: u32) -> Check {
    let seq = a_sequence(&Integer::from(c), n_max).map_err(|e| e.to_string())?;
    for (i, a) in seq.iter().enumerate() {
        let r = Integer::from(a - 1u32);
        ensure(r.is_divisible(&Integer::from(c)), || format!("a_{}({c}) is not 1 mod c", i + 1))?;
        if i > 0 {
            let g = Integer::from(a.gcd_ref(&seq[i - 1]));
            ensure(g == 1, || format!("gcd(a_{}, a_{}) = {g} for c = {c}", i + 1, i))?;
        }
    }
    Ok(())
}

pub fn negative_for_negative_c(c: i64, n_max: u32) -> Check {
    let seq = a_sequence(&Integer::from(c), n_max).map_err(|e| e.to_string())?;
    for (i, a) in seq.iter().enumerate().skip(1) {
        ensure(*a < 0, || format!("a_{}({c}) = {a} is not negative", i + 1))?;
    }
    Ok(())
}

/// Primes below `10^5` dividing `x`.
fn small_prime_factors(x: &Integer) -> Vec<u32> {
    (2u32..100_000)
        .filter(|&p| (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0))
        .filter(|&p| x.is_divisible_u(p))
        .collect()
}

fn val(x: &Integer, p: u32) -> u32 {
    let mut x = Integer::from(x.abs_ref());
    let mut v = 0;
    while x != 0 && x.is_divisible_u(p) {
        x /= p;
        v += 1;
    }
    v
}

/// For `p | a_m` with first appearance at `r`: `v_p(a_n) = v_p(a_r)` when
/// `r | n` and `p` misses `a_n` otherwise.
pub fn rigid_divisibility(c: i64, m_max: u32, n_max: u32) -> Check {
    let seq = a_sequence(&Integer::from(c), n_max).map_err(|e| e.to_string())?;
    for m in 1..=m_max {
        for p in small_prime_factors(&seq[m as usize - 1]) {
            let r = (1..=m).find(|&d| seq[d as usize - 1].is_divisible_u(p)).unwrap();
            let vr = val(&seq[r as usize - 1], p);
            for n in 1..=n_max {
                let vn = val(&seq[n as usize - 1], p);
                let want = if n % r == 0 { vr } else { 0 };
                ensure(vn == want, || format!("c = {c}: v_{p}(a_{n}) = {vn}, expected {want}"))?;
            }
        }
    }
    Ok(())
}

/// Odd `C = d1 d2` written as `s^2 - x^2`: the numerator `x + s` of `b` is odd,
/// so `b` has 2-adic valuation -1. Mirrors `a_n = a_{n-1}^2 + c^N` for odd `c`.
pub fn two_adic_synthetic(d1: i64, d2: i64) -> Check {
    assert!(d1 % 2 != 0 && d2 % 2 != 0);
    let s = (d1 + d2) / 2;
    let x = (d2 - d1) / 2;
    let cc = Integer::from(d1) * d2;
    ensure(Integer::from(s) * s - Integer::from(x) * x == cc, || "bad synthetic split".into())?;
    let num = Integer::from(x + s);
    ensure(num.is_odd(), || format!("x + s = {num} is even for C = {cc}"))
}

/// Real odd `c`: `a_n` is never a square in range, and the classifier agrees.
pub fn odd_c_b_status(c: i64, n_max: u32) -> Check {
    for n in 2..=n_max {
        let st = b_square_status(&Integer::from(c), n).map_err(|e| e.to_string())?;
        match st {
            BSquareStatus::Irrational => {}
            BSquareStatus::RationalNonsquare { two_adic: Some(-1), .. } => {}
            other => return Err(format!("c = {c}, n = {n}: {other:?}")),
        }
    }
    Ok(())
}

/// Square `a_n` exactly when a coprime split solves the derived relation.
pub fn split_equivalence(c: i64, n: u32) -> Check {
    let ci = Integer::from(c);
    let square = compute_a(&ci, n).map_err(|e| e.to_string())?.is_square();
    let split = dioph_split_search(&ci, n).map_err(|e| e.to_string())?;
    ensure(square == split.is_some(), || format!("c = {c}, n = {n}: square {square}, split {split:?}"))
}

const BITS: u32 = 128;

fn sample(c: u64) -> Integer {
    Integer::from(c)
}

fn ratio_q(c: u64) -> Result<Interval, String> {
    let ci = sample(c);
    let e = eps_limit(&ci, BITS).map_err(|e| e.to_string())?;
    let q = q_exact(&ci).map_err(|e| e.to_string())?;
    let den = Interval::from_int(&ci, BITS).sqrt().mul(&Interval::from_rat(&q, BITS).ln());
    Ok(e.div(&den))
}

fn ratio_log(c: u64) -> Result<Interval, String> {
    let ci = sample(c);
    let e = eps_limit(&ci, BITS).map_err(|e| e.to_string())?;
    let den = Interval::from_int(&ci, BITS).sqrt().mul(&ln1p_inv_sqrt(&ci, BITS));
    Ok(e.div(&den))
}

fn below(x: &Interval, bound: &str) -> bool {
    let (w, f) = bound.split_once('.').unwrap_or((bound, ""));
    let exact = Rational::from((
        Integer::from_str_radix(&format!("{w}{f}"), 10).unwrap(),
        Integer::from(10).pow(f.len() as u32),
    ));
    x.certainly_lt(&Interval::from_rat(&exact, BITS))
}

pub const SAMPLE_C: [u64; 6] = [4, 6, 10, 100, 10_400, 1_000_000];

/// The three ratio bounds, the log bound and the exponential bound, with
/// interval arithmetic so a pass is a pass under worst-case rounding.
pub fn inequality_spot_checks(extra: &[u64]) -> Check {
    let mut cs: Vec<u64> = SAMPLE_C.to_vec();
    cs.extend_from_slice(extra);
    for &c in &cs {
        ensure(c >= 4, || format!("c = {c} below 4"))?;
        let r = ratio_q(c)?;
        ensure(below(&r, "3.46"), || format!("ratio with log q at c = {c}: {}", r.mid_f64()))?;
        let rl = ratio_log(c)?;
        if c >= 100 {
            ensure(below(&rl, "2.12"), || format!("ratio at c = {c}: {}", rl.mid_f64()))?;
        }
        if c >= 10_400 {
            ensure(below(&rl, "2.01"), || format!("ratio at c = {c}: {}", rl.mid_f64()))?;
        }
        let ci = sample(c);
        let sc = Interval::from_int(&ci, BITS).sqrt();
        let lhs = Interval::from_i64(1, BITS).div(&ln1p_inv_sqrt(&ci, BITS));
        ensure(lhs.certainly_le(&sc.add(&Interval::from_rat(&Rational::from((1, 2)), BITS))), || {
            format!("1/log(1 + 1/sqrt(c)) too large at c = {c}")
        })?;
        let rhs = Interval::from_i64(2, BITS).sqrt().add_int(1).mul_i64(4).div(&sc).add_int(1);
        let mut prev: Option<Interval> = None;
        for n in 2..=12 {
            let e = eps_n(&ci, n, BITS).map_err(|e| e.to_string())?;
            ensure(e.div(&sc).exp().certainly_le(&rhs), || format!("exp bound fails at c = {c}, n = {n}"))?;
            if let Some(p) = &prev {
                ensure(!e.certainly_lt(p), || format!("eps(n, c) decreased at c = {c}, n = {n}"))?;
            }
            prev = Some(e);
        }
        let lim = eps_limit(&ci, BITS).map_err(|e| e.to_string())?;
        ensure(!lim.certainly_lt(prev.as_ref().unwrap()), || format!("eps(n, c) exceeds its limit at c = {c}"))?;
    }
    // eps(c) decreases in c.
    for w in cs.windows(2) {
        if w[0] < w[1] {
            let a = eps_limit(&sample(w[0]), BITS).map_err(|e| e.to_string())?;
            let b = eps_limit(&sample(w[1]), BITS).map_err(|e| e.to_string())?;
            ensure(!a.certainly_lt(&b), || format!("eps(c) grew from {} to {}", w[0], w[1]))?;
        }
    }
    Ok(())
}

/// Over `4 <= c < 100` the ratio with `log q(c)` peaks at `c = 6`.
pub fn q_ratio_argmax() -> Result<u64, String> {
    let mut best = (0u64, f64::MIN);
    for c in 4..100 {
        let r = ratio_q(c)?.mid_f64();
        if r > best.1 {
            best = (c, r);
        }
    }
    Ok(best.0)
}

pub type V2 = [Integer; 2];

/// Exhaustive nearest points over `|coeff| <= 50`; `None` when the box
/// provably cannot contain the four nearest points.
pub fn brute_closest(basis: &[V2; 2], target: &V2, k: usize) -> Option<Vec<LatticePoint>> {
    let b: [[f64; 2]; 2] = [
        [basis[0][0].to_f64(), basis[0][1].to_f64()],
        [basis[1][0].to_f64(), basis[1][1].to_f64()],
    ];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    if det == 0.0 {
        return None;
    }
    let mut all = Vec::with_capacity(101 * 101);
    for c0 in -50i64..=50 {
        for c1 in -50i64..=50 {
            let p0 = Integer::from(c0) * &basis[0][0] + Integer::from(c1) * &basis[1][0];
            let p1 = Integer::from(c0) * &basis[0][1] + Integer::from(c1) * &basis[1][1];
            let e0 = Integer::from(&p0 - &target[0]);
            let e1 = Integer::from(&p1 - &target[1]);
            let dist2 = e0.square() + e1.square();
            all.push(LatticePoint {
                coeffs: vec![Integer::from(c0), Integer::from(c1)],
                point: vec![p0, p1],
                dist2,
            });
        }
    }
    all.sort_by(|x, y| x.dist2.cmp(&y.dist2).then_with(|| x.coeffs.cmp(&y.coeffs)));
    all.truncate(k);
    // A point at distance r from t has |coeff_i| <= (|t| + r) |row_i(B^-1)|.
    let r = all.last()?.dist2.to_f64().sqrt();
    let t = (target[0].to_f64().powi(2) + target[1].to_f64().powi(2)).sqrt();
    let rows = [
        (b[1][1].powi(2) + b[1][0].powi(2)).sqrt() / det.abs(),
        (b[0][1].powi(2) + b[0][0].powi(2)).sqrt() / det.abs(),
    ];
    let reach = (t + r) * rows[0].max(rows[1]);
    (reach < 49.0).then_some(all)
}

pub fn closest_matches_brute(basis: &[V2; 2], target: &V2) -> Result<bool, String> {
    let Some(want) = brute_closest(basis, target, 4) else {
        return Ok(false);
    };
    let got = closest_points(basis, target, 4);
    ensure(got == want, || {
        format!("basis {basis:?} target {target:?}: got {got:?}, want {want:?}")
    })?;
    Ok(true)
}

/// Number of irreducible factors over Q of `g(f^n(x))` with `g` and
/// `f(x) = x^2 + u x + v` monic, by grouping numerical roots into the
/// smallest subsets whose product is an exact integer divisor.
///
/// With `D` the common denominator, every root times `D` is an algebraic
/// integer, so monic factors of the scaled polynomial have integer
/// coefficients. Divisors are confirmed by exact division.
pub fn naive_factor_count(g: &[Rational], u: &Rational, v: &Rational, n: u32) -> usize {
    let mut d = Integer::from(1);
    for q in g.iter().chain([u, v]) {
        d.lcm_mut(q.denom());
    }
    let exact = compose_exact(g, u, v, n);
    let deg = exact.len() - 1;
    // Scaled polynomial D^deg P(y / D), integral and monic.
    let scaled: Vec<Integer> = exact
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let s = Rational::from(a * &Rational::from(Integer::from((&d).pow((deg - k) as u32))));
            assert!(*s.denom() == 1, "scaling did not clear denominators");
            s.numer().clone()
        })
        .collect();

    let df = d.to_f64();
    let roots: Vec<Complex64> = numeric_roots(g, u, v, n).into_iter().map(|r| r * df).collect();
    assert_eq!(roots.len(), deg);

    let mut remaining: Vec<usize> = (0..deg).collect();
    let mut rest = scaled;
    let mut count = 0;
    while !remaining.is_empty() {
        let m = remaining.len();
        let mut found = None;
        'size: for size in 1..=m {
            for mask in 1u32..(1 << m) {
                if mask.count_ones() as usize != size {
                    continue;
                }
                let pick: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| remaining[i]).collect();
                if let Some(fac) = integer_product(&pick, &roots) {
                    if let Some(q) = exact_divide(&rest, &fac) {
                        found = Some((pick, q));
                        break 'size;
                    }
                }
            }
        }
        let (pick, q) = found.expect("the full set always divides");
        remaining.retain(|i| !pick.contains(i));
        rest = q;
        count += 1;
    }
    count
}

/// Coefficients (constant first) of `g(f^n(x))`.
fn compose_exact(g: &[Rational], u: &Rational, v: &Rational, n: u32) -> Vec<Rational> {
    let f = vec![v.clone(), u.clone(), Rational::from(1)];
    let mut inner = vec![Rational::new(), Rational::from(1)];
    for _ in 0..n {
        inner = compose(&f, &inner);
    }
    compose(g, &inner)
}

fn mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

fn compose(outer: &[Rational], inner: &[Rational]) -> Vec<Rational> {
    let mut acc = vec![Rational::new()];
    for a in outer.iter().rev() {
        acc = mul(&acc, inner);
        acc[0] += a;
    }
    while acc.len() > 1 && acc.last().unwrap().cmp0().is_eq() {
        acc.pop();
    }
    acc
}

fn numeric_roots(g: &[Rational], u: &Rational, v: &Rational, n: u32) -> Vec<Complex64> {
    let gf: Vec<f64> = g.iter().map(|q| q.to_f64()).collect();
    let mut roots = match gf.len() {
        2 => vec![Complex64::new(-gf[0], 0.0)],
        3 => {
            let disc = Complex64::new(gf[1] * gf[1] - 4.0 * gf[0], 0.0).sqrt();
            vec![(-gf[1] + disc) / 2.0, (-gf[1] - disc) / 2.0]
        }
        _ => panic!("g must be linear or quadratic"),
    };
    let (uf, vf) = (u.to_f64(), v.to_f64());
    for _ in 0..n {
        roots = roots
            .into_iter()
            .flat_map(|y| {
                let s = (Complex64::new(uf * uf - 4.0 * vf, 0.0) + 4.0 * y).sqrt();
                [(-uf + s) / 2.0, (-uf - s) / 2.0]
            })
            .collect();
    }
    roots
}

fn integer_product(pick: &[usize], roots: &[Complex64]) -> Option<Vec<Integer>> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for &i in pick {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, a) in poly.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * roots[i];
        }
        poly = next;
    }
    poly.iter()
        .map(|z| {
            let r = z.re.round();
            let tol = 1e-6 * z.norm().max(1.0);
            ((z.im.abs() < tol) && (z.re - r).abs() < tol.max(1e-3)).then(|| Integer::from_f64(r).unwrap())
        })
        .collect()
}

/// Quotient of `a` by the monic `b`, if the division is exact.
fn exact_divide(a: &[Integer], b: &[Integer]) -> Option<Vec<Integer>> {
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    if rem.len() <= db {
        return None;
    }
    let mut q = vec![Integer::new(); rem.len() - db];
    for i in (0..q.len()).rev() {
        let lead = rem[i + db].clone();
        for (j, bj) in b.iter().enumerate() {
            rem[i + j] -= Integer::from(&lead * bj);
        }
        q[i] = lead;
    }
    rem.iter().all(|x| *x == 0).then_some(q)
}

/// Factor count of `f^n` for `f = x^2 + 1/c`.
pub fn iterate_factor_count(c: i64, n: u32) -> usize {
    let g = [Rational::new(), Rational::from(1)];
    naive_factor_count(&g, &Rational::new(), &Rational::from((1, c)), n)
}

//! Small-prime tables and integer factorization with a work budget.
//!
//! Trial division up to [`TRIAL_LIMIT`], then Pollard rho in Brent's form with
//! a fixed sequence of seeds. Running out of steps is reported as
//! [`Error::FactorizationBudget`], never as a panic.

use rug::integer::IsPrime;
use rug::Integer;

use crate::{Error, Result};

pub const TRIAL_LIMIT: u32 = 1_000_000;
/// Default number of rho iterations summed over all seeds.
pub const RHO_BUDGET: u64 = 2_000_000;

/// All primes `<= n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

pub fn is_prime_u64(n: u64) -> bool {
    Integer::from(n).is_probably_prime(40) != IsPrime::No
}

pub fn is_prime(n: &Integer) -> bool {
    *n >= 2 && n.is_probably_prime(40) != IsPrime::No
}

/// Prime factorization of `|n|` as `(prime, exponent)` pairs in increasing order.
pub fn factorize(n: &Integer) -> Result<Vec<(Integer, u32)>> {
    factorize_with_budget(n, RHO_BUDGET)
}

pub fn factorize_with_budget(n: &Integer, rho_budget: u64) -> Result<Vec<(Integer, u32)>> {
    if *n == 0 {
        return Err(Error::Domain("cannot factor zero".into()));
    }
    let mut m = n.clone().abs();
    let mut out: Vec<(Integer, u32)> = Vec::new();
    let (rest, e) = m.remove_factor(&Integer::from(2));
    m = rest;
    if e > 0 {
        out.push((Integer::from(2), e));
    }
    let mut p: u32 = 3;
    while p <= TRIAL_LIMIT {
        if Integer::from(p).square() > m {
            break;
        }
        if m.is_divisible_u(p) {
            let (rest, e) = m.remove_factor(&Integer::from(p));
            m = rest;
            out.push((Integer::from(p), e));
        }
        p += 2;
    }
    if m > 1 {
        let mut spent = 0u64;
        let mut stack = vec![m];
        let mut big: Vec<Integer> = Vec::new();
        while let Some(x) = stack.pop() {
            if x == 1 {
                continue;
            }
            if is_prime(&x) {
                big.push(x);
                continue;
            }
            let r = x.clone().sqrt();
            if Integer::from(r.square_ref()) == x {
                stack.push(r.clone());
                stack.push(r);
                continue;
            }
            let d = rho(&x, rho_budget, &mut spent)
                .ok_or_else(|| Error::FactorizationBudget(n.to_string()))?;
            let other = Integer::from(&x / &d);
            stack.push(d);
            stack.push(other);
        }
        big.sort();
        for q in big {
            match out.last_mut() {
                Some((last, e)) if *last == q => *e += 1,
                _ => out.push((q, 1)),
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// One nontrivial factor of the composite `n`, or `None` when the budget runs out.
fn rho(n: &Integer, budget: u64, spent: &mut u64) -> Option<Integer> {
    const SEEDS: [(u32, u32); 8] = [
        (2, 1),
        (3, 1),
        (5, 3),
        (7, 5),
        (11, 7),
        (13, 11),
        (17, 13),
        (19, 17),
    ];
    const BATCH: u64 = 128;
    for (y0, inc) in SEEDS {
        let f = |v: &Integer| -> Integer { (Integer::from(v.square_ref()) + inc) % n };
        let mut y = Integer::from(y0);
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut q = Integer::from(1);
        let mut g = Integer::from(1);
        let mut r: u64 = 1;
        while g == 1 {
            x.clone_from(&y);
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys.clone_from(&y);
                let steps = BATCH.min(r - k);
                for _ in 0..steps {
                    y = f(&y);
                    q *= Integer::from(&x - &y).abs();
                    q %= n;
                }
                g = Integer::from(q.gcd_ref(n));
                k += steps;
            }
            *spent += 2 * r;
            if *spent > budget {
                return None;
            }
            r *= 2;
        }
        if g == *n {
            loop {
                ys = f(&ys);
                g = Integer::from(&x - &ys).abs().gcd(n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != *n {
            return Some(g);
        }
    }
    None
}

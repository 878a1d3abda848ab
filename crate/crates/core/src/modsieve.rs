//! Reductions of the critical orbit modulo small primes.
//!
//! Over `F_p` the orbit of 0 under `x^2 + c0` (`c0 = 1/c mod p`) is eventually
//! periodic. If a sequence derived from it (the orbit itself, or `g(f^n(0))`
//! for a named factor `g`) eventually stays inside a set of quadratic
//! non-residues, every later rational term is a non-square. That is the
//! sieve certificate. The finitely many earlier terms are settled one at a
//! time by [`residual_check`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::bigratseq::{estimated_bits, exact_sqrt, is_perfect_square, NumeratorSeq};
use crate::factor::{factorize, primes_up_to};
use crate::polyfactors::{eval_mod_coeffs, obstruction, FactorPoly};
use crate::{Error, Result};

/// Jacobi symbol `(a / n)` for odd `n >= 1`.
pub fn jacobi_u64(a: u64, n: u64) -> i32 {
    assert!(n % 2 == 1, "Jacobi symbol needs an odd modulus");
    let mut a = a % n;
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Jacobi symbol for arbitrary integers `a` and odd positive `n`.
pub fn jacobi(a: &Integer, n: &Integer) -> i32 {
    assert!(n.is_odd() && *n > 0, "Jacobi symbol needs an odd positive modulus");
    a.jacobi(n)
}

/// `x mod k` in `0..k`.
pub fn int_mod(x: &Integer, k: u64) -> u64 {
    let r = Integer::from(x % k);
    let r = if r < 0 { r + k } else { r };
    r.to_u64().expect("residue fits u64")
}

/// Inverse of `x` modulo `k`, if it exists.
pub fn inv_mod(x: u64, k: u64) -> Option<u64> {
    Integer::from(x)
        .invert(&Integer::from(k))
        .ok()
        .and_then(|v| v.to_u64())
}

/// Which residues mod `k` are squares of some integer (by enumeration).
pub fn square_table(k: u64) -> Vec<bool> {
    let mut t = vec![false; k as usize];
    for x in 0..k {
        t[((x as u128 * x as u128) % k as u128) as usize] = true;
    }
    t
}

/// Eventually periodic orbit of `x0` under `x -> x^2 + c0` modulo `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitModP {
    pub p: u64,
    pub c0: u64,
    pub tail: Vec<u64>,
    pub cycle: Vec<u64>,
}

impl OrbitModP {
    pub fn preperiod(&self) -> usize {
        self.tail.len()
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    /// The `n`-th iterate of the start value.
    pub fn term(&self, n: usize) -> u64 {
        if n < self.tail.len() {
            self.tail[n]
        } else {
            self.cycle[(n - self.tail.len()) % self.cycle.len()]
        }
    }
}

/// Orbit of `x0` under `x^2 + c0` modulo any `k >= 2`, via first-repeat detection.
pub fn orbit_from(x0: u64, c0: u64, k: u64) -> OrbitModP {
    let mut seen: Vec<u32> = vec![u32::MAX; k as usize];
    let mut seq = Vec::new();
    let mut x = x0 % k;
    loop {
        if seen[x as usize] != u32::MAX {
            let start = seen[x as usize] as usize;
            let cycle = seq.split_off(start);
            return OrbitModP {
                p: k,
                c0,
                tail: seq,
                cycle,
            };
        }
        seen[x as usize] = seq.len() as u32;
        seq.push(x);
        x = ((x as u128 * x as u128 + c0 as u128) % k as u128) as u64;
    }
}

/// Orbit of 0 under `x^2 + 1/c` over `F_p`.
pub fn orbit_mod_p(c: &Integer, p: u64) -> Result<OrbitModP> {
    if p < 3 || p % 2 == 0 {
        return Err(Error::Domain(format!("modulus {p} must be an odd prime")));
    }
    let cm = int_mod(c, p);
    let c0 = inv_mod(cm, p).ok_or_else(|| Error::Domain(format!("{p} divides c = {c}")))?;
    Ok(orbit_from(0, c0, p))
}

/// Sequence a sieve certificate speaks about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// `f^n(0)`, which has the square class of `a_n(c)` for `n >= 2`.
    Numerator,
    /// `g(f^n(0))` for a named factor.
    Factor { factor: FactorPoly },
}

impl Target {
    pub fn factor(g: &FactorPoly) -> Self {
        Target::Factor { factor: g.clone() }
    }

    pub fn label(&self) -> String {
        match self {
            Target::Numerator => "a_n".into(),
            Target::Factor { factor } => factor.name.to_string(),
        }
    }

    /// First index from which the certificate may speak. At `n = 1` an
    /// odd-degree factor's obstruction carries an extra sign, and `a_1 = 1`.
    fn min_start(&self) -> usize {
        match self {
            Target::Numerator => 2,
            Target::Factor { factor } if factor.degree() % 2 == 1 => 2,
            Target::Factor { .. } => 1,
        }
    }

    fn reducer(&self, p: u64) -> Option<Vec<u64>> {
        match self {
            Target::Numerator => Some(vec![0, 1]),
            Target::Factor { factor } => factor.coeffs_mod(p),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Constant,
    TwoCycle,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SieveCertificate {
    pub p: u64,
    pub start: u32,
    pub kind: CycleKind,
    /// Residues in the order they occur from `start` on.
    pub values: Vec<u64>,
    pub target: String,
}

impl SieveCertificate {
    /// Re-iterates the orbit and confirms every claim of the certificate.
    pub fn verify(&self, c: &Integer, target: &Target) -> bool {
        if target.label() != self.target || self.values.is_empty() {
            return false;
        }
        if (self.start as usize) < target.min_start() {
            return false;
        }
        let Ok(orbit) = orbit_mod_p(c, self.p) else {
            return false;
        };
        let Some(red) = target.reducer(self.p) else {
            return false;
        };
        if self.values.iter().any(|&v| jacobi_u64(v, self.p) != -1) {
            return false;
        }
        let d = self.values.len();
        let kind_ok = match self.kind {
            CycleKind::Constant => d == 1,
            CycleKind::TwoCycle => d == 2,
            CycleKind::Cycle => d >= 3,
        };
        if !kind_ok || orbit.period() % d != 0 {
            return false;
        }
        let s = self.start as usize;
        let last = s.max(orbit.preperiod()) + orbit.period();
        (s..=last).all(|n| eval_mod_coeffs(&red, orbit.term(n), self.p) == self.values[(n - s) % d])
    }
}

/// Reduced target values `y_0, ..., y_len` mod `p`, plus the orbit.
fn reduced(c: &Integer, target: &Target, p: u64) -> Option<(OrbitModP, Vec<u64>)> {
    let orbit = orbit_mod_p(c, p).ok()?;
    let red = target.reducer(p)?;
    let len = orbit.preperiod() + 2 * orbit.period() + 2;
    let ys = (0..len).map(|n| eval_mod_coeffs(&red, orbit.term(n), p)).collect();
    Some((orbit, ys))
}

fn smallest_period(vals: &[u64]) -> usize {
    let l = vals.len();
    (1..=l)
        .find(|&d| l % d == 0 && (0..l).all(|i| vals[i] == vals[i % d]))
        .unwrap_or(l)
}

/// The goal condition at one prime, for any eventual cycle length up to `max_cycle`.
pub fn certify_with_cycle_limit(
    c: &Integer,
    target: &Target,
    p: u64,
    max_cycle: usize,
) -> Option<SieveCertificate> {
    let (orbit, ys) = reduced(c, target, p)?;
    let pre = orbit.preperiod();
    let cyc: Vec<u64> = ys[pre..pre + orbit.period()].to_vec();
    let d = smallest_period(&cyc);
    if d > max_cycle {
        return None;
    }
    let values_set: BTreeSet<u64> = cyc[..d].iter().copied().collect();
    if values_set.iter().any(|&v| jacobi_u64(v, p) != -1) {
        return None;
    }
    let floor = target.min_start();
    let mut start = pre.max(floor);
    // Walk back while earlier terms still follow the cycle pattern.
    while start > floor {
        let prev = start - 1;
        let expected = cyc[(prev + orbit.period() * 4 - pre) % d];
        if ys[prev] != expected {
            break;
        }
        start = prev;
    }
    let values: Vec<u64> = (start..start + d).map(|n| ys[n]).collect();
    let kind = match d {
        1 => CycleKind::Constant,
        2 => CycleKind::TwoCycle,
        _ => CycleKind::Cycle,
    };
    Some(SieveCertificate {
        p,
        start: start as u32,
        kind,
        values,
        target: target.label(),
    })
}

/// Certificate at a named prime with any cycle length.
pub fn certify_at_prime(c: &Integer, target: &Target, p: u64) -> Option<SieveCertificate> {
    certify_with_cycle_limit(c, target, p, usize::MAX)
}

/// Smallest odd prime `p <= p_max` meeting the goal condition (cycle length `<= max_cycle`).
pub fn goal_search_with(
    c: &Integer,
    target: &Target,
    p_max: u64,
    max_cycle: usize,
) -> Option<SieveCertificate> {
    primes_up_to(p_max)
        .into_iter()
        .filter(|&p| p > 2 && !c.is_divisible_u(p as u32))
        .find_map(|p| certify_with_cycle_limit(c, target, p, max_cycle))
}

/// Eventually constant or two-cycle of non-residues, smallest prime first.
pub fn goal_search(c: &Integer, target: &Target, p_max: u64) -> Option<SieveCertificate> {
    goal_search_with(c, target, p_max, 2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ResidualOutcome {
    Negative,
    ExactNonsquare,
    Witness { p: u64 },
    Square,
    Unresolved,
}

impl ResidualOutcome {
    pub fn is_nonsquare(&self) -> bool {
        matches!(
            self,
            ResidualOutcome::Negative | ResidualOutcome::ExactNonsquare | ResidualOutcome::Witness { .. }
        )
    }
}

/// Budget for [`residual_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualBudget {
    /// Largest prime tried as a Jacobi witness.
    pub prime_limit: u64,
    /// Exact evaluation is used when the term has at most this many bits.
    pub exact_bits: u64,
}

impl Default for ResidualBudget {
    fn default() -> Self {
        ResidualBudget {
            prime_limit: 2000,
            exact_bits: 1 << 16,
        }
    }
}

fn rational_is_square(q: &Rational) -> bool {
    *q >= 0 && is_perfect_square(q.numer()) && is_perfect_square(q.denom())
}

/// `a_n(c) mod p` by running the recurrence modulo `p`.
pub fn a_mod(c: &Integer, n: u32, p: u64) -> u64 {
    let cm = int_mod(c, p) as u128;
    let p128 = p as u128;
    let mut a: u128 = 1 % p128;
    let mut cpow: u128 = 1 % p128;
    for _ in 2..=n {
        cpow = cpow * cpow % p128 * cm % p128;
        a = (a * a + cpow) % p128;
    }
    a as u64
}

/// The residual term at index `n` reduced mod `p` (sign applied at `n = 1` for odd degree).
pub fn target_residue(c: &Integer, target: &Target, n: u32, p: u64) -> Option<u64> {
    match target {
        Target::Numerator => Some(a_mod(c, n, p)),
        Target::Factor { factor } => {
            let red = factor.coeffs_mod(p)?;
            let orbit = orbit_mod_p(c, p).ok()?;
            let mut v = eval_mod_coeffs(&red, orbit.term(n as usize), p);
            if n == 1 && factor.degree() % 2 == 1 {
                v = (p - v) % p;
            }
            Some(v)
        }
    }
}

/// Proves a single term non-square: sign, exact test, or a Jacobi witness.
///
/// For a factor target the term is the obstruction (with the sign at `n = 1`
/// for odd degree); for [`Target::Numerator`] it is `a_n(c)` itself.
pub fn residual_check(
    c: &Integer,
    target: &Target,
    n: u32,
    budget: ResidualBudget,
) -> Result<ResidualOutcome> {
    if n == 0 {
        return Err(Error::Domain("residual index starts at 1".into()));
    }
    let cheap = estimated_bits(c, n) <= budget.exact_bits;
    if cheap {
        match target {
            Target::Numerator => {
                let mut seq = NumeratorSeq::new(c)?;
                while seq.index() < n {
                    seq.advance()?;
                }
                let a = seq.current();
                return Ok(if *a < 0 {
                    ResidualOutcome::Negative
                } else if is_perfect_square(a) {
                    ResidualOutcome::Square
                } else {
                    ResidualOutcome::ExactNonsquare
                });
            }
            Target::Factor { factor } => {
                let v = obstruction(factor, c, n)?.value;
                return Ok(if v < 0 {
                    ResidualOutcome::Negative
                } else if rational_is_square(&v) {
                    ResidualOutcome::Square
                } else {
                    ResidualOutcome::ExactNonsquare
                });
            }
        }
    }
    for p in primes_up_to(budget.prime_limit) {
        if p == 2 || c.is_divisible_u(p as u32) {
            continue;
        }
        if let Some(v) = target_residue(c, target, n, p) {
            if jacobi_u64(v, p) == -1 {
                return Ok(ResidualOutcome::Witness { p });
            }
        }
    }
    Ok(ResidualOutcome::Unresolved)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableProvenance {
    Static,
    Regenerated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongruenceRow {
    pub modulus: u64,
    pub residues: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongruenceTable {
    pub rows: Vec<CongruenceRow>,
    pub provenance: TableProvenance,
}

const TABLE1_TEXT: &str = include_str!("../data/table1.txt");

impl CongruenceTable {
    pub fn parse(text: &str, provenance: TableProvenance) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad table row: {line}")))?;
            let modulus: u64 = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad modulus: {k}")))?;
            let residues = rest
                .split(',')
                .map(|r| r.trim())
                .filter(|r| !r.is_empty())
                .map(|r| r.parse::<u64>().map_err(|_| Error::Parse(format!("bad residue: {r}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(CongruenceRow { modulus, residues });
        }
        Ok(CongruenceTable { rows, provenance })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(
            "# Congruence classes of c that keep a_n(c) from being a square.\n# One row per modulus: \"modulus: residues\".\n",
        );
        for r in &self.rows {
            let list: Vec<String> = r.residues.iter().map(u64::to_string).collect();
            out.push_str(&format!("{}: {}\n", r.modulus, list.join(", ")));
        }
        out
    }

    pub fn row(&self, modulus: u64) -> Option<&CongruenceRow> {
        self.rows.iter().find(|r| r.modulus == modulus)
    }

    /// Rows whose class contains `c`.
    pub fn matches(&self, c: &Integer) -> Vec<(u64, u64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                let v = int_mod(c, r.modulus);
                r.residues.contains(&v).then_some((r.modulus, v))
            })
            .collect()
    }
}

/// The table as shipped with the crate.
pub fn static_table1() -> CongruenceTable {
    CongruenceTable::parse(TABLE1_TEXT, TableProvenance::Static).expect("embedded table parses")
}

/// Moduli of the table: 3, 4, 5, 7, 8 and the odd primes below `bound`.
pub fn table1_moduli(bound: u64) -> Vec<u64> {
    let mut ks: Vec<u64> = primes_up_to(bound.saturating_sub(1))
        .into_iter()
        .filter(|&p| p > 2)
        .collect();
    ks.extend([4, 8]);
    ks.sort_unstable();
    ks
}

/// Which of the two admission patterns a class satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admission {
    /// Non-residue at every odd index `n >= 5`.
    pub odd_indices: bool,
    /// Non-residue at every `n = 3j+1 >= 7` and `n = 3j+2 >= 5`.
    pub thirds: bool,
}

impl Admission {
    pub fn admitted(&self) -> bool {
        self.odd_indices || self.thirds
    }
}

/// Non-residue status of `f^n(0) mod k` for `n` in `0..len`, covering a
/// full joint period of the orbit and any index pattern mod 6.
pub fn nonresidue_profile(k: u64, c: u64) -> Option<Vec<bool>> {
    let c0 = inv_mod(c % k, k)?;
    let orbit = orbit_from(0, c0, k);
    let squares = square_table(k);
    let len = orbit.preperiod().max(8) + 6 * orbit.period() + 6;
    Some((0..len).map(|n| !squares[orbit.term(n) as usize]).collect())
}

/// Tests the two admission patterns for the class `c mod k`.
pub fn admission(k: u64, c: u64) -> Option<Admission> {
    let prof = nonresidue_profile(k, c)?;
    let odd_indices = (5..prof.len()).step_by(2).all(|n| prof[n]);
    let thirds = (5..prof.len())
        .filter(|n| (n % 3 == 1 && *n >= 7) || n % 3 == 2)
        .all(|n| prof[n]);
    Some(Admission { odd_indices, thirds })
}

/// Recomputes the table from the two admission patterns.
///
/// Classes mod 8 whose reduction mod 4 is already listed are dropped, since
/// the mod-4 row implies them.
pub fn regen_table1(bound: u64) -> CongruenceTable {
    let mut rows: Vec<CongruenceRow> = Vec::new();
    for k in table1_moduli(bound) {
        let residues: Vec<u64> = (1..k)
            .filter(|&c| admission(k, c).is_some_and(|a| a.admitted()))
            .collect();
        rows.push(CongruenceRow { modulus: k, residues });
    }
    let mod4: Vec<u64> = rows
        .iter()
        .find(|r| r.modulus == 4)
        .map(|r| r.residues.clone())
        .unwrap_or_default();
    if let Some(r8) = rows.iter_mut().find(|r| r.modulus == 8) {
        r8.residues.retain(|c| !mod4.contains(&(c % 4)));
    }
    CongruenceTable {
        rows,
        provenance: TableProvenance::Regenerated,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiff {
    pub modulus: u64,
    /// In the first table but not the second.
    pub extra: Vec<u64>,
    /// In the second table but not the first.
    pub missing: Vec<u64>,
}

/// Row-by-row differences between two tables (only differing rows).
pub fn table_diff(a: &CongruenceTable, b: &CongruenceTable) -> Vec<RowDiff> {
    let mut moduli: BTreeSet<u64> = a.rows.iter().map(|r| r.modulus).collect();
    moduli.extend(b.rows.iter().map(|r| r.modulus));
    let mut out = Vec::new();
    for k in moduli {
        let ra: BTreeSet<u64> = a.row(k).map(|r| r.residues.iter().copied().collect()).unwrap_or_default();
        let rb: BTreeSet<u64> = b.row(k).map(|r| r.residues.iter().copied().collect()).unwrap_or_default();
        if ra != rb {
            out.push(RowDiff {
                modulus: k,
                extra: ra.difference(&rb).copied().collect(),
                missing: rb.difference(&ra).copied().collect(),
            });
        }
    }
    out
}

/// Families of congruence facts that certify non-squareness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleFamily {
    /// `c = -1 mod p`, `p = 3 mod 4`: the orbit is `0, -1, 0, -1, ...`.
    MinusOneModP,
    /// `m = -1 mod p` with `p = 7 mod 8` (or `3 mod 8` when `m - 1` is a non-square).
    MMinusOneModP,
    /// The unconditional list of classes of `m`.
    MClasses,
    /// The list of classes of `m` that needs `m - 1` non-square.
    MClassesSecond,
    /// A row of the table of classes of `c`.
    Table1,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleMatch {
    pub family: RuleFamily,
    pub modulus: u64,
    pub residue: u64,
    /// Which sequence the rule certifies: `a_n` or `g2`.
    pub track: String,
    /// Residue facts the rule relies on.
    pub facts: String,
}

const M_CLASSES: &[(u64, &[u64])] = &[
    (4, &[3]),
    (5, &[3]),
    (7, &[2, 5, 6]),
    (11, &[4, 6, 7]),
    (13, &[8, 10]),
    (17, &[2, 4, 7, 8, 9, 11, 15]),
    (19, &[3, 5, 11]),
    (23, &[9, 11, 14, 15, 18, 20, 21, 22]),
    (29, &[3, 19, 26]),
    (31, &[2, 12, 30]),
    (37, &[6, 20]),
    (41, &[12, 14, 27, 29]),
    (43, &[15, 21, 30]),
    (47, &[9, 22, 38, 46]),
];

const M_CLASSES_SECOND: &[(u64, &[u64])] = &[
    (3, &[2]),
    (8, &[5]),
    (11, &[10]),
    (19, &[18]),
    (23, &[2, 13]),
    (29, &[8, 10, 14]),
    (31, &[9, 26]),
    (37, &[13, 31]),
    (41, &[3, 11, 19, 37, 38]),
    (43, &[22, 36, 39, 42]),
    (47, &[3, 10]),
];

/// Rules on `c` for the `a_n` track (needs `c + 1` non-square, checked by the caller).
pub fn match_c_rules(c: &Integer) -> Vec<RuleMatch> {
    let mut out = Vec::new();
    if *c > 0 {
        let c1 = Integer::from(c + 1u32);
        if let Ok(fs) = factorize(&c1) {
            for (q, _) in fs {
                if let Some(p) = q.to_u64() {
                    if p % 4 == 3 {
                        out.push(RuleMatch {
                            family: RuleFamily::MinusOneModP,
                            modulus: p,
                            residue: p - 1,
                            track: "a_n".into(),
                            facts: format!("-1 is a non-residue mod {p}"),
                        });
                    }
                }
            }
        }
    }
    for (k, v) in static_table1().matches(c) {
        out.push(RuleMatch {
            family: RuleFamily::Table1,
            modulus: k,
            residue: v,
            track: "a_n".into(),
            facts: format!("table row mod {k}"),
        });
    }
    out
}

/// Rules on `m` (with `c = -m^2`) for the `g2` track.
pub fn match_m_rules(m: &Integer) -> Vec<RuleMatch> {
    let mut out = Vec::new();
    if *m == 4 {
        return out;
    }
    let m_minus_1_nonsquare = !is_perfect_square(&Integer::from(m - 1u32));
    let m1 = Integer::from(m + 1u32);
    if let Ok(fs) = factorize(&m1) {
        for (q, _) in fs {
            let Some(p) = q.to_u64() else { continue };
            let ok = p % 8 == 7 || (p % 8 == 3 && m_minus_1_nonsquare);
            if ok {
                out.push(RuleMatch {
                    family: RuleFamily::MMinusOneModP,
                    modulus: p,
                    residue: p - 1,
                    track: "g2".into(),
                    facts: if p % 8 == 7 {
                        format!("-1 and -2 are non-residues mod {p}")
                    } else {
                        format!("-1 is a non-residue mod {p}; m - 1 is not a square")
                    },
                });
            }
        }
    }
    let lists: [(&[(u64, &[u64])], RuleFamily, bool); 2] = [
        (M_CLASSES, RuleFamily::MClasses, true),
        (M_CLASSES_SECOND, RuleFamily::MClassesSecond, m_minus_1_nonsquare),
    ];
    for (list, family, enabled) in lists {
        if !enabled {
            continue;
        }
        for (k, res) in list {
            let v = int_mod(m, *k);
            if res.contains(&v) {
                out.push(RuleMatch {
                    family,
                    modulus: *k,
                    residue: v,
                    track: "g2".into(),
                    facts: format!("class {v} mod {k} of m"),
                });
            }
        }
    }
    out
}

/// All fixed congruence rules that apply to `c` (the `g2` rules via `m` when `c = -m^2`).
pub fn fixed_congruence_match(c: &Integer) -> Vec<RuleMatch> {
    if *c < 0 {
        if let Some(m) = exact_sqrt(&Integer::from(-c)) {
            return match_m_rules(&m);
        }
        return Vec::new();
    }
    match_c_rules(c)
}

/// Counts of classes per modulus, for reporting.
pub fn row_sizes(t: &CongruenceTable) -> BTreeMap<u64, usize> {
    t.rows.iter().map(|r| (r.modulus, r.residues.len())).collect()
}

//! Which of the seven factorization cases `c` falls in, the predicted
//! factor counts `k_n`, and per-`c` certificate chains backing them.
//!
//! Every irreducibility claim reduces (through the obstruction lemma) to
//! "this sequence of rationals has no squares". A chain covers the indices
//! of such a sequence with sign arguments, sieve certificates for the tail,
//! and residual checks for the finitely many indices before the tail.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;

use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::bigratseq::{exact_sqrt, is_perfect_square};
use crate::curves::{CurveFact, CurveId, ALL_CURVES};
use crate::factor::primes_up_to;
use crate::latticever::{required_bound, verify_to};
use crate::modsieve::{
    certify_at_prime, fixed_congruence_match, goal_search, goal_search_with, jacobi_u64,
    match_c_rules, residual_check, target_residue, ResidualBudget, ResidualOutcome, RuleMatch,
    SieveCertificate, Target,
};
use crate::polyfactors::{build_pattern, reducible_shape, FactorName, FactorPoly, Pattern, Shape};
use crate::stabbounds::iterate_bound_m;
use crate::{Error, Result};

/// `s` values where `s^3 - s + 1` is a square (E92 points with `s >= 2`).
pub const SPECIAL_S: [u32; 3] = [3, 5, 56];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseVerdict {
    #[serde(with = "crate::json::int")]
    pub c: Integer,
    pub case: u8,
    #[serde(with = "crate::json::opt_int", default)]
    pub m: Option<Integer>,
    #[serde(with = "crate::json::opt_int", default)]
    pub s: Option<Integer>,
    pub f_reducible: bool,
    pub f2_reducible: bool,
}

pub fn detect_case(c: &Integer) -> Result<CaseVerdict> {
    if *c == 0 || *c == -1 {
        return Err(Error::Domain(format!("c = {c} is excluded")));
    }
    let mut v = CaseVerdict {
        c: c.clone(),
        case: 7,
        m: None,
        s: None,
        f_reducible: false,
        f2_reducible: false,
    };
    match reducible_shape(c) {
        Some(Shape::NegSquare { m }) => {
            v.f_reducible = true;
            v.f2_reducible = true;
            if let Some(s) = exact_sqrt(&Integer::from(&m + 1u32)) {
                v.case = if SPECIAL_S.iter().any(|&t| s == t) { 4 } else { 3 };
                v.s = Some(s);
            } else {
                v.case = if m == 4 { 2 } else { 1 };
            }
            v.m = Some(m);
        }
        Some(Shape::TwoStep { m }) => {
            v.f2_reducible = true;
            v.case = if m == 2 { 6 } else { 5 };
            v.m = Some(m);
        }
        None => {}
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KProfile {
    pub k1: u32,
    pub k2: u32,
    pub k3: u32,
    pub k_stable: u32,
    /// `k_n = k_stable` for all `n >= stable_from`.
    pub stable_from: u32,
}

impl KProfile {
    pub fn k(&self, n: u32) -> u32 {
        match n {
            0 => 1,
            1 => self.k1,
            2 => self.k2,
            3 => self.k3,
            _ => self.k_stable,
        }
    }
}

pub fn predicted_k_profile(v: &CaseVerdict) -> KProfile {
    let (k1, k2, k3, k_stable, stable_from) = match v.case {
        1 => (2, 2, 2, 2, 1),
        2 => (2, 2, 3, 3, 3),
        3 => (2, 3, 3, 3, 2),
        4 => (2, 3, 4, 4, 3),
        5 => (1, 2, 2, 2, 2),
        6 => (1, 2, 3, 3, 3),
        _ => (1, 1, 1, 1, 1),
    };
    KProfile { k1, k2, k3, k_stable, stable_from }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EffortLevel {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effort {
    pub level: EffortLevel,
    /// Largest index a residual check is attempted at.
    pub horizon: u32,
    /// Prime bounds tried in turn by the goal search.
    pub p_max: Vec<u64>,
    /// Run the lattice verification to this `X` for the prime indices of even `c`.
    #[serde(with = "crate::json::opt_int", default)]
    pub lattice_x: Option<Integer>,
    /// Take `a_5(c)` non-square as a known external result.
    pub assume_a5_nonsquare: bool,
    /// Height of the brute-force cross-check of the curve facts (0: none).
    pub curve_height: u64,
}

impl Effort {
    pub fn fast() -> Self {
        Effort {
            level: EffortLevel::Fast,
            horizon: 64,
            p_max: vec![500],
            lattice_x: None,
            assume_a5_nonsquare: false,
            curve_height: 0,
        }
    }

    pub fn full() -> Self {
        Effort {
            level: EffortLevel::Full,
            horizon: 256,
            p_max: vec![500, 1201],
            lattice_x: None,
            assume_a5_nonsquare: false,
            curve_height: 10_000,
        }
    }
}

impl Default for Effort {
    fn default() -> Self {
        Effort::full()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// A linear factor is irreducible.
    Linear,
    /// A monic quadratic with negative discriminant is irreducible.
    NegativeDiscriminant {
        #[serde(with = "crate::json::rat")]
        disc: Rational,
    },
    /// Irreducibility of `f` or `f^2` read off the shape of `c`.
    ShapeFact { fact: String },
    /// Every term from `from` on is negative.
    Sign { from: u32, reason: String },
    Residual { n: u32, outcome: ResidualOutcome },
    Sieve { certificate: SieveCertificate },
    /// A fixed congruence rule covering every index from `from` on.
    Congruence { from: u32, rule: RuleMatch },
    /// The term at `n` is a square only at the listed x-coordinates.
    Curve {
        n: u32,
        #[serde(with = "crate::json::int")]
        param: Integer,
        fact: CurveFact,
    },
    /// Odd `c`: `b_n` has 2-adic valuation `-1` whenever `a_n` is a square.
    OddTwoAdic { from: u32 },
    /// `a_3` and `a_4` are never squares.
    ClosedForm { n: u32 },
    RigidClosure { n: u32, base: u32 },
    /// The analytic bound rules out squares beyond the iterate bound.
    AnalyticBound { from: u32, m_bound: u32 },
    /// A lattice certificate: a square `a_p(c)` would force `c > c_bound`.
    Lattice {
        p: u32,
        #[serde(with = "crate::json::int")]
        c_bound: Integer,
        passes: usize,
    },
    ExternalFact { n: u32, fact: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorClaim {
    /// A factor name, `f`, `f^2`, or `f^n` for the numerator track.
    pub factor: String,
    pub statement: String,
    pub evidence: Vec<Evidence>,
    /// Indices no certificate reached (residual horizon or budget).
    pub unchecked: Vec<u32>,
    /// No tail certificate: nothing covers the indices from here on.
    pub open_from: Option<u32>,
    pub failure: Option<String>,
}

impl FactorClaim {
    fn new(factor: &str, statement: String) -> Self {
        FactorClaim {
            factor: factor.to_string(),
            statement,
            evidence: Vec::new(),
            unchecked: Vec::new(),
            open_from: None,
            failure: None,
        }
    }

    pub fn complete(&self) -> bool {
        self.unchecked.is_empty() && self.open_from.is_none() && self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Verified,
    Conditional { unchecked: Vec<String> },
    Failed { claim: String, reason: String },
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Verified => f.write_str("VERIFIED"),
            Status::Conditional { unchecked } => write!(f, "CONDITIONAL({})", unchecked.join(", ")),
            Status::Failed { claim, reason } => write!(f, "FAILED({claim}: {reason})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(flatten)]
    pub verdict: CaseVerdict,
    pub k_profile: KProfile,
    pub effort: EffortLevel,
    pub certificates: Vec<FactorClaim>,
    pub status: Status,
}

impl VerificationReport {
    pub fn is_verified(&self) -> bool {
        self.status == Status::Verified
    }

    pub fn claim(&self, factor: &str) -> Option<&FactorClaim> {
        self.certificates.iter().find(|c| c.factor == factor)
    }
}

/// How one factor's obstruction sequence is to be covered.
struct Plan<'a> {
    g: &'a FactorPoly,
    /// Claim only `g(f^n)` for `n <= k`.
    only_to: Option<u32>,
    sign_from: Option<(u32, &'static str)>,
    named_prime: Option<u64>,
    curve: Option<(u32, CurveId, Integer)>,
    rules: Vec<RuleMatch>,
}

impl<'a> Plan<'a> {
    fn new(g: &'a FactorPoly) -> Self {
        Plan { g, only_to: None, sign_from: None, named_prime: None, curve: None, rules: Vec::new() }
    }
}

const NEG_ORBIT: &str = "f^n(0) lies in (-1/m, 0) and the root of the factor is positive";

/// Holds the effort, curve facts and cached lattice certificates for a run.
pub struct Verifier {
    effort: Effort,
    curves: BTreeMap<CurveId, CurveFact>,
    lattice: Mutex<BTreeMap<u32, std::result::Result<Evidence, String>>>,
}

impl Verifier {
    pub fn new(effort: Effort) -> Self {
        let curves = ALL_CURVES
            .into_iter()
            .map(|id| {
                let fact = if effort.curve_height > 0 {
                    CurveFact::checked(id, effort.curve_height)
                } else {
                    CurveFact::paper(id)
                };
                (id, fact)
            })
            .collect();
        Verifier { effort, curves, lattice: Mutex::new(BTreeMap::new()) }
    }

    pub fn effort(&self) -> &Effort {
        &self.effort
    }

    pub fn curve_facts(&self) -> impl Iterator<Item = &CurveFact> {
        self.curves.values()
    }

    pub fn verify(&self, c: &Integer) -> Result<VerificationReport> {
        let verdict = detect_case(c)?;
        let k_profile = predicted_k_profile(&verdict);
        let certificates = match verdict.case {
            7 => self.case7(c)?,
            _ => self.reducible_cases(&verdict)?,
        };
        let status = summarize(&certificates);
        Ok(VerificationReport {
            verdict,
            k_profile,
            effort: self.effort.level,
            certificates,
            status,
        })
    }

    fn reducible_cases(&self, v: &CaseVerdict) -> Result<Vec<FactorClaim>> {
        let c = &v.c;
        let pat = build_pattern(c)?;
        let get = |n: FactorName| -> Result<&FactorPoly> {
            pat.get(n).ok_or_else(|| Error::Inconsistent(format!("pattern lacks {n} for c = {c}")))
        };
        let mut out = Vec::new();
        if v.f_reducible {
            let m = v.m.clone().expect("m for c = -m^2");
            let g1 = get(FactorName::G1)?;
            let g2 = get(FactorName::G2)?;
            let m_rules = crate::modsieve::match_m_rules(&m);
            match v.case {
                1 | 2 => {
                    let mut p = Plan::new(g1);
                    p.sign_from = Some((2, NEG_ORBIT));
                    out.push(self.factor_claim(c, p)?);
                }
                _ => {
                    let mut p = Plan::new(g1);
                    p.only_to = Some(0);
                    out.push(self.factor_claim(c, p)?);
                }
            }
            let mut p = Plan::new(g2);
            if v.case == 2 {
                p.only_to = Some(1);
            } else {
                p.curve = Some((2, CurveId::E184, m.clone()));
                p.rules = m_rules;
            }
            out.push(self.factor_claim(c, p)?);
            if v.case == 2 {
                for (name, prime) in [(FactorName::G21, 11), (FactorName::G22, 5)] {
                    let mut p = Plan::new(get(name)?);
                    p.named_prime = Some(prime);
                    out.push(self.factor_claim(c, p)?);
                }
            }
            if v.case == 3 || v.case == 4 {
                let s = v.s.clone().expect("s for m + 1 = s^2");
                let mut p = Plan::new(get(FactorName::H1)?);
                if v.case == 3 {
                    p.sign_from = Some((2, NEG_ORBIT));
                    p.curve = Some((1, CurveId::E92, s.clone()));
                } else {
                    p.only_to = Some(0);
                }
                out.push(self.factor_claim(c, p)?);
                out.push(self.factor_claim(c, Plan::new(get(FactorName::H2)?))?);
                if v.case == 4 {
                    let mut p = Plan::new(get(FactorName::H11)?);
                    p.sign_from = Some((2, NEG_ORBIT));
                    out.push(self.factor_claim(c, p)?);
                    let mut p = Plan::new(get(FactorName::H12)?);
                    p.named_prime = match s.to_u32() {
                        Some(3) => Some(29),
                        Some(5) => Some(23),
                        Some(56) => Some(31),
                        _ => None,
                    };
                    out.push(self.factor_claim(c, p)?);
                }
            }
        } else {
            let m = v.m.clone().expect("m for c = 4m^2(m^2-1)");
            out.push(shape_claim("f", "-c is not a square (c > 0)"));
            let mut p = Plan::new(get(FactorName::Q1)?);
            p.curve = Some((1, CurveId::Hyp6Minus, m.clone()));
            if v.case == 6 {
                p.named_prime = Some(239);
            }
            out.push(self.factor_claim(c, p)?);
            let mut p = Plan::new(get(FactorName::Q2)?);
            if v.case == 6 {
                p.only_to = Some(0);
            } else {
                p.curve = Some((1, CurveId::Hyp6Plus, m));
            }
            out.push(self.factor_claim(c, p)?);
            if v.case == 6 {
                for (name, prime) in [(FactorName::V1, 239), (FactorName::V2, 41)] {
                    let mut p = Plan::new(get(name)?);
                    p.named_prime = Some(prime);
                    out.push(self.factor_claim(c, p)?);
                }
            }
        }
        Ok(out)
    }

    fn factor_claim(&self, c: &Integer, plan: Plan<'_>) -> Result<FactorClaim> {
        let g = plan.g;
        let name = g.name.as_str();
        let statement = match plan.only_to {
            Some(0) => format!("{name} irreducible"),
            Some(k) => format!("{name}(f^n) irreducible for 0 <= n <= {k}"),
            None => format!("{name}(f^n) irreducible for all n >= 0"),
        };
        let mut claim = FactorClaim::new(name, statement);
        claim.evidence.push(base_evidence(g)?);
        let target = Target::factor(g);

        let tail: Option<(u32, Evidence)> = if plan.only_to.is_some() {
            None
        } else if let Some((from, reason)) = plan.sign_from {
            Some((from, Evidence::Sign { from, reason: reason.to_string() }))
        } else {
            self.find_tail(c, &target, plan.named_prime, &plan.rules)
        };
        let last_residual = match (&tail, plan.only_to) {
            (_, Some(k)) => k,
            (Some((from, _)), None) => from.saturating_sub(1),
            (None, None) => {
                claim.open_from = Some(1);
                0
            }
        };
        self.residuals(c, &target, last_residual, plan.curve.as_ref(), &mut claim)?;
        if let Some((_, ev)) = tail {
            claim.evidence.push(ev);
        }
        Ok(claim)
    }

    fn find_tail(
        &self,
        c: &Integer,
        target: &Target,
        named: Option<u64>,
        rules: &[RuleMatch],
    ) -> Option<(u32, Evidence)> {
        let sieve = |cert: SieveCertificate| (cert.start, Evidence::Sieve { certificate: cert });
        if let Some(p) = named {
            if let Some(cert) = certify_at_prime(c, target, p) {
                return Some(sieve(cert));
            }
        }
        for &pm in &self.effort.p_max {
            if let Some(cert) = goal_search(c, target, pm) {
                return Some(sieve(cert));
            }
        }
        let top = self.effort.p_max.iter().copied().max().unwrap_or(500);
        if let Some(cert) = goal_search_with(c, target, top, usize::MAX) {
            return Some(sieve(cert));
        }
        rules
            .first()
            .map(|r| (2, Evidence::Congruence { from: 2, rule: r.clone() }))
    }

    /// Residual checks at `1..=last`; curve facts stand in where a check is unresolved.
    fn residuals(
        &self,
        c: &Integer,
        target: &Target,
        last: u32,
        curve: Option<&(u32, CurveId, Integer)>,
        claim: &mut FactorClaim,
    ) -> Result<()> {
        for n in 1..=last {
            if n > self.effort.horizon {
                claim.unchecked.push(n);
                continue;
            }
            let outcome = residual_check(c, target, n, ResidualBudget::default())?;
            match outcome {
                ResidualOutcome::Square => {
                    claim.failure = Some(format!("term at n = {n} is a square"));
                    return Ok(());
                }
                ResidualOutcome::Unresolved => match curve {
                    Some((k, id, param)) if *k == n && !self.curves[id].contains(param) => {
                        claim.evidence.push(Evidence::Curve {
                            n,
                            param: param.clone(),
                            fact: self.curves[id].clone(),
                        });
                    }
                    _ => claim.unchecked.push(n),
                },
                o => claim.evidence.push(Evidence::Residual { n, outcome: o }),
            }
        }
        Ok(())
    }

    fn case7(&self, c: &Integer) -> Result<Vec<FactorClaim>> {
        let mut out = vec![
            shape_claim("f", if *c > 0 { "-c is not a square (c > 0)" } else { "-c is not a square" }),
            shape_claim("f^2", "c is not of the form 4m^2(m^2-1)"),
        ];
        let mut claim = FactorClaim::new("f^n", "f^n irreducible for all n >= 3".into());
        let c1_square = is_perfect_square(&Integer::from(c + 1u32));
        if *c < 0 {
            claim.evidence.push(Evidence::Sign {
                from: 2,
                reason: "c < 0, so f^n(0) < 0 and a_n < 0".into(),
            });
        } else if c.is_odd() {
            claim.evidence.push(Evidence::OddTwoAdic { from: 2 });
        } else if let Some(rule) = (!c1_square).then(|| match_c_rules(c)).and_then(|r| r.into_iter().next()) {
            claim.evidence.push(Evidence::Congruence { from: 2, rule });
        } else if *c >= 4 {
            self.stab_chain(c, &mut claim)?;
        } else {
            let target = Target::Numerator;
            match self.find_tail(c, &target, None, &[]) {
                Some((from, ev)) => {
                    self.residuals_from(c, &target, 3, from.saturating_sub(1), &mut claim)?;
                    claim.evidence.push(ev);
                }
                None => claim.open_from = Some(3),
            }
        }
        out.push(claim);
        Ok(out)
    }

    fn residuals_from(
        &self,
        c: &Integer,
        target: &Target,
        first: u32,
        last: u32,
        claim: &mut FactorClaim,
    ) -> Result<()> {
        for n in first..=last {
            match residual_check(c, target, n, ResidualBudget::default())? {
                ResidualOutcome::Square => {
                    claim.failure = Some(format!("a_{n} is a square"));
                    return Ok(());
                }
                ResidualOutcome::Unresolved => claim.unchecked.push(n),
                o => claim.evidence.push(Evidence::Residual { n, outcome: o }),
            }
        }
        Ok(())
    }

    /// Even `c >= 4`: `a_3`, `a_4` closed form, prime indices up to the
    /// iterate bound one by one, composites by rigid divisibility, and the
    /// analytic bound beyond.
    fn stab_chain(&self, c: &Integer, claim: &mut FactorClaim) -> Result<()> {
        let m = iterate_bound_m(c)?;
        claim.evidence.push(Evidence::ClosedForm { n: 3 });
        claim.evidence.push(Evidence::ClosedForm { n: 4 });
        let mut proven: Vec<u32> = vec![3, 4];
        for p in primes_up_to(m as u64).into_iter().map(|p| p as u32).filter(|&p| p >= 5) {
            if p == 5 && self.effort.assume_a5_nonsquare {
                claim.evidence.push(Evidence::ExternalFact {
                    n: 5,
                    fact: "a_5(c) is not a square for c != 0".into(),
                });
                proven.push(p);
                continue;
            }
            if let Some(ev) = self.lattice_evidence(c, p) {
                claim.evidence.push(ev);
                proven.push(p);
                continue;
            }
            match residual_check(c, &Target::Numerator, p, ResidualBudget::default())? {
                ResidualOutcome::Square => {
                    claim.failure = Some(format!("a_{p} is a square"));
                    return Ok(());
                }
                ResidualOutcome::Unresolved => claim.unchecked.push(p),
                o => {
                    claim.evidence.push(Evidence::Residual { n: p, outcome: o });
                    proven.push(p);
                }
            }
        }
        for n in 6..=m {
            if proven.contains(&n) || claim.unchecked.contains(&n) {
                continue;
            }
            let base = if n % 4 == 0 {
                Some(4)
            } else {
                let mut k = n;
                while k % 2 == 0 {
                    k /= 2;
                }
                (3..=k).find(|d| k % d == 0)
            };
            match base {
                Some(b) if b != n && proven.contains(&b) => {
                    claim.evidence.push(Evidence::RigidClosure { n, base: b });
                }
                _ => claim.unchecked.push(n),
            }
        }
        claim.unchecked.sort_unstable();
        claim.evidence.push(Evidence::AnalyticBound { from: m + 1, m_bound: m });
        Ok(())
    }

    fn lattice_evidence(&self, c: &Integer, p: u32) -> Option<Evidence> {
        let x = self.effort.lattice_x.as_ref()?;
        if c > x {
            return None;
        }
        let mut cache = self.lattice.lock().unwrap_or_else(|e| e.into_inner());
        let entry = cache.entry(p).or_insert_with(|| {
            let run = required_bound(p, x).and_then(|b| verify_to(p, &b));
            run.map(|cert| Evidence::Lattice {
                p,
                c_bound: cert.c_bound.clone(),
                passes: cert.passes.len(),
            })
            .map_err(|e| e.to_string())
        });
        match &*entry {
            Ok(Evidence::Lattice { c_bound, .. }) if c <= c_bound => entry.as_ref().ok().cloned(),
            _ => None,
        }
    }
}

fn shape_claim(factor: &str, fact: &str) -> FactorClaim {
    let mut claim = FactorClaim::new(factor, format!("{factor} irreducible"));
    claim.evidence.push(Evidence::ShapeFact { fact: fact.to_string() });
    claim
}

fn base_evidence(g: &FactorPoly) -> Result<Evidence> {
    match g.degree() {
        1 => Ok(Evidence::Linear),
        2 => {
            let disc = g.discriminant().expect("quadratic");
            if disc < 0 {
                Ok(Evidence::NegativeDiscriminant { disc })
            } else {
                Err(Error::Inconsistent(format!("{} has discriminant {disc}", g.name)))
            }
        }
        d => Err(Error::Inconsistent(format!("{} has degree {d}", g.name))),
    }
}

fn summarize(claims: &[FactorClaim]) -> Status {
    if let Some(bad) = claims.iter().find(|c| c.failure.is_some()) {
        return Status::Failed {
            claim: bad.statement.clone(),
            reason: bad.failure.clone().unwrap_or_default(),
        };
    }
    let mut unchecked = Vec::new();
    for c in claims {
        unchecked.extend(c.unchecked.iter().map(|n| format!("{}: n = {n}", c.factor)));
        if let Some(n) = c.open_from {
            unchecked.push(format!("{}: n >= {n}", c.factor));
        }
    }
    if unchecked.is_empty() {
        Status::Verified
    } else {
        Status::Conditional { unchecked }
    }
}

pub fn verify(c: &Integer, effort: &Effort) -> Result<VerificationReport> {
    Verifier::new(effort.clone()).verify(c)
}

/// Every `c` in `lo..=hi` except 0 and -1, in increasing order.
pub fn verify_range(lo: i64, hi: i64, effort: &Effort) -> Result<Vec<VerificationReport>> {
    let v = Verifier::new(effort.clone());
    let cs: Vec<i64> = (lo..=hi).filter(|&c| c != 0 && c != -1).collect();
    cs.par_iter().map(|&c| v.verify(&Integer::from(c))).collect()
}

/// Number of `c` in `lo..=hi` (0 and -1 skipped) per case.
pub fn case_counts(lo: i64, hi: i64) -> BTreeMap<u8, u64> {
    let mut out = BTreeMap::new();
    for c in (lo..=hi).filter(|&c| c != 0 && c != -1) {
        if let Ok(v) = detect_case(&Integer::from(c)) {
            *out.entry(v.case).or_insert(0) += 1;
        }
    }
    out
}

fn claim_target(pat: Option<&Pattern>, factor: &str) -> std::result::Result<Option<Target>, String> {
    if factor.starts_with('f') {
        return Ok(Some(Target::Numerator));
    }
    let name = FactorName::parse(factor).ok_or_else(|| format!("unknown factor {factor}"))?;
    let g = pat
        .and_then(|p| p.get(name))
        .ok_or_else(|| format!("factor {factor} not in the pattern"))?;
    Ok(Some(Target::factor(g)))
}

/// Re-checks a report from its certificates alone, without any search.
pub fn recheck(report: &VerificationReport) -> std::result::Result<(), String> {
    let c = &report.verdict.c;
    let fresh = detect_case(c).map_err(|e| e.to_string())?;
    if fresh != report.verdict {
        return Err("verdict does not match the shape of c".into());
    }
    if report.k_profile != predicted_k_profile(&fresh) {
        return Err("k profile does not match the case".into());
    }
    let pat = if fresh.case == 7 { None } else { Some(build_pattern(c).map_err(|e| e.to_string())?) };
    if summarize(&report.certificates) != report.status {
        return Err("status does not follow from the claims".into());
    }
    for claim in &report.certificates {
        let target = claim_target(pat.as_ref(), &claim.factor)?;
        let g = pat.as_ref().and_then(|p| FactorName::parse(&claim.factor).and_then(|n| p.get(n)));
        for ev in &claim.evidence {
            check_evidence(c, &claim.factor, g, target.as_ref(), claim, ev)
                .map_err(|e| format!("{}: {e}", claim.factor))?;
        }
    }
    Ok(())
}

fn check_evidence(
    c: &Integer,
    factor: &str,
    g: Option<&FactorPoly>,
    target: Option<&Target>,
    claim: &FactorClaim,
    ev: &Evidence,
) -> std::result::Result<(), String> {
    let ok = match ev {
        Evidence::Linear => g.is_some_and(|g| g.degree() == 1),
        Evidence::NegativeDiscriminant { disc } => {
            g.and_then(|g| g.discriminant()).is_some_and(|d| d == *disc && d < 0)
        }
        Evidence::ShapeFact { .. } => match factor {
            "f" => *c > 0 || exact_sqrt(&Integer::from(-c)).is_none(),
            "f^2" => reducible_shape(c).is_none(),
            _ => false,
        },
        Evidence::Sign { from, .. } => {
            *c < 0 && *from >= 2 && g.map_or(factor == "f^n", |g| g.degree() == 1 && g.coeffs[0] < 0)
        }
        Evidence::Residual { n, outcome } => {
            let t = target.ok_or("no target")?;
            match outcome {
                ResidualOutcome::Witness { p } => {
                    target_residue(c, t, *n, *p).is_some_and(|v| jacobi_u64(v, *p) == -1)
                }
                o => residual_check(c, t, *n, ResidualBudget::default()).map_err(|e| e.to_string())? == *o,
            }
        }
        Evidence::Sieve { certificate } => certificate.verify(c, target.ok_or("no target")?),
        Evidence::Congruence { rule, .. } => {
            let track_ok = factor != "f^n" || !is_perfect_square(&Integer::from(c + 1u32));
            track_ok && fixed_congruence_match(c).contains(rule)
        }
        Evidence::Curve { param, fact, .. } => fact.known_x == fact.curve.known_x() && !fact.contains(param),
        Evidence::OddTwoAdic { .. } => c.is_odd() && *c > 0,
        Evidence::ClosedForm { n } => *n == 3 || *n == 4,
        Evidence::RigidClosure { n, base } => {
            *c > 0
                && n % base == 0
                && claim.evidence.iter().any(|e| match e {
                    Evidence::ClosedForm { n } | Evidence::Residual { n, .. } => n == base,
                    Evidence::Lattice { p, .. } => p == base,
                    Evidence::ExternalFact { n, .. } => n == base,
                    _ => false,
                })
        }
        Evidence::AnalyticBound { from, m_bound } => {
            iterate_bound_m(c).map_err(|e| e.to_string())? == *m_bound && *from == m_bound + 1
        }
        Evidence::Lattice { c_bound, .. } => c <= c_bound,
        Evidence::ExternalFact { .. } => true,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("evidence does not check: {}", serde_kind(ev)))
    }
}

fn serde_kind(ev: &Evidence) -> &'static str {
    match ev {
        Evidence::Linear => "linear",
        Evidence::NegativeDiscriminant { .. } => "negative_discriminant",
        Evidence::ShapeFact { .. } => "shape_fact",
        Evidence::Sign { .. } => "sign",
        Evidence::Residual { .. } => "residual",
        Evidence::Sieve { .. } => "sieve",
        Evidence::Congruence { .. } => "congruence",
        Evidence::Curve { .. } => "curve",
        Evidence::OddTwoAdic { .. } => "odd_two_adic",
        Evidence::ClosedForm { .. } => "closed_form",
        Evidence::RigidClosure { .. } => "rigid_closure",
        Evidence::AnalyticBound { .. } => "analytic_bound",
        Evidence::Lattice { .. } => "lattice",
        Evidence::ExternalFact { .. } => "external_fact",
    }
}

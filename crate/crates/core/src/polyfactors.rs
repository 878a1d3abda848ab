//! Named factors of small iterates and their irreducibility obstructions.
//!
//! When `f` or `f^2` is reducible the factors are explicit:
//!
//! | shape            | identity                         |
//! |------------------|----------------------------------|
//! | `c = -m^2`       | `f = g1 * g2`                    |
//! | `m + 1 = s^2`    | `g1(f) = h1 * h2`                |
//! | `s^3-s+1 = r^2`  | `h1(f) = h11 * h12`              |
//! | `m = 4`          | `g2(f^2) = g21 * g22`            |
//! | `c = 4m^2(m^2-1)`| `f^2 = q1 * q2`                  |
//! | `m = 2` there    | `q2(f) = v1 * v2`                |
//!
//! For an irreducible factor `g` of degree `d`, `g(f^n)` is irreducible for
//! every `n` as soon as `(-1)^d g(f(0))` and all `g(f^n(0))`, `n >= 2`, are
//! non-squares in `Q`. [`obstruction`] produces exactly those numbers.

use std::fmt;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::bigratseq::{exact_sqrt, orbit_point};
use crate::{Error, Result};

/// Dense polynomial over `Q`, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly(pub Vec<Rational>);

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == 0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rational::new());
        }
        Poly(coeffs)
    }

    pub fn x() -> Self {
        Poly(vec![Rational::new(), Rational::from(1)])
    }

    pub fn constant(c: Rational) -> Self {
        Poly(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.0.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let mut out = vec![Rational::new(); n];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in o.0.iter().enumerate() {
            out[i] += c;
        }
        Poly::new(out)
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![Rational::new(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += Rational::from(a * b);
            }
        }
        Poly::new(out)
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &Poly) -> Poly {
        let mut acc = Poly::constant(Rational::new());
        for c in self.0.iter().rev() {
            acc = acc.mul(inner).add(&Poly::constant(c.clone()));
        }
        acc
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.0.iter().enumerate().rev() {
            if *c == 0 && self.0.len() > 1 {
                continue;
            }
            let neg = *c < 0;
            let mag = Rational::from(c.abs_ref());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            match (i, mag == 1) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "x")?,
                (1, false) => write!(f, "{mag}*x")?,
                (_, true) => write!(f, "x^{i}")?,
                (_, false) => write!(f, "{mag}*x^{i}")?,
            }
        }
        Ok(())
    }
}

/// `x^2 + 1/c`.
pub fn f_poly(c: &Integer) -> Poly {
    Poly(vec![
        Rational::from((Integer::from(1), c.clone())),
        Rational::new(),
        Rational::from(1),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorName {
    G1,
    G2,
    H1,
    H2,
    H11,
    H12,
    G21,
    G22,
    Q1,
    Q2,
    V1,
    V2,
}

impl FactorName {
    pub fn as_str(self) -> &'static str {
        match self {
            FactorName::G1 => "g1",
            FactorName::G2 => "g2",
            FactorName::H1 => "h1",
            FactorName::H2 => "h2",
            FactorName::H11 => "h11",
            FactorName::H12 => "h12",
            FactorName::G21 => "g21",
            FactorName::G22 => "g22",
            FactorName::Q1 => "q1",
            FactorName::Q2 => "q2",
            FactorName::V1 => "v1",
            FactorName::V2 => "v2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        use FactorName::*;
        [G1, G2, H1, H2, H11, H12, G21, G22, Q1, Q2, V1, V2]
            .into_iter()
            .find(|n| n.as_str() == s)
    }
}

impl fmt::Display for FactorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorPoly {
    pub name: FactorName,
    #[serde(with = "crate::json::vec_rat")]
    pub coeffs: Vec<Rational>,
    #[serde(with = "crate::json::opt_int", default)]
    pub m: Option<Integer>,
    #[serde(with = "crate::json::opt_int", default)]
    pub s: Option<Integer>,
}

impl FactorPoly {
    pub fn poly(&self) -> Poly {
        Poly(self.coeffs.clone())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.poly().eval(x)
    }

    /// Value at `x` of the reduction mod `p`; `None` if a denominator vanishes.
    pub fn eval_mod(&self, x: u64, p: u64) -> Option<u64> {
        let coeffs = self.coeffs_mod(p)?;
        Some(eval_mod_coeffs(&coeffs, x, p))
    }

    pub fn coeffs_mod(&self, p: u64) -> Option<Vec<u64>> {
        self.coeffs.iter().map(|c| rational_mod(c, p)).collect()
    }

    /// Discriminant of a quadratic factor.
    pub fn discriminant(&self) -> Option<Rational> {
        if self.degree() != 2 {
            return None;
        }
        let (c0, c1, c2) = (&self.coeffs[0], &self.coeffs[1], &self.coeffs[2]);
        Some(Rational::from(c1 * c1) - Rational::from(c0 * c2) * 4u32)
    }
}

pub(crate) fn eval_mod_coeffs(coeffs: &[u64], x: u64, p: u64) -> u64 {
    let mut acc: u128 = 0;
    for &c in coeffs.iter().rev() {
        acc = (acc * x as u128 + c as u128) % p as u128;
    }
    acc as u64
}

/// `q mod p`, or `None` when `p` divides the denominator.
pub fn rational_mod(q: &Rational, p: u64) -> Option<u64> {
    let pi = Integer::from(p);
    let d = Integer::from(q.denom() % &pi);
    if d == 0 {
        return None;
    }
    let inv = d.invert(&pi).ok()?;
    let n = Integer::from(q.numer() % &pi);
    let mut v = n * inv % &pi;
    if v < 0 {
        v += &pi;
    }
    v.to_u64()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// `c = -m^2`, so `f` is reducible.
    NegSquare {
        #[serde(with = "crate::json::int")]
        m: Integer,
    },
    /// `c = 4m^2(m^2-1)`, so `f` is irreducible but `f^2` splits.
    TwoStep {
        #[serde(with = "crate::json::int")]
        m: Integer,
    },
}

/// Recognises the two reducible shapes. `c = -1` (m = 1) is excluded.
pub fn reducible_shape(c: &Integer) -> Option<Shape> {
    if *c < 0 {
        let m = exact_sqrt(&Integer::from(-c))?;
        return (m >= 2).then_some(Shape::NegSquare { m });
    }
    if *c <= 0 {
        return None;
    }
    let k = exact_sqrt(&Integer::from(c + 1))?;
    if k.is_even() {
        return None;
    }
    let m = exact_sqrt(&Integer::from((k + 1u32) / 2u32))?;
    (m >= 2).then_some(Shape::TwoStep { m })
}

/// `s` with `m + 1 = s^2`, if any.
pub fn s_param(m: &Integer) -> Option<Integer> {
    exact_sqrt(&Integer::from(m + 1u32))
}

/// `r` with `s^3 - s + 1 = r^2`, if any.
pub fn r_param(s: &Integer) -> Option<Integer> {
    let v = Integer::from(s * s) * s - s + 1u32;
    exact_sqrt(&v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductIdentity {
    pub lhs: String,
    pub factors: (FactorName, FactorName),
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    #[serde(with = "crate::json::int")]
    pub c: Integer,
    pub shape: Shape,
    pub factors: Vec<FactorPoly>,
    pub identities: Vec<ProductIdentity>,
}

impl Pattern {
    pub fn get(&self, name: FactorName) -> Option<&FactorPoly> {
        self.factors.iter().find(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<FactorName> {
        self.factors.iter().map(|f| f.name).collect()
    }
}

fn rat(n: impl Into<Integer>, d: impl Into<Integer>) -> Rational {
    Rational::from((n.into(), d.into()))
}

fn linear(name: FactorName, root: Rational, m: &Integer, s: Option<&Integer>) -> FactorPoly {
    FactorPoly {
        name,
        coeffs: vec![-root, Rational::from(1)],
        m: Some(m.clone()),
        s: s.cloned(),
    }
}

fn quadratic(name: FactorName, c1: Rational, c0: Rational, m: &Integer) -> FactorPoly {
    FactorPoly {
        name,
        coeffs: vec![c0, c1, Rational::from(1)],
        m: Some(m.clone()),
        s: None,
    }
}

fn identity(
    lhs: &str,
    expected: &Poly,
    a: &FactorPoly,
    b: &FactorPoly,
) -> ProductIdentity {
    ProductIdentity {
        lhs: lhs.to_string(),
        factors: (a.name, b.name),
        holds: a.poly().mul(&b.poly()) == *expected,
    }
}

/// All named factors for a reducible shape, with product identities checked.
pub fn build_pattern(c: &Integer) -> Result<Pattern> {
    let shape = reducible_shape(c).ok_or_else(|| {
        Error::Domain(format!("neither f nor f^2 is reducible for c = {c}"))
    })?;
    let f = f_poly(c);
    let mut factors = Vec::new();
    let mut identities = Vec::new();
    match &shape {
        Shape::NegSquare { m } => {
            let g1 = linear(FactorName::G1, rat(1, m.clone()), m, None);
            let g2 = linear(FactorName::G2, rat(-1, m.clone()), m, None);
            identities.push(identity("f", &f, &g1, &g2));
            if let Some(s) = s_param(m) {
                let h1 = linear(FactorName::H1, rat(s.clone(), m.clone()), m, Some(&s));
                let h2 = linear(FactorName::H2, -rat(s.clone(), m.clone()), m, Some(&s));
                identities.push(identity("g1(f)", &g1.poly().compose(&f), &h1, &h2));
                if let Some(r) = r_param(&s) {
                    let h11 = linear(FactorName::H11, rat(r.clone(), m.clone()), m, Some(&s));
                    let h12 = linear(FactorName::H12, -rat(r, m.clone()), m, Some(&s));
                    identities.push(identity("h1(f)", &h1.poly().compose(&f), &h11, &h12));
                    factors.extend([g1.clone(), g2.clone(), h1, h2, h11, h12]);
                } else {
                    factors.extend([g1.clone(), g2.clone(), h1, h2]);
                }
            } else {
                factors.extend([g1.clone(), g2.clone()]);
            }
            if *m == 4 {
                let g21 = quadratic(FactorName::G21, rat(-1, 1), rat(7, 16), m);
                let g22 = quadratic(FactorName::G22, rat(1, 1), rat(7, 16), m);
                let lhs = g2.poly().compose(&f.compose(&f));
                identities.push(identity("g2(f^2)", &lhs, &g21, &g22));
                factors.extend([g21, g22]);
            }
        }
        Shape::TwoStep { m } => {
            let m2 = Integer::from(m * m);
            let k = rat(Integer::from(&m2 * 2u32) - 1u32, Integer::from(c.clone()));
            let q1 = quadratic(FactorName::Q1, -rat(1, m.clone()), k.clone(), m);
            let q2 = quadratic(FactorName::Q2, rat(1, m.clone()), k, m);
            identities.push(identity("f^2", &f.compose(&f), &q1, &q2));
            factors.extend([q1, q2.clone()]);
            if *m == 2 {
                let v1 = quadratic(FactorName::V1, rat(-1, 2), rat(19, 48), m);
                let v2 = quadratic(FactorName::V2, rat(1, 2), rat(19, 48), m);
                identities.push(identity("q2(f)", &q2.poly().compose(&f), &v1, &v2));
                factors.extend([v1, v2]);
            }
        }
    }
    if let Some(bad) = identities.iter().find(|i| !i.holds) {
        return Err(Error::Inconsistent(format!(
            "product identity {} = {}*{} fails for c = {c}",
            bad.lhs, bad.factors.0, bad.factors.1
        )));
    }
    Ok(Pattern {
        c: c.clone(),
        shape,
        factors,
        identities,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obstruction {
    pub factor: FactorName,
    pub n: u32,
    #[serde(with = "crate::json::rat")]
    pub value: Rational,
}

/// `g(f^n(0))`; `n = 0` gives `g(0)`.
pub fn eval_at_orbit(g: &FactorPoly, c: &Integer, n: u32) -> Result<Rational> {
    if n == 0 {
        return Ok(g.eval(&Rational::new()));
    }
    let x = orbit_point(c, n)?.value;
    Ok(g.eval(&x))
}

/// The rational whose non-squareness gives irreducibility of `g(f^n)`.
pub fn obstruction(g: &FactorPoly, c: &Integer, n: u32) -> Result<Obstruction> {
    if n == 0 {
        return Err(Error::Domain("obstruction index starts at 1".into()));
    }
    let mut value = eval_at_orbit(g, c, n)?;
    if n == 1 && g.degree() % 2 == 1 {
        value = -value;
    }
    Ok(Obstruction {
        factor: g.name,
        n,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(v: i64) -> Integer {
        Integer::from(v)
    }

    #[test]
    fn m4_pattern() {
        let p = build_pattern(&z(-16)).unwrap();
        assert_eq!(
            p.names(),
            vec![FactorName::G1, FactorName::G2, FactorName::G21, FactorName::G22]
        );
        assert!(p.identities.iter().all(|i| i.holds));
        assert_eq!(p.get(FactorName::G21).unwrap().poly().to_string(), "x^2 - x + 7/16");
    }

    #[test]
    fn c48_pattern() {
        let p = build_pattern(&z(48)).unwrap();
        assert_eq!(
            p.names(),
            vec![FactorName::Q1, FactorName::Q2, FactorName::V1, FactorName::V2]
        );
        assert_eq!(p.get(FactorName::V1).unwrap().poly().to_string(), "x^2 - 1/2*x + 19/48");
    }

    #[test]
    fn s2_pattern() {
        let p = build_pattern(&z(-9)).unwrap();
        let h1 = p.get(FactorName::H1).unwrap();
        assert_eq!(h1.coeffs[0], rat(-2, 3));
        assert!(p.get(FactorName::H11).is_none());
    }

    #[test]
    fn special_s_values_split_h1() {
        for (s, r) in [(3, 5), (5, 11), (56, 419)] {
            let m = s * s - 1;
            let p = build_pattern(&z(-(m * m))).unwrap();
            let h11 = p.get(FactorName::H11).unwrap();
            assert_eq!(h11.coeffs[0], rat(-r, m));
        }
    }

    #[test]
    fn rejects_irreducible_shapes() {
        for c in [2, 5, -2, -5, 8, 47, -1, 0] {
            assert!(build_pattern(&z(c)).is_err(), "c = {c}");
        }
    }

    #[test]
    fn worked_obstructions() {
        let p = build_pattern(&z(-16)).unwrap();
        let g2 = p.get(FactorName::G2).unwrap();
        let o = obstruction(g2, &z(-16), 2).unwrap();
        assert_eq!(o.value, rat(49, 256));
        let g21 = p.get(FactorName::G21).unwrap();
        assert_eq!(obstruction(g21, &z(-16), 1).unwrap().value, rat(129, 256));

        let c = z(-(24 * 24));
        let p = build_pattern(&c).unwrap();
        let h11 = p.get(FactorName::H11).unwrap();
        let o = obstruction(h11, &c, 1).unwrap();
        assert_eq!(o.value.numer(), &z(5 * 53));
    }

    #[test]
    fn orbit_evaluation() {
        let p = build_pattern(&z(-4)).unwrap();
        let g1 = p.get(FactorName::G1).unwrap();
        let g2 = p.get(FactorName::G2).unwrap();
        assert_eq!(eval_at_orbit(g1, &z(-4), 1).unwrap(), rat(-3, 4));
        assert_eq!(eval_at_orbit(g2, &z(-4), 1).unwrap(), rat(1, 4));
        assert_eq!(eval_at_orbit(g1, &z(-4), 0).unwrap(), rat(-1, 2));
    }

    #[test]
    fn identities_for_many_m() {
        for m in 2i64..=200 {
            let c = z(-(m * m));
            let p = build_pattern(&c).unwrap();
            assert!(p.identities.iter().all(|i| i.holds));
            let c = z(4 * m * m * (m * m - 1));
            let p = build_pattern(&c).unwrap();
            assert!(p.identities.iter().all(|i| i.holds));
        }
    }

    #[test]
    fn modular_reduction() {
        let q = rat(7, 16);
        let v = rational_mod(&q, 11).unwrap();
        assert_eq!(v * 16 % 11, 7);
        assert_eq!(rational_mod(&q, 2), None);
        assert_eq!(rational_mod(&rat(-1, 3), 5), Some(3));
    }
}

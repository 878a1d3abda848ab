//! Integral points on the handful of curves whose point sets decide the
//! exceptional parameters. The point lists are shipped as data; a bounded
//! brute-force search confirms them up to a height, which is a sanity
//! check and not a proof.

use std::fmt;
use std::str::FromStr;

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::bigratseq::exact_sqrt;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CurveId {
    /// `y^2 = x^3 - x^2 + 1`
    E184,
    /// `y^2 = x^3 - x + 1`
    E92,
    /// `y^2 = 8x^6 - 12x^4 - 4x^3 + 4x^2 + 4x + 1`
    G2,
    /// `y^2 = x^7 + x^6 + 2x^5 + 5x^4 + 6x^3 + 6x^2 + 4x + 1`
    H3,
    /// `y^2 = 8m^6 - 12m^4 + 4m^3 + 4m^2 - 4m + 1`
    Hyp6Plus,
    /// `y^2 = 8m^6 - 12m^4 - 4m^3 + 4m^2 + 4m + 1`
    Hyp6Minus,
}

pub const ALL_CURVES: [CurveId; 6] = [
    CurveId::E184,
    CurveId::E92,
    CurveId::G2,
    CurveId::H3,
    CurveId::Hyp6Plus,
    CurveId::Hyp6Minus,
];

impl CurveId {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveId::E184 => "E184",
            CurveId::E92 => "E92",
            CurveId::G2 => "G2",
            CurveId::H3 => "H3",
            CurveId::Hyp6Plus => "HYP6+",
            CurveId::Hyp6Minus => "HYP6-",
        }
    }

    /// Coefficients of the right-hand side, constant term first.
    pub fn coeffs(self) -> &'static [i64] {
        match self {
            CurveId::E184 => &[1, 0, -1, 1],
            CurveId::E92 => &[1, -1, 0, 1],
            CurveId::G2 | CurveId::Hyp6Minus => &[1, 4, 4, -4, -12, 0, 8],
            CurveId::H3 => &[1, 4, 6, 6, 5, 2, 1, 1],
            CurveId::Hyp6Plus => &[1, -4, 4, 4, -12, 0, 8],
        }
    }

    /// The x-coordinates of all integral points (all rational points for
    /// `G2`, `H3` and the `HYP6` pair), as established by descent/Chabauty.
    pub fn known_x(self) -> &'static [i64] {
        match self {
            CurveId::E184 => &[0, 1, 4],
            CurveId::E92 => &[-1, 0, 1, 3, 5, 56],
            CurveId::G2 | CurveId::Hyp6Minus => &[-2, -1, 0, 1],
            CurveId::H3 => &[-1, 0],
            CurveId::Hyp6Plus => &[-1, 0, 1, 2],
        }
    }

    pub fn rhs(self, x: &Integer) -> Integer {
        let mut acc = Integer::new();
        for &a in self.coeffs().iter().rev() {
            acc *= x;
            acc += a;
        }
        acc
    }

    pub fn is_x_coordinate(self, x: &Integer) -> bool {
        exact_sqrt(&self.rhs(x)).is_some()
    }
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CurveId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase().replace("PLUS", "+").replace("MINUS", "-");
        ALL_CURVES
            .into_iter()
            .find(|c| c.as_str() == up)
            .ok_or_else(|| Error::Parse(format!("unknown curve {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvePoint {
    #[serde(with = "crate::json::int")]
    pub x: Integer,
    /// The non-negative square root.
    #[serde(with = "crate::json::int")]
    pub y: Integer,
}

/// All integral points with `|x| <= height`, `y >= 0`, in increasing `x`.
pub fn curve_point_search(id: CurveId, height: u64) -> Vec<CurvePoint> {
    let h = Integer::from(height);
    let mut x = Integer::from(-&h);
    let mut out = Vec::new();
    while x <= h {
        if let Some(y) = exact_sqrt(&id.rhs(&x)) {
            out.push(CurvePoint { x: x.clone(), y });
        }
        x += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FactStatus {
    /// Taken from the literature only.
    PaperFact,
    /// Literature list reproduced exactly by a search to this height.
    SearchConfirmed { height: u64 },
    /// The search disagrees with the shipped list.
    SearchMismatch { height: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveFact {
    pub curve: CurveId,
    pub known_x: Vec<i64>,
    #[serde(flatten)]
    pub status: FactStatus,
}

impl CurveFact {
    pub fn paper(curve: CurveId) -> Self {
        CurveFact { curve, known_x: curve.known_x().to_vec(), status: FactStatus::PaperFact }
    }

    /// Upgrades to `SearchConfirmed` when the search reproduces the list.
    pub fn checked(curve: CurveId, height: u64) -> Self {
        let found: Vec<i64> = curve_point_search(curve, height)
            .into_iter()
            .map(|p| p.x.to_i64().expect("x within i64"))
            .collect();
        let expected: Vec<i64> =
            curve.known_x().iter().copied().filter(|x| x.unsigned_abs() <= height).collect();
        let status = if found == expected {
            FactStatus::SearchConfirmed { height }
        } else {
            FactStatus::SearchMismatch { height }
        };
        CurveFact { curve, known_x: curve.known_x().to_vec(), status }
    }

    pub fn contains(&self, x: &Integer) -> bool {
        x.to_i64().is_some_and(|v| self.known_x.contains(&v))
    }
}

//! Iterates of `f(x) = x^2 + 1/c` over the rationals.
//!
//! The crate computes the critical orbit numerators `a_n(c)`, builds the
//! named factor patterns of small iterates, searches for modular sieve
//! certificates, evaluates the analytic bounds that cap the index of a
//! possible square `a_n(c)`, and runs the two-dimensional lattice
//! escalation that proves `a_p(c)` is never a square for huge ranges of `c`.
//! [`classifier::verify`] ties these together into per-`c` reports.

pub mod bigratseq;
pub mod classifier;
pub mod curves;
mod error;
pub mod factor;
pub mod interval;
pub mod latticever;
pub mod json;
pub mod modsieve;
pub mod orbitdensity;
pub mod polyfactors;
pub mod stabbounds;

pub use error::{Error, Result};
pub use rug::{Integer, Rational};

//! Standard-normal primitives.
//!
//! Every valuation in the model reduces to the standard normal density,
//! its distribution function and the expected excess `E[(X - a)^+]` of a
//! standard normal variable over a threshold.

use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// `1 / sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain("Probability::new", format!("{value} not in [0, 1]")))
        }
    }

    pub(crate) fn clamped(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn finite(op: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(op, format!("non-finite input {x}")))
    }
}

#[inline]
pub(crate) fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation.
#[inline]
pub(crate) fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
pub(crate) fn excess(a: f64) -> f64 {
    (pdf(a) - a * sf(a)).max(0.0)
}

/// Inverse of the standard normal distribution function on `(0, 1)`.
pub(crate) fn quantile(p: f64) -> f64 {
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // the seed is only good to ~1e-12; polish on whichever tail is smaller
    for _ in 0..2 {
        let d = pdf(x);
        if !(x.is_finite() && d > 0.0) {
            break;
        }
        let r = if x < 0.0 { cdf(x) - p } else { (1.0 - p) - sf(x) };
        x -= r / d;
    }
    x
}

/// Standard normal density `exp(-x^2 / 2) / sqrt(2 pi)`.
pub fn std_normal_pdf(x: f64) -> Result<f64> {
    finite("std_normal_pdf", x).map(pdf)
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> Result<Probability> {
    finite("std_normal_cdf", x).map(|x| Probability::clamped(cdf(x)))
}

/// `∫_a^∞ x φ(x) dx`, which equals `φ(a)`.
pub fn upper_partial_expectation(a: f64) -> Result<f64> {
    finite("upper_partial_expectation", a).map(pdf)
}

/// `∫_a^∞ (x - a) φ(x) dx = φ(a) - a (1 - Φ(a))`.
///
/// Nonnegative and strictly decreasing in `a`, with derivative `-(1 - Φ(a))`.
pub fn expected_excess(a: f64) -> Result<f64> {
    finite("expected_excess", a).map(excess)
}

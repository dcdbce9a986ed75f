use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::DemandProfile;
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Uniform on the open interval `(0, 1)` from 53 random bits.
#[inline]
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Estimates the valuation by simulating period demand
/// `D ~ Normal(tμ, √t σ)` and averaging the overage `(D - tq)^+`.
/// Normals come from the inverse distribution function, so a fixed seed
/// reproduces the estimate exactly on one build.
pub fn monte_carlo_valuation(
    profile: &DemandProfile,
    sigma: f64,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::precondition("monte_carlo_valuation", "need at least one sample"));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain("monte_carlo_valuation", format!("period must be > 0, got {t}")));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::domain("monte_carlo_valuation", format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mean, sd, cap) = (t * profile.mu(), t.sqrt() * sigma, t * profile.q());
    // Welford keeps the variance stable for long runs
    let (mut m, mut s2) = (0.0f64, 0.0f64);
    for k in 1..=samples {
        let d = mean + sd * special::quantile(open_unit(&mut rng));
        let x = (d - cap).max(0.0);
        let delta = x - m;
        m += delta / k as f64;
        s2 += delta * (x - m);
    }
    let var = if samples > 1 { s2 / (samples - 1) as f64 } else { 0.0 };
    let a = profile.alpha();
    Ok(McEstimate {
        estimate: a * (profile.mu() - m / t),
        std_error: a * (var / samples as f64).sqrt() / t,
        samples,
    })
}

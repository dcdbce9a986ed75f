//! Consumer-type populations.
//!
//! Discrete markets list their types and head counts. Continuous markets
//! carry a density on a bounded support `[σ_min, σ_max]`; the exponential
//! and normal families are truncated to that support and renormalized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{self, Probability};

/// `3 - 2√2`, the bound on the type-curvature term in the unimodality
/// condition for the boundary objectives.
pub const UNIMODALITY_CONSTANT: f64 = 3.0 - 2.0 * std::f64::consts::SQRT_2;

/// Strictly ascending types with a positive head count each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMarket {
    types: Vec<f64>,
    counts: Vec<f64>,
}

impl DiscreteMarket {
    pub fn new(types: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::invalid("market.types", "at least one type is required"));
        }
        if types.len() != counts.len() {
            return Err(Error::invalid(
                "market.counts",
                format!("{} counts for {} types", counts.len(), types.len()),
            ));
        }
        if let Some(i) = types.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid(format!("market.types[{i}]"), "type must be finite and >= 0"));
        }
        if let Some(i) = types.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("market.types[{}]", i + 1), "types must be strictly ascending"));
        }
        if let Some(i) = counts.iter().position(|n| !(n.is_finite() && *n > 0.0)) {
            return Err(Error::invalid(format!("market.counts[{i}]"), "count must be finite and > 0"));
        }
        Ok(DiscreteMarket { types, counts })
    }

    pub fn types(&self) -> &[f64] {
        &self.types
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Density family of a continuous type distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    Uniform { lo: f64, hi: f64 },
    TruncatedExponential { rate: f64, lo: f64, hi: f64 },
    /// Parent normal `N(mean, std²)` truncated to `[lo, hi]`.
    TruncatedNormal { mean: f64, std: f64, lo: f64, hi: f64 },
}

impl Density {
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Density::Uniform { lo, hi }
            | Density::TruncatedExponential { lo, hi, .. }
            | Density::TruncatedNormal { lo, hi, .. } => (lo, hi),
        }
    }
}

/// Continuous consumer population of total size `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousMarket {
    total_n: f64,
    density: Density,
    /// Normalizing mass of the truncated family.
    mass: f64,
}

/// Outcome of a grid check of the unimodality condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnimodalityReport {
    pub holds: bool,
    pub min_slack: f64,
    pub argmin: f64,
    pub grid_points: usize,
}

/// `Φ(z2) - Φ(z1)` for `z1 <= z2`, computed on the side of the mean with
/// less cancellation.
fn normal_mass(z1: f64, z2: f64) -> f64 {
    if z1 > 0.0 {
        special::sf(z1) - special::sf(z2)
    } else {
        special::cdf(z2) - special::cdf(z1)
    }
}

impl ContinuousMarket {
    pub fn new(total_n: f64, density: Density) -> Result<Self> {
        if !(total_n.is_finite() && total_n > 0.0) {
            return Err(Error::invalid("market.total_n", format!("must be finite and > 0, got {total_n}")));
        }
        let (lo, hi) = density.support();
        if !(lo.is_finite() && lo >= 0.0) {
            return Err(Error::invalid("market.sigma_min", format!("must be finite and >= 0, got {lo}")));
        }
        if !(hi.is_finite() && hi > lo) {
            return Err(Error::invalid("market.sigma_max", format!("must exceed sigma_min ({lo}), got {hi}")));
        }
        let mass = match density {
            Density::Uniform { .. } => hi - lo,
            Density::TruncatedExponential { rate, .. } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(Error::invalid("market.rate", format!("must be finite and > 0, got {rate}")));
                }
                -(-rate * (hi - lo)).exp_m1()
            }
            Density::TruncatedNormal { mean, std, .. } => {
                if !mean.is_finite() {
                    return Err(Error::invalid("market.mean", "must be finite"));
                }
                if !(std.is_finite() && std > 0.0) {
                    return Err(Error::invalid("market.std", format!("must be finite and > 0, got {std}")));
                }
                let m = normal_mass((lo - mean) / std, (hi - mean) / std);
                if m <= 1e-300 {
                    return Err(Error::invalid("market", "truncation interval carries no probability mass"));
                }
                m
            }
        };
        Ok(ContinuousMarket { total_n, density, mass })
    }

    pub fn uniform(total_n: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(total_n, Density::Uniform { lo, hi })
    }

    pub fn exponential(total_n: f64, rate: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(total_n, Density::TruncatedExponential { rate, lo, hi })
    }

    pub fn truncated_normal(total_n: f64, mean: f64, std: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(total_n, Density::TruncatedNormal { mean, std, lo, hi })
    }

    pub fn total_n(&self) -> f64 {
        self.total_n
    }

    pub fn density(&self) -> Density {
        self.density
    }

    pub fn support(&self) -> (f64, f64) {
        self.density.support()
    }

    pub fn sigma_min(&self) -> f64 {
        self.support().0
    }

    pub fn sigma_max(&self) -> f64 {
        self.support().1
    }

    fn in_support(&self, op: &'static str, sigma: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if sigma.is_finite() && sigma >= lo && sigma <= hi {
            Ok(())
        } else {
            Err(Error::domain(op, format!("sigma {sigma} outside support [{lo}, {hi}]")))
        }
    }

    #[inline]
    pub(crate) fn g(&self, sigma: f64) -> f64 {
        match self.density {
            Density::Uniform { .. } => 1.0 / self.mass,
            Density::TruncatedExponential { rate, lo, .. } => rate * (-rate * (sigma - lo)).exp() / self.mass,
            Density::TruncatedNormal { mean, std, .. } => special::pdf((sigma - mean) / std) / (std * self.mass),
        }
    }

    #[inline]
    pub(crate) fn big_g(&self, sigma: f64) -> f64 {
        let raw = match self.density {
            Density::Uniform { lo, .. } => (sigma - lo) / self.mass,
            Density::TruncatedExponential { rate, lo, .. } => -(-rate * (sigma - lo)).exp_m1() / self.mass,
            Density::TruncatedNormal { mean, std, lo, .. } => {
                normal_mass((lo - mean) / std, (sigma - mean) / std) / self.mass
            }
        };
        raw.clamp(0.0, 1.0)
    }

    #[inline]
    pub(crate) fn g_sigma(&self, sigma: f64) -> f64 {
        match self.density {
            Density::Uniform { .. } => 0.0,
            Density::TruncatedExponential { rate, .. } => -rate * self.g(sigma),
            Density::TruncatedNormal { mean, std, .. } => -(sigma - mean) / (std * std) * self.g(sigma),
        }
    }

    /// Type at cumulative probability `p`, by bisection on `G`.
    pub(crate) fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if p <= 0.0 {
            return lo;
        }
        if p >= 1.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.big_g(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Density `g(σ)`.
    pub fn pdf(&self, sigma: f64) -> Result<f64> {
        self.in_support("pdf", sigma)?;
        Ok(self.g(sigma))
    }

    /// Distribution function `G(σ)`, with `G(σ_min) = 0` and `G(σ_max) = 1`.
    pub fn cdf(&self, sigma: f64) -> Result<Probability> {
        self.in_support("cdf", sigma)?;
        Ok(Probability::clamped(self.big_g(sigma)))
    }

    /// Density slope `g'(σ)`.
    pub fn pdf_dsigma(&self, sigma: f64) -> Result<f64> {
        self.in_support("pdf_dsigma", sigma)?;
        Ok(self.g_sigma(sigma))
    }

    /// Number of consumers with type in `[lo, hi]`.
    pub fn count_between(&self, lo: f64, hi: f64) -> Result<f64> {
        self.in_support("count_between", lo)?;
        self.in_support("count_between", hi)?;
        if lo > hi {
            return Err(Error::domain("count_between", format!("unordered bounds {lo} > {hi}")));
        }
        Ok(self.total_n * (self.big_g(hi) - self.big_g(lo)))
    }

    /// Slack of the unimodality condition at `σ`:
    /// `(2g² - g'G)/g - (3 - 2√2) G / σ`, the second term dropped at `σ = 0`.
    /// The condition holds where the slack is nonnegative.
    pub fn unimodality_condition(&self, sigma: f64) -> Result<f64> {
        self.in_support("unimodality_condition", sigma)?;
        let g = self.g(sigma);
        if g <= 0.0 {
            return Err(Error::domain("unimodality_condition", format!("density vanishes at {sigma}")));
        }
        let big = self.big_g(sigma);
        let lead = (2.0 * g * g - self.g_sigma(sigma) * big) / g;
        if sigma == 0.0 {
            Ok(lead)
        } else {
            Ok(lead - UNIMODALITY_CONSTANT / sigma * big)
        }
    }

    /// Evaluates the condition on `grid_points` evenly spaced types covering
    /// the support and reports the smallest slack.
    pub fn verify_unimodality(&self, grid_points: usize) -> Result<UnimodalityReport> {
        if grid_points < 2 {
            return Err(Error::precondition("verify_unimodality", "need at least two grid points"));
        }
        let (lo, hi) = self.support();
        let step = (hi - lo) / (grid_points - 1) as f64;
        let mut min_slack = f64::INFINITY;
        let mut argmin = lo;
        for i in 0..grid_points {
            let sigma = if i + 1 == grid_points { hi } else { lo + step * i as f64 };
            let slack = self.unimodality_condition(sigma)?;
            if slack < min_slack {
                min_slack = slack;
                argmin = sigma;
            }
        }
        Ok(UnimodalityReport {
            holds: min_slack >= -1e-10,
            min_slack,
            argmin,
            grid_points,
        })
    }
}

/// Either kind of consumer population.
#[derive(Debug, Clone)]
pub enum Market {
    Discrete(DiscreteMarket),
    Continuous(ContinuousMarket),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn markets() -> Vec<ContinuousMarket> {
        vec![
            ContinuousMarket::uniform(1.0, 0.0, 6.0).unwrap(),
            ContinuousMarket::uniform(3.0, 1.0, 4.0).unwrap(),
            ContinuousMarket::exponential(1.0, 0.5, 0.0, 6.0).unwrap(),
            ContinuousMarket::exponential(1.0, 2.0, 0.5, 6.0).unwrap(),
            ContinuousMarket::truncated_normal(1.0, 3.0, 1.0, 0.0, 6.0).unwrap(),
            ContinuousMarket::truncated_normal(1.0, 5.0, 1.0, 0.0, 6.0).unwrap(),
            ContinuousMarket::truncated_normal(1.0, 1.0, 1.0, 0.0, 6.0).unwrap(),
        ]
    }

    #[test]
    fn discrete_market_validation() {
        assert!(DiscreteMarket::new(vec![0.1, 0.7], vec![1.0, 1.0]).is_ok());
        assert!(DiscreteMarket::new(vec![0.7, 0.1], vec![1.0, 1.0]).is_err());
        assert!(DiscreteMarket::new(vec![0.1, 0.1], vec![1.0, 1.0]).is_err());
        assert!(DiscreteMarket::new(vec![0.1, 0.7], vec![1.0, 0.0]).is_err());
        assert!(DiscreteMarket::new(vec![0.1], vec![1.0, 2.0]).is_err());
        assert!(DiscreteMarket::new(vec![], vec![]).is_err());
    }

    #[test]
    fn continuous_market_validation() {
        assert!(ContinuousMarket::uniform(1.0, 2.0, 2.0).is_err());
        assert!(ContinuousMarket::uniform(1.0, -1.0, 2.0).is_err());
        assert!(ContinuousMarket::uniform(0.0, 0.0, 2.0).is_err());
        assert!(ContinuousMarket::exponential(1.0, 0.0, 0.0, 2.0).is_err());
        assert!(ContinuousMarket::truncated_normal(1.0, 3.0, -1.0, 0.0, 6.0).is_err());
    }

    #[test]
    fn examples() {
        let u = ContinuousMarket::uniform(1.0, 0.0, 6.0).unwrap();
        assert_eq!(u.cdf(3.0).unwrap().value(), 0.5);
        assert!(u.cdf(6.5).is_err());
        assert!(u.pdf(-0.1).is_err());
        let tn = ContinuousMarket::truncated_normal(1.0, 3.0, 1.0, 0.0, 6.0).unwrap();
        assert!((tn.cdf(6.0).unwrap().value() - 1.0).abs() < 1e-15);
        assert_eq!(tn.cdf(0.0).unwrap().value(), 0.0);

        // Untruncated exponential slope: -λ² e^{-λσ}.
        let lam = 0.5;
        let e = ContinuousMarket::exponential(1.0, lam, 0.0, 200.0).unwrap();
        for &s in &[0.0, 1.0, 3.0] {
            let want = -lam * lam * (-lam * s).exp();
            assert!((e.pdf_dsigma(s).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn count_between_examples() {
        let u = ContinuousMarket::uniform(1.0, 0.0, 6.0).unwrap();
        assert!((u.count_between(0.0, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(u.count_between(2.5, 2.5).unwrap(), 0.0);
        assert!(u.count_between(3.0, 2.0).is_err());
        let e = ContinuousMarket::exponential(1.0, 0.5, 0.0, 6.0).unwrap();
        assert!((e.count_between(0.0, 6.0).unwrap() - 1.0).abs() < 1e-15);
        let a = e.count_between(0.0, 1.7).unwrap() + e.count_between(1.7, 4.2).unwrap();
        assert!((a - e.count_between(0.0, 4.2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn densities_integrate_to_one_and_match_cdf() {
        for m in markets() {
            let (lo, hi) = m.support();
            let total = simpson(|s| m.g(s), lo, hi, 20_000);
            assert!((total - 1.0).abs() < 1e-8, "{m:?}");
            assert!(m.big_g(lo).abs() < 1e-10);
            assert!((m.big_g(hi) - 1.0).abs() < 1e-10);
            let mid = 0.3 * lo + 0.7 * hi;
            let partial = simpson(|s| m.g(s), lo, mid, 20_000);
            assert!((partial - m.big_g(mid)).abs() < 1e-10);
            let mut prev = 0.0;
            for i in 0..=500 {
                let s = lo + (hi - lo) * i as f64 / 500.0;
                assert!(m.g(s) > 0.0);
                let c = m.big_g(s);
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn slope_matches_finite_differences() {
        for m in markets() {
            let (lo, hi) = m.support();
            for i in 1..20 {
                let s = lo + (hi - lo) * i as f64 / 20.0;
                let h = 1e-5;
                let fd = (m.g(s + h) - m.g(s - h)) / (2.0 * h);
                let exact = m.g_sigma(s);
                let scale = exact.abs().max(1e-3 * m.g(s));
                assert!((fd - exact).abs() <= 1e-6 * scale, "{m:?} s={s} {fd} {exact}");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for m in markets() {
            for &p in &[0.0, 0.1, 0.5, 0.9, 1.0] {
                assert!((m.big_g(m.quantile(p)) - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unimodality_examples() {
        for &lam in &[0.25, 0.5, 1.0, 3.0] {
            let e = ContinuousMarket::exponential(1.0, lam, 0.0, 6.0).unwrap();
            // Truncation rescales g and G by the same factor, which cancels
            // in the leading term only after multiplying back by the mass.
            let lead = e.unimodality_condition(0.0).unwrap() * e.mass;
            assert!((lead - 2.0 * lam).abs() < 1e-12);
        }
        let u = ContinuousMarket::uniform(1.0, 0.0, 6.0).unwrap();
        for i in 0..=60 {
            assert!(u.unimodality_condition(0.1 * i as f64).unwrap() >= 0.0);
        }
        let tn = ContinuousMarket::truncated_normal(1.0, 3.0, 1.5, 0.0, 6.0).unwrap();
        for i in 1..=59 {
            assert!(tn.unimodality_condition(0.1 * i as f64).unwrap() >= 0.0);
        }
        assert!(u.unimodality_condition(7.0).is_err());
    }

    #[test]
    fn unimodality_reports() {
        for m in [
            ContinuousMarket::uniform(1.0, 0.0, 6.0).unwrap(),
            ContinuousMarket::exponential(1.0, 0.5, 0.0, 6.0).unwrap(),
            ContinuousMarket::truncated_normal(1.0, 3.0, 1.0, 0.0, 6.0).unwrap(),
        ] {
            let r = m.verify_unimodality(1000).unwrap();
            assert!(r.holds, "{m:?} {r:?}");
            assert_eq!(r.grid_points, 1000);
        }
        let u = ContinuousMarket::uniform(1.0, 0.0, 6.0).unwrap();
        assert!(u.verify_unimodality(1).is_err());
    }

    #[test]
    fn variance_ratio_bound() {
        // t Δq² (σ² - t Δq²) / (σ³ (σ² + t Δq²)) <= (3 - 2√2) / σ, with the
        // maximum at t Δq² = (√2 - 1) σ².
        let f = |x: f64, s: f64| x * (s * s - x) / (s * s * s * (s * s + x));
        for i in 1..60 {
            let s = 0.1 * i as f64;
            for j in 0..400 {
                let x = 0.05 * j as f64;
                assert!(f(x, s) <= UNIMODALITY_CONSTANT / s + 1e-15);
            }
            let peak = (std::f64::consts::SQRT_2 - 1.0) * s * s;
            assert!((f(peak, s) - UNIMODALITY_CONSTANT / s).abs() < 1e-12 / s);
        }
    }

    #[test]
    fn exponential_ratio_lower_bound() {
        for i in 1..2000 {
            let x = i as f64 * 0.01;
            assert!(x / -(-x).exp_m1() >= 1.0);
        }
    }
}

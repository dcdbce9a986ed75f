//! Economic primitives: consumer valuation of a period, SP cost, per-item
//! profit, consumer utility and social surplus.
//!
//! A type-`σ` consumer's demand over a period of length `t` is normal with
//! mean `t μ` and standard deviation `√t σ`. Demand above the cap `t q` goes
//! unmet, so the per-unit-period valuation is
//! `V(σ, t) = α (μ - (σ / √t) E[(Z - a)^+])` with `a = √t (q - μ) / σ`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{excess, pdf};

/// Valuation parameters shared by every consumer in the market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    alpha: f64,
    mu: f64,
    q: f64,
}

impl DemandProfile {
    pub fn new(alpha: f64, mu: f64, q: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be finite and > 0, got {alpha}")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::invalid("mu", format!("must be finite and > 0, got {mu}")));
        }
        if !q.is_finite() || q < mu {
            return Err(Error::invalid("q", format!("data cap must satisfy q >= mu ({mu}), got {q}")));
        }
        Ok(DemandProfile { alpha, mu, q })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Cap headroom `q - μ`.
    pub fn delta_q(&self) -> f64 {
        self.q - self.mu
    }

    #[inline]
    pub(crate) fn unmet(&self, sigma: f64, t: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        let st = t.sqrt();
        (sigma / st) * excess(st * self.delta_q() / sigma)
    }

    #[inline]
    pub(crate) fn v(&self, sigma: f64, t: f64) -> f64 {
        self.alpha * (self.mu - self.unmet(sigma, t))
    }

    /// Standardized cap threshold `a = √t Δq / σ` and its density `φ(a)`,
    /// for `σ > 0`.
    #[inline]
    fn phi_at(&self, sigma: f64, t: f64) -> f64 {
        pdf(t.sqrt() * self.delta_q() / sigma)
    }

    #[inline]
    pub(crate) fn v_t(&self, sigma: f64, t: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        self.alpha * sigma * self.phi_at(sigma, t) / (2.0 * t.powf(1.5))
    }

    #[inline]
    pub(crate) fn v_sigma(&self, sigma: f64, t: f64) -> f64 {
        if sigma <= 0.0 {
            return -self.alpha * self.limit_phi() / t.sqrt();
        }
        -self.alpha * self.phi_at(sigma, t) / t.sqrt()
    }

    #[inline]
    pub(crate) fn v_sigma_t(&self, sigma: f64, t: f64) -> f64 {
        let dq = self.delta_q();
        if sigma <= 0.0 {
            return self.alpha * self.limit_phi() / (2.0 * t.powf(1.5));
        }
        let phi = self.phi_at(sigma, t);
        phi * (self.alpha / (2.0 * t.sqrt())) * (1.0 / t + dq * dq / (sigma * sigma))
    }

    /// `φ(a)` in the limit `σ → 0+`: the threshold diverges unless `q = μ`.
    fn limit_phi(&self) -> f64 {
        if self.delta_q() > 0.0 {
            0.0
        } else {
            pdf(0.0)
        }
    }
}

/// Standard deviation `σ ≥ 0` of a consumer's per-unit-period demand.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ConsumerType(f64);

impl ConsumerType {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(ConsumerType(sigma))
        } else {
            Err(Error::invalid("sigma", format!("must be finite and >= 0, got {sigma}")))
        }
    }

    pub fn sigma(self) -> f64 {
        self.0
    }
}

/// One menu entry: a period length and its unit-period price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractItem {
    pub t: f64,
    pub pi: f64,
}

impl ContractItem {
    pub fn new(t: f64, pi: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid("t", format!("period must be finite and > 0, got {t}")));
        }
        if !pi.is_finite() {
            return Err(Error::invalid("pi", format!("price must be finite, got {pi}")));
        }
        Ok(ContractItem { t, pi })
    }
}

/// Time-specific part `W(t)` of the SP's per-unit-period cost.
#[derive(Clone)]
pub enum TimeCost {
    /// `W(t) = c1 t`.
    Affine { c1: f64 },
    /// User supplied nondecreasing convex function.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for TimeCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeCost::Affine { c1 } => f.debug_struct("Affine").field("c1", c1).finish(),
            TimeCost::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// SP cost per unit period, `C(t) = W(t) + C0`.
#[derive(Debug, Clone)]
pub struct CostModel {
    c0: f64,
    time_cost: TimeCost,
}

impl CostModel {
    pub fn affine(c0: f64, c1: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::invalid("cost.c0", format!("must be finite and >= 0, got {c0}")));
        }
        if !(c1.is_finite() && c1 >= 0.0) {
            return Err(Error::invalid("cost.c1", format!("must be finite and >= 0, got {c1}")));
        }
        Ok(CostModel {
            c0,
            time_cost: TimeCost::Affine { c1 },
        })
    }

    /// Builds a cost model from an arbitrary `W`. Monotonicity and convexity
    /// are spot-checked by finite differences on `(0, horizon]`.
    pub fn custom<F>(c0: f64, w: F, horizon: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::invalid("cost.c0", format!("must be finite and >= 0, got {c0}")));
        }
        const POINTS: usize = 400;
        let h = horizon / POINTS as f64;
        let vals: Vec<f64> = (0..=POINTS).map(|i| w((i as f64 + 0.5) * h)).collect();
        if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("cost.W", format!("non-finite at t = {}", (bad as f64 + 0.5) * h)));
        }
        for (i, pair) in vals.windows(2).enumerate() {
            if pair[1] < pair[0] - 1e-12 * pair[0].abs().max(1.0) {
                return Err(Error::invalid("cost.W", format!("decreasing near t = {}", (i as f64 + 1.0) * h)));
            }
        }
        for (i, tri) in vals.windows(3).enumerate() {
            let second = tri[0] - 2.0 * tri[1] + tri[2];
            if second < -1e-9 * tri[1].abs().max(1.0) {
                return Err(Error::invalid("cost.W", format!("not convex near t = {}", (i as f64 + 1.5) * h)));
            }
        }
        Ok(CostModel {
            c0,
            time_cost: TimeCost::Custom(Arc::new(w)),
        })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Slope of an affine cost model, `None` for custom `W`.
    pub fn c1(&self) -> Option<f64> {
        match self.time_cost {
            TimeCost::Affine { c1 } => Some(c1),
            TimeCost::Custom(_) => None,
        }
    }

    #[inline]
    pub(crate) fn at(&self, t: f64) -> f64 {
        let w = match &self.time_cost {
            TimeCost::Affine { c1 } => c1 * t,
            TimeCost::Custom(f) => f(t),
        };
        w + self.c0
    }
}

fn check_period(op: &'static str, t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("period must be finite and > 0, got {t}")))
    }
}

fn check_sigma(op: &'static str, sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("type must be finite and >= 0, got {sigma}")))
    }
}

/// A derivative value that may be a one-sided limit at `σ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub at_limit: bool,
}

/// Per-unit-period valuation `V(σ, t)`; equals `α μ` at `σ = 0`.
pub fn valuation(profile: &DemandProfile, sigma: f64, t: f64) -> Result<f64> {
    check_period("valuation", t)?;
    check_sigma("valuation", sigma)?;
    Ok(profile.v(sigma, t))
}

/// Average unmet demand per unit period, in data units.
pub fn unsatisfied_demand(profile: &DemandProfile, sigma: f64, t: f64) -> Result<f64> {
    check_period("unsatisfied_demand", t)?;
    check_sigma("unsatisfied_demand", sigma)?;
    Ok(profile.unmet(sigma, t))
}

/// `∂V/∂t = α σ φ(a) / (2 t^1.5)`.
pub fn valuation_dt(profile: &DemandProfile, sigma: f64, t: f64) -> Result<f64> {
    check_period("valuation_dt", t)?;
    check_sigma("valuation_dt", sigma)?;
    Ok(profile.v_t(sigma, t))
}

/// `∂V/∂σ = -α φ(a) / √t`.
pub fn valuation_dsigma(profile: &DemandProfile, sigma: f64, t: f64) -> Result<Derivative> {
    check_period("valuation_dsigma", t)?;
    check_sigma("valuation_dsigma", sigma)?;
    Ok(Derivative {
        value: profile.v_sigma(sigma, t),
        at_limit: sigma == 0.0,
    })
}

/// `∂²V/∂σ∂t = φ(a) (α / (2 √t)) (1/t + Δq² / σ²)`.
pub fn valuation_dsigma_dt(profile: &DemandProfile, sigma: f64, t: f64) -> Result<Derivative> {
    check_period("valuation_dsigma_dt", t)?;
    check_sigma("valuation_dsigma_dt", sigma)?;
    Ok(Derivative {
        value: profile.v_sigma_t(sigma, t),
        at_limit: sigma == 0.0,
    })
}

/// `∂²V/∂t²` by central differences of the analytic slope, step `1e-5 max(t, 1)`.
pub fn valuation_dtt(profile: &DemandProfile, sigma: f64, t: f64) -> Result<f64> {
    check_period("valuation_dtt", t)?;
    check_sigma("valuation_dtt", sigma)?;
    // central difference of the closed-form slope; differencing V twice
    // loses everything to cancellation
    let h = (1e-5 * t.max(1.0)).min(0.5 * t);
    Ok((profile.v_t(sigma, t + h) - profile.v_t(sigma, t - h)) / (2.0 * h))
}

pub fn cost(model: &CostModel, t: f64) -> Result<f64> {
    check_period("cost", t)?;
    Ok(model.at(t))
}

/// Unit-period profit `π - C(t)` of one item.
pub fn item_profit(item: &ContractItem, model: &CostModel) -> f64 {
    item.pi - model.at(item.t)
}

pub fn consumer_utility(profile: &DemandProfile, sigma: f64, item: &ContractItem) -> f64 {
    profile.v(sigma, item.t) - item.pi
}

/// Valuation minus cost: the joint surplus of a consumer and the SP.
pub fn social_surplus(profile: &DemandProfile, model: &CostModel, sigma: f64, t: f64) -> Result<f64> {
    check_period("social_surplus", t)?;
    check_sigma("social_surplus", sigma)?;
    Ok(profile.v(sigma, t) - model.at(t))
}

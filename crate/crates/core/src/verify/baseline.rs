use serde::Serialize;

use crate::continuous::GroupedSolution;
use crate::discrete::{PERIOD_MAX, PERIOD_MIN};
use crate::distribution::{ContinuousMarket, DiscreteMarket, Market};
use crate::error::{Error, Result};
use crate::market::{CostModel, DemandProfile};
use crate::optimize::{golden_section, maximize_scan};

/// How the single baseline item is priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Priced at the valuation of the highest type, so everyone buys.
    ServeAll,
    /// Price and marginal type chosen to maximize profit.
    Optimized,
}

/// A one-item menu with a frozen period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baseline {
    pub kind: BaselineKind,
    pub period: f64,
    pub price: f64,
    /// Highest type that still buys.
    pub marginal_type: f64,
    pub served: f64,
    pub served_fraction: f64,
    pub profit: f64,
}

fn check_fixed(op: &'static str, t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("fixed period must be > 0, got {t}")))
    }
}

fn make(kind: BaselineKind, t: f64, sigma: f64, served: f64, total: f64, profile: &DemandProfile, cost: &CostModel) -> Baseline {
    let price = profile.v(sigma, t);
    Baseline {
        kind,
        period: t,
        price,
        marginal_type: sigma,
        served,
        served_fraction: served / total,
        profit: served * (price - cost.at(t)),
    }
}

/// Profit-maximizing single item at period `t_fixed`. Discrete markets
/// search the cutoff type; continuous ones maximize `N G(σ)(V(σ, t) - C(t))`.
pub fn fixed_period_baseline(market: &Market, profile: &DemandProfile, cost: &CostModel, t_fixed: f64) -> Result<Baseline> {
    check_fixed("fixed_period_baseline", t_fixed)?;
    let kind = BaselineKind::Optimized;
    Ok(match market {
        Market::Discrete(m) => {
            let mut served = 0.0;
            let mut best: Option<Baseline> = None;
            for (&s, &n) in m.types().iter().zip(m.counts()) {
                served += n;
                let b = make(kind, t_fixed, s, served, m.total(), profile, cost);
                if best.as_ref().is_none_or(|x| b.profit > x.profit) {
                    best = Some(b);
                }
            }
            best.expect("markets are non-empty")
        }
        Market::Continuous(m) => {
            let (lo, hi) = m.support();
            let f = |s: f64| m.total_n() * m.big_g(s) * (profile.v(s, t_fixed) - cost.at(t_fixed));
            let s = maximize_scan(f, lo, hi, 2000).argmax;
            make(kind, t_fixed, s, m.total_n() * m.big_g(s), m.total_n(), profile, cost)
        }
    })
}

/// Single item at period `t_fixed` priced so that every type buys.
pub fn serve_all_baseline(market: &Market, profile: &DemandProfile, cost: &CostModel, t_fixed: f64) -> Result<Baseline> {
    check_fixed("serve_all_baseline", t_fixed)?;
    let kind = BaselineKind::ServeAll;
    Ok(match market {
        Market::Discrete(m) => {
            let top = m.types()[m.len() - 1];
            make(kind, t_fixed, top, m.total(), m.total(), profile, cost)
        }
        Market::Continuous(m) => make(kind, t_fixed, m.sigma_max(), m.total_n(), m.total_n(), profile, cost),
    })
}

/// Period maximizing the joint surplus `V(σ, t) - C(t)` of one type.
pub fn social_optimal_period(profile: &DemandProfile, cost: &CostModel, sigma: f64) -> f64 {
    golden_section(|t| profile.v(sigma, t) - cost.at(t), PERIOD_MIN, PERIOD_MAX).argmax
}

fn best_surplus(profile: &DemandProfile, cost: &CostModel, sigma: f64) -> f64 {
    let t = social_optimal_period(profile, cost, sigma);
    profile.v(sigma, t) - cost.at(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SocialMetrics {
    /// Joint surplus of SP and consumers under the menu.
    pub surplus_contract: f64,
    /// Joint surplus when every type gets its surplus-maximizing period.
    pub surplus_max: f64,
    pub ratio: f64,
}

pub fn social_metrics_discrete(
    periods: &[f64],
    market: &DiscreteMarket,
    profile: &DemandProfile,
    cost: &CostModel,
) -> Result<SocialMetrics> {
    if periods.len() != market.len() {
        return Err(Error::precondition("social_metrics", "one period per type required"));
    }
    let mut sc = 0.0;
    let mut so = 0.0;
    for ((&s, &n), &t) in market.types().iter().zip(market.counts()).zip(periods) {
        sc += n * (profile.v(s, t) - cost.at(t));
        so += n * best_surplus(profile, cost, s);
    }
    Ok(SocialMetrics { surplus_contract: sc, surplus_max: so, ratio: sc / so })
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Continuous analogue: served types contribute `V(σ, t_k) - C(t_k)` for
/// their group's period, weighted by the density; types above the top
/// boundary contribute nothing under the menu.
pub fn social_metrics_grouped(
    solution: &GroupedSolution,
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
) -> SocialMetrics {
    let n = market.total_n();
    let (lo, hi) = market.support();
    let mut sc = 0.0;
    let mut below = lo;
    for (&b, &t) in solution.boundaries.iter().zip(&solution.periods) {
        sc += n * simpson(|s| market.g(s) * (profile.v(s, t) - cost.at(t)), below, b, 400);
        below = b;
    }
    let so = n * simpson(|s| market.g(s) * best_surplus(profile, cost, s), lo, hi, 1000);
    SocialMetrics { surplus_contract: sc, surplus_max: so, ratio: sc / so }
}

/// Menu profit against each baseline, plus surplus efficiency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub optimal_profit: f64,
    pub baselines: Vec<(String, Baseline)>,
    pub social: SocialMetrics,
}

impl ComparisonReport {
    /// `100 (optimal / baseline - 1)` per labelled baseline.
    pub fn uplift_percent(&self) -> Vec<(String, f64)> {
        self.baselines
            .iter()
            .map(|(l, b)| (l.clone(), 100.0 * (self.optimal_profit / b.profit - 1.0)))
            .collect()
    }

    pub fn uplift(&self, label: &str) -> Option<f64> {
        self.uplift_percent().into_iter().find(|(l, _)| l == label).map(|(_, u)| u)
    }
}

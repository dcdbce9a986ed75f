//! Optimal menus for a finite set of consumer types.
//!
//! With the periods fixed, the profit-maximizing prices make the top type
//! indifferent to participating and every other type indifferent to the
//! next-longer item. Substituting those prices splits total profit into
//! per-type terms `P_i(t_i)`, each concave in its own period, so the menu is
//! found by maximizing each term and pooling any descending runs.

use std::ops::Range;

use log::warn;
use serde::Serialize;

use crate::distribution::DiscreteMarket;
use crate::error::{Error, Result};
use crate::market::{ContractItem, CostModel, DemandProfile};
use crate::optimize::maximize_concave;
use crate::pooling::repair_monotone;

/// Admissible period range searched by the solvers, in unit periods.
pub const PERIOD_MIN: f64 = 1e-4;
pub const PERIOD_MAX: f64 = 600.0;

/// Optimal menu for a discrete market, one item per type.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteSolution {
    pub periods: Vec<f64>,
    pub prices: Vec<f64>,
    /// Per-type maximizers before pooling.
    pub candidates: Vec<f64>,
    pub per_type_objective: Vec<f64>,
    pub total_profit: f64,
    pub pooled_blocks: Vec<Range<usize>>,
    /// Set when some optimum sits on `PERIOD_MAX`.
    pub upper_bound_binding: bool,
}

impl DiscreteSolution {
    pub fn items(&self) -> Vec<ContractItem> {
        self.periods
            .iter()
            .zip(&self.prices)
            .map(|(&t, &pi)| ContractItem { t, pi })
            .collect()
    }
}

pub(crate) fn check_ascending(op: &'static str, what: &str, xs: &[f64]) -> Result<()> {
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::precondition(op, format!("{what}[{i}] is not finite")));
    }
    if let Some(i) = xs.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::precondition(
            op,
            format!("{what} must be ascending: {} > {} at index {}", xs[i], xs[i + 1], i + 1),
        ));
    }
    Ok(())
}

/// Price chain for ascending periods `periods` offered to ascending types
/// `types`: `π_I = V(σ_I, t_I)`, `π_i = π_{i+1} + V(σ_i, t_i) - V(σ_i, t_{i+1})`.
pub(crate) fn price_chain(profile: &DemandProfile, types: &[f64], periods: &[f64]) -> Vec<f64> {
    let n = periods.len();
    let mut prices = vec![0.0; n];
    if n == 0 {
        return prices;
    }
    prices[n - 1] = profile.v(types[n - 1], periods[n - 1]);
    for i in (0..n - 1).rev() {
        prices[i] = prices[i + 1] + (profile.v(types[i], periods[i]) - profile.v(types[i], periods[i + 1]));
    }
    prices
}

/// Profit-maximizing prices for fixed ascending periods.
pub fn optimal_prices(periods: &[f64], market: &DiscreteMarket, profile: &DemandProfile) -> Result<Vec<f64>> {
    if periods.len() != market.len() {
        return Err(Error::precondition(
            "optimal_prices",
            format!("{} periods for {} types", periods.len(), market.len()),
        ));
    }
    check_ascending("optimal_prices", "periods", periods)?;
    if let Some(i) = periods.iter().position(|&t| t <= 0.0) {
        return Err(Error::precondition("optimal_prices", format!("periods[{i}] must be > 0")));
    }
    Ok(price_chain(profile, market.types(), periods))
}

/// `P_i(t) = N_i (V(σ_i, t) - C(t)) + (V(σ_i, t) - V(σ_{i-1}, t)) Σ_{n<i} N_n`.
#[inline]
pub(crate) fn objective_term(
    profile: &DemandProfile,
    cost: &CostModel,
    sigma: f64,
    sigma_below: Option<f64>,
    count: f64,
    count_below: f64,
    t: f64,
) -> f64 {
    let v = profile.v(sigma, t);
    let info_rent = match sigma_below {
        Some(s) if count_below > 0.0 => (v - profile.v(s, t)) * count_below,
        _ => 0.0,
    };
    count * (v - cost.at(t)) + info_rent
}

/// Per-type share `P_i(t)` of total profit (zero-based `i`).
pub fn type_objective(
    i: usize,
    t: f64,
    market: &DiscreteMarket,
    profile: &DemandProfile,
    cost: &CostModel,
) -> Result<f64> {
    if i >= market.len() {
        return Err(Error::precondition("type_objective", format!("index {i} out of range")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain("type_objective", format!("period must be > 0, got {t}")));
    }
    let below: f64 = market.counts()[..i].iter().sum();
    let sigma_below = i.checked_sub(1).map(|j| market.types()[j]);
    Ok(objective_term(profile, cost, market.types()[i], sigma_below, market.counts()[i], below, t))
}

/// Maximizes each per-index concave objective over the period range and
/// pools descending runs. Shared by the discrete solver and the period
/// step of the grouped solver.
pub(crate) fn optimize_periods<F>(n: usize, objective: F) -> Result<(Vec<f64>, crate::pooling::Pooled)>
where
    F: Fn(usize, f64) -> f64,
{
    let candidates = (0..n)
        .map(|i| maximize_concave(|t| objective(i, t), PERIOD_MIN, PERIOD_MAX).map(|m| m.argmax))
        .collect::<Result<Vec<_>>>()?;
    let pooled = repair_monotone(&candidates, |range| {
        maximize_concave(|t| range.clone().map(|i| objective(i, t)).sum::<f64>(), PERIOD_MIN, PERIOD_MAX)
            .map(|m| m.argmax)
    })?;
    Ok((candidates, pooled))
}

/// Profit-maximizing feasible menu for a discrete market.
pub fn solve_discrete(market: &DiscreteMarket, profile: &DemandProfile, cost: &CostModel) -> Result<DiscreteSolution> {
    let types = market.types();
    let counts = market.counts();
    let below: Vec<f64> = counts
        .iter()
        .scan(0.0, |acc, &n| {
            let b = *acc;
            *acc += n;
            Some(b)
        })
        .collect();
    let objective = |i: usize, t: f64| {
        let sigma_below = i.checked_sub(1).map(|j| types[j]);
        objective_term(profile, cost, types[i], sigma_below, counts[i], below[i], t)
    };
    let (candidates, pooled) = optimize_periods(market.len(), objective)?;
    let periods = pooled.values;
    let upper_bound_binding = periods.iter().any(|&t| t >= PERIOD_MAX * (1.0 - 1e-9));
    if upper_bound_binding {
        warn!("period optimum reached the search bound {PERIOD_MAX}; the menu may be truncated");
    }
    let prices = price_chain(profile, types, &periods);
    let per_type_objective: Vec<f64> = periods.iter().enumerate().map(|(i, &t)| objective(i, t)).collect();
    let total_profit = counts
        .iter()
        .zip(&prices)
        .zip(&periods)
        .map(|((n, pi), &t)| n * (pi - cost.at(t)))
        .sum();
    Ok(DiscreteSolution {
        periods,
        prices,
        candidates,
        per_type_objective,
        total_profit,
        pooled_blocks: pooled.pooled_blocks,
        upper_bound_binding,
    })
}

/// The four conditions that together are equivalent to incentive
/// compatibility and participation for a discrete menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityCondition {
    /// `t_1 ≤ t_2 ≤ … ≤ t_I`.
    AscendingPeriods,
    /// `π_I ≤ V(σ_I, t_I)`.
    TopParticipation,
    /// `π_i ≥ π_{i+1} + V(σ_{i+1}, t_i) - V(σ_{i+1}, t_{i+1})`.
    UpwardIncentive,
    /// `π_i ≤ π_{i+1} + V(σ_i, t_i) - V(σ_i, t_{i+1})`.
    DownwardIncentive,
}

/// Result of checking a menu against the feasibility conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCertificate {
    pub passed: bool,
    /// First violated condition and the item index where it fails.
    pub violation: Option<(FeasibilityCondition, usize)>,
    /// Largest violation amount across all conditions.
    pub worst_violation: f64,
}

pub fn feasibility_check(
    contract: &[ContractItem],
    market: &DiscreteMarket,
    profile: &DemandProfile,
    tol: f64,
) -> Result<ConditionCertificate> {
    if contract.len() != market.len() {
        return Err(Error::precondition(
            "feasibility_check",
            format!("{} items for {} types", contract.len(), market.len()),
        ));
    }
    let types = market.types();
    let n = contract.len();
    let mut violation = None;
    let mut worst = 0.0f64;
    let mut record = |cond: FeasibilityCondition, idx: usize, amount: f64| {
        worst = worst.max(amount);
        if amount > tol && violation.is_none() {
            violation = Some((cond, idx));
        }
    };
    for i in 0..n.saturating_sub(1) {
        record(FeasibilityCondition::AscendingPeriods, i, contract[i].t - contract[i + 1].t);
    }
    let top = &contract[n - 1];
    record(FeasibilityCondition::TopParticipation, n - 1, top.pi - profile.v(types[n - 1], top.t));
    for i in 0..n.saturating_sub(1) {
        let (cur, next) = (&contract[i], &contract[i + 1]);
        let floor = next.pi + profile.v(types[i + 1], cur.t) - profile.v(types[i + 1], next.t);
        record(FeasibilityCondition::UpwardIncentive, i, floor - cur.pi);
    }
    for i in 0..n.saturating_sub(1) {
        let (cur, next) = (&contract[i], &contract[i + 1]);
        let ceiling = next.pi + profile.v(types[i], cur.t) - profile.v(types[i], next.t);
        record(FeasibilityCondition::DownwardIncentive, i, cur.pi - ceiling);
    }
    Ok(ConditionCertificate {
        passed: violation.is_none(),
        violation,
        worst_violation: worst,
    })
}

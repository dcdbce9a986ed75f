//! Grouped menus for a continuous type distribution.
//!
//! Consumers are split into `K` groups by upper boundaries
//! `σ_min ≤ σ_1 ≤ … ≤ σ_K ≤ σ_max`; group `k` gets one item `(t_k, π_k)` and
//! types above `σ_K` are not served. For fixed boundaries the problem has
//! the same structure as the discrete one (each boundary type plays the
//! role of a discrete type). For fixed periods the profit splits into
//! boundary terms `Q_k(σ_k)`, each depending on one boundary only. The
//! solver alternates between the two subproblems until the profit stalls.

use std::ops::Range;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discrete::{check_ascending, objective_term, optimize_periods, price_chain};
use crate::distribution::ContinuousMarket;
use crate::error::{Error, Result};
use crate::market::{ContractItem, CostModel, DemandProfile};
use crate::optimize::{maximize_scan, maximize_unimodal, Maximum};
use crate::pooling::{repair_monotone, Pooled};

/// Grid size for the fallback boundary search when unimodality of the
/// boundary objectives is not guaranteed.
pub const FALLBACK_SCAN_POINTS: usize = 2000;

/// Grouped menu together with solver diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct GroupedSolution {
    /// Upper type of each group.
    pub boundaries: Vec<f64>,
    pub periods: Vec<f64>,
    pub prices: Vec<f64>,
    pub per_group_counts: Vec<f64>,
    pub total_profit: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Profit after every completed alternation, starting with the first.
    pub profit_trace: Vec<f64>,
    /// False when the unimodality condition failed and the boundary search
    /// fell back to a dense scan.
    pub unimodality_guaranteed: bool,
    /// Indices `k` whose boundary ended on `σ_min` or `σ_max`.
    pub boundaries_at_support_edge: Vec<usize>,
    pub restart: usize,
}

impl GroupedSolution {
    pub fn groups(&self) -> usize {
        self.boundaries.len()
    }

    pub fn items(&self) -> Vec<ContractItem> {
        self.periods
            .iter()
            .zip(&self.prices)
            .map(|(&t, &pi)| ContractItem { t, pi })
            .collect()
    }

    /// Drops groups that hold no consumers. Prices of the remaining items
    /// are unchanged because an empty group's boundary coincides with its
    /// lower neighbour's.
    pub fn collapsed(&self) -> GroupedSolution {
        let keep: Vec<usize> = (0..self.groups()).filter(|&k| self.per_group_counts[k] > 0.0).collect();
        let pick = |xs: &[f64]| keep.iter().map(|&k| xs[k]).collect::<Vec<_>>();
        GroupedSolution {
            boundaries: pick(&self.boundaries),
            periods: pick(&self.periods),
            prices: pick(&self.prices),
            per_group_counts: pick(&self.per_group_counts),
            boundaries_at_support_edge: Vec::new(),
            ..self.clone()
        }
    }

    /// Index of the item a type-`σ` consumer is assigned to, or `None` for
    /// types above the top boundary.
    pub fn assigned_group(&self, sigma: f64) -> Option<usize> {
        self.boundaries.iter().position(|&b| sigma <= b)
    }
}

/// `N_k = N (G(σ_k) - G(σ_{k-1}))` with `σ_0 = σ_min`.
pub fn group_counts(market: &ContinuousMarket, boundaries: &[f64]) -> Result<Vec<f64>> {
    check_boundaries("group_counts", market, boundaries)?;
    Ok(counts_unchecked(market, boundaries))
}

fn counts_unchecked(market: &ContinuousMarket, boundaries: &[f64]) -> Vec<f64> {
    let n = market.total_n();
    let mut prev = 0.0;
    boundaries
        .iter()
        .map(|&b| {
            let g = market.big_g(b);
            let c = n * (g - prev).max(0.0);
            prev = g;
            c
        })
        .collect()
}

fn check_boundaries(op: &'static str, market: &ContinuousMarket, boundaries: &[f64]) -> Result<()> {
    if boundaries.is_empty() {
        return Err(Error::precondition(op, "at least one group is required"));
    }
    check_ascending(op, "boundaries", boundaries)?;
    let (lo, hi) = market.support();
    if boundaries[0] < lo || boundaries[boundaries.len() - 1] > hi {
        return Err(Error::precondition(op, format!("boundaries must lie in [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_periods(op: &'static str, periods: &[f64]) -> Result<()> {
    check_ascending(op, "periods", periods)?;
    if let Some(i) = periods.iter().position(|&t| t <= 0.0) {
        return Err(Error::precondition(op, format!("periods[{i}] must be > 0")));
    }
    Ok(())
}

/// Prices making each boundary type indifferent between its own item and
/// the next one, and the top boundary type indifferent to participating.
pub fn optimal_prices_grouped(boundaries: &[f64], periods: &[f64], profile: &DemandProfile) -> Result<Vec<f64>> {
    if boundaries.len() != periods.len() {
        return Err(Error::precondition(
            "optimal_prices_grouped",
            format!("{} boundaries for {} periods", boundaries.len(), periods.len()),
        ));
    }
    check_ascending("optimal_prices_grouped", "boundaries", boundaries)?;
    check_periods("optimal_prices_grouped", periods)?;
    Ok(price_chain(profile, boundaries, periods))
}

/// Total profit `Σ N_k (π_k - C(t_k))` of the grouped menu with chained prices.
pub fn grouped_profit(
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
    boundaries: &[f64],
    periods: &[f64],
) -> f64 {
    let prices = price_chain(profile, boundaries, periods);
    counts_unchecked(market, boundaries)
        .iter()
        .zip(&prices)
        .zip(periods)
        .map(|((n, pi), &t)| n * (pi - cost.at(t)))
        .sum()
}

#[inline]
fn group_term(
    k: usize,
    t: f64,
    boundaries: &[f64],
    counts: &[f64],
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
) -> f64 {
    let below = if k == 0 { None } else { Some(boundaries[k - 1]) };
    let count_below = below.map_or(0.0, |b| market.total_n() * market.big_g(b));
    objective_term(profile, cost, boundaries[k], below, counts[k], count_below, t)
}

/// Group `k`'s share of profit as a function of its period (zero-based `k`).
pub fn group_objective(
    k: usize,
    t: f64,
    boundaries: &[f64],
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
) -> Result<f64> {
    check_boundaries("group_objective", market, boundaries)?;
    if k >= boundaries.len() {
        return Err(Error::precondition("group_objective", format!("group {k} out of range")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain("group_objective", format!("period must be > 0, got {t}")));
    }
    let counts = counts_unchecked(market, boundaries);
    Ok(group_term(k, t, boundaries, &counts, market, profile, cost))
}

#[inline]
fn q_term(
    k: usize,
    sigma: f64,
    periods: &[f64],
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
) -> f64 {
    let mass = market.total_n() * market.big_g(sigma);
    let tk = periods[k];
    match periods.get(k + 1) {
        Some(&next) => {
            mass * (profile.v(sigma, tk) - profile.v(sigma, next) + cost.at(next) - cost.at(tk))
        }
        None => mass * (profile.v(sigma, tk) - cost.at(tk)),
    }
}

/// Boundary term `Q_k(σ)`: for `k < K`,
/// `N G(σ) (V(σ, t_k) - V(σ, t_{k+1}) + C(t_{k+1}) - C(t_k))`; for the top
/// group `N G(σ) (V(σ, t_K) - C(t_K))`. Total profit is `Σ_k Q_k(σ_k)`.
pub fn boundary_objective(
    k: usize,
    sigma: f64,
    periods: &[f64],
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
) -> Result<f64> {
    check_periods("boundary_objective", periods)?;
    if k >= periods.len() {
        return Err(Error::precondition("boundary_objective", format!("group {k} out of range")));
    }
    market.pdf(sigma).map_err(|_| {
        Error::domain("boundary_objective", format!("sigma {sigma} outside the type support"))
    })?;
    Ok(q_term(k, sigma, periods, market, profile, cost))
}

/// Marginal term `H_k` with `dQ_k/dσ = N g(σ) (H_k(σ) + C(t_{k+1}) - C(t_k))`:
/// `H_k = V(σ, t_k) - V(σ, t_{k+1}) + (G/g)(V_σ(σ, t_k) - V_σ(σ, t_{k+1}))`.
/// For the top group the next item is absent and
/// `dQ_K/dσ = N g(σ) (H_K(σ) - C(t_K))` with `H_K = V(σ, t_K) + (G/g) V_σ(σ, t_K)`.
pub fn h_function(
    k: usize,
    sigma: f64,
    periods: &[f64],
    profile: &DemandProfile,
    market: &ContinuousMarket,
) -> Result<f64> {
    check_periods("h_function", periods)?;
    if k >= periods.len() {
        return Err(Error::precondition("h_function", format!("group {k} out of range")));
    }
    let g = market.pdf(sigma)?;
    if g <= 0.0 {
        return Err(Error::domain("h_function", format!("density vanishes at {sigma}")));
    }
    let ratio = market.big_g(sigma) / g;
    let tk = periods[k];
    Ok(match periods.get(k + 1) {
        Some(&next) => {
            profile.v(sigma, tk) - profile.v(sigma, next)
                + ratio * (profile.v_sigma(sigma, tk) - profile.v_sigma(sigma, next))
        }
        None => profile.v(sigma, tk) + ratio * profile.v_sigma(sigma, tk),
    })
}

/// Period step: best ascending periods for fixed boundaries.
pub fn step1_periods(
    boundaries: &[f64],
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
) -> Result<Pooled> {
    check_boundaries("step1_periods", market, boundaries)?;
    let counts = counts_unchecked(market, boundaries);
    let (_, pooled) = optimize_periods(boundaries.len(), |k, t| {
        group_term(k, t, boundaries, &counts, market, profile, cost)
    })?;
    Ok(pooled)
}

/// Boundary step: best ascending boundaries for fixed periods. Descending
/// runs of per-group maximizers are pooled onto the maximizer of the summed
/// boundary terms.
pub fn step2_boundaries(
    periods: &[f64],
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
    unimodal: bool,
) -> Result<Pooled> {
    check_periods("step2_boundaries", periods)?;
    let (lo, hi) = market.support();
    let search = |range: Range<usize>| -> Maximum {
        let f = |s: f64| range.clone().map(|k| q_term(k, s, periods, market, profile, cost)).sum::<f64>();
        if unimodal {
            maximize_unimodal(f, lo, hi)
        } else {
            maximize_scan(f, lo, hi, FALLBACK_SCAN_POINTS)
        }
    };
    let candidates: Vec<f64> = (0..periods.len()).map(|k| search(k..k + 1).argmax).collect();
    repair_monotone(&candidates, |range| Ok(search(range).argmax))
}

/// How the first set of boundaries is chosen.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    /// `σ_k` at the `k/K` quantile of the type distribution.
    #[default]
    Quantile,
    Boundaries(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct AlternatingOptions {
    pub groups: usize,
    pub init: Init,
    /// Extra runs from random boundaries; the best run is reported.
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
}

impl AlternatingOptions {
    pub fn new(groups: usize) -> Self {
        AlternatingOptions {
            groups,
            init: Init::Quantile,
            restarts: 0,
            seed: 0,
            max_iterations: 200,
            relative_tolerance: 1e-10,
        }
    }
}

fn random_boundaries(market: &ContinuousMarket, groups: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut ps: Vec<f64> = (0..groups).map(|_| rng.gen::<f64>()).collect();
    ps.sort_by(f64::total_cmp);
    ps.into_iter().map(|p| market.quantile(p)).collect()
}

fn run_alternation(
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
    mut boundaries: Vec<f64>,
    opts: &AlternatingOptions,
    unimodal: bool,
    restart: usize,
) -> Result<GroupedSolution> {
    let mut trace = Vec::new();
    let mut periods = Vec::new();
    let mut converged = false;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        periods = step1_periods(&boundaries, market, profile, cost)?.values;
        boundaries = step2_boundaries(&periods, market, profile, cost, unimodal)?.values;
        let profit = grouped_profit(market, profile, cost, &boundaries, &periods);
        let previous = trace.last().copied();
        trace.push(profit);
        if let Some(prev) = previous {
            let slack = 1e-12 * f64::max(1.0, prev.abs());
            if profit < prev - slack {
                warn!("alternating maximization lost profit: {prev} -> {profit} at iteration {iterations}");
            }
        }
        if best.as_ref().is_none_or(|b| profit > b.0) {
            best = Some((profit, boundaries.clone(), periods.clone()));
        }
        if let Some(prev) = previous {
            if (profit - prev).abs() <= opts.relative_tolerance * f64::max(prev.abs(), f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }
    let (total_profit, boundaries, periods) = best.unwrap_or((f64::NEG_INFINITY, boundaries, periods));
    let prices = price_chain(profile, &boundaries, &periods);
    let per_group_counts = counts_unchecked(market, &boundaries);
    let (lo, hi) = market.support();
    let boundaries_at_support_edge = boundaries
        .iter()
        .enumerate()
        .filter(|(_, &b)| b <= lo || b >= hi)
        .map(|(k, _)| k)
        .collect();
    Ok(GroupedSolution {
        boundaries,
        periods,
        prices,
        per_group_counts,
        total_profit,
        iterations,
        converged,
        profit_trace: trace,
        unimodality_guaranteed: unimodal,
        boundaries_at_support_edge,
        restart,
    })
}

/// Alternating maximization over periods and group boundaries.
pub fn solve_alternating(
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
    opts: &AlternatingOptions,
) -> Result<GroupedSolution> {
    if opts.groups == 0 {
        return Err(Error::precondition("solve_alternating", "need at least one group"));
    }
    let unimodal = market.verify_unimodality(1000)?.holds;
    if !unimodal {
        warn!("type distribution fails the unimodality condition; boundary search falls back to a dense scan");
    }
    let first = match &opts.init {
        Init::Quantile => (1..=opts.groups)
            .map(|k| market.quantile(k as f64 / opts.groups as f64))
            .collect(),
        Init::Boundaries(b) => {
            if b.len() != opts.groups {
                return Err(Error::precondition(
                    "solve_alternating",
                    format!("{} initial boundaries for {} groups", b.len(), opts.groups),
                ));
            }
            check_boundaries("solve_alternating", market, b)?;
            b.clone()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![first];
    for _ in 0..opts.restarts {
        starts.push(random_boundaries(market, opts.groups, &mut rng));
    }
    let runs: Vec<Result<GroupedSolution>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, b)| run_alternation(market, profile, cost, b, opts, unimodal, i))
        .collect();
    let mut best: Option<GroupedSolution> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.total_profit > b.total_profit) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}

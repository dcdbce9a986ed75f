use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{ContinuousMarket, DiscreteMarket};
use crate::error::{Error, Result};
use crate::market::{CostModel, DemandProfile};

pub const DISCRETE_GRID_LIMIT: usize = 200;
pub const DISCRETE_TUPLE_LIMIT: f64 = 1e8;
/// Cap on `K · |boundary grid| · |period grid|` for the grouped search.
pub const GROUPED_CELL_LIMIT: f64 = 1e8;

/// `lo, lo + step, …` up to `hi` (inclusive up to rounding).
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn check_grid(op: &'static str, what: &str, g: &[f64], positive: bool) -> Result<()> {
    if g.is_empty() {
        return Err(Error::precondition(op, format!("{what} grid is empty")));
    }
    if g.iter().any(|x| !x.is_finite() || (positive && *x <= 0.0)) {
        return Err(Error::precondition(op, format!("{what} grid has invalid points")));
    }
    if g.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::precondition(op, format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

/// Best grid menu for a discrete market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteOracle {
    pub periods: Vec<f64>,
    pub prices: Vec<f64>,
    pub profit: f64,
    pub tuples_examined: u64,
}

fn n_choose_k_multiset(n: usize, k: usize) -> f64 {
    // number of non-decreasing k-tuples from n values
    (0..k).fold(1.0, |acc, j| acc * (n + j) as f64 / (j + 1) as f64)
}

/// Enumerates every non-decreasing period tuple on the grid, prices each
/// one with the binding-constraint price chain and keeps the best.
pub fn grid_oracle_discrete(
    market: &DiscreteMarket,
    profile: &DemandProfile,
    cost: &CostModel,
    period_grid: &[f64],
) -> Result<DiscreteOracle> {
    const OP: &str = "grid_oracle_discrete";
    let n_types = market.len();
    check_grid(OP, "period", period_grid, true)?;
    let tuples = n_choose_k_multiset(period_grid.len(), n_types);
    if n_types > 4 || period_grid.len() > DISCRETE_GRID_LIMIT || tuples > DISCRETE_TUPLE_LIMIT {
        return Err(Error::BudgetExceeded {
            size: format!("{n_types} types × {} grid points ({tuples:.3e} tuples)", period_grid.len()),
            limit: format!("≤ 4 types, ≤ {DISCRETE_GRID_LIMIT} grid points"),
        });
    }
    let types = market.types();
    let counts = market.counts();
    let value: Vec<Vec<f64>> = types
        .iter()
        .map(|&s| period_grid.iter().map(|&t| profile.v(s, t)).collect())
        .collect();
    let cost_at: Vec<f64> = period_grid.iter().map(|&t| cost.at(t)).collect();

    // Fix the top index, then walk downwards; prices follow the chain
    // π_i = π_{i+1} + V(σ_i, t_i) - V(σ_i, t_{i+1}).
    struct Walk<'a> {
        value: &'a [Vec<f64>],
        cost_at: &'a [f64],
        counts: &'a [f64],
        idx: Vec<usize>,
        best: (f64, Vec<usize>),
        examined: u64,
    }
    fn descend(w: &mut Walk, i: usize, next_idx: usize, next_price: f64, acc: f64) {
        for g in 0..=next_idx {
            let price = next_price + (w.value[i][g] - w.value[i][next_idx]);
            let total = acc + w.counts[i] * (price - w.cost_at[g]);
            w.idx[i] = g;
            if i == 0 {
                w.examined += 1;
                if total > w.best.0 {
                    w.best = (total, w.idx.clone());
                }
            } else {
                descend(w, i - 1, g, price, total);
            }
        }
    }
    let top = n_types - 1;
    let per_top: Vec<(f64, Vec<usize>, u64)> = (0..period_grid.len())
        .into_par_iter()
        .map(|g| {
            let price = value[top][g];
            let acc = counts[top] * (price - cost_at[g]);
            let mut idx = vec![0; n_types];
            idx[top] = g;
            if top == 0 {
                return (acc, idx, 1);
            }
            let mut w = Walk {
                value: &value,
                cost_at: &cost_at,
                counts,
                idx,
                best: (f64::NEG_INFINITY, Vec::new()),
                examined: 0,
            };
            descend(&mut w, top - 1, g, price, acc);
            (w.best.0, w.best.1, w.examined)
        })
        .collect();
    let examined = per_top.iter().map(|r| r.2).sum();
    let (profit, idx, _) = per_top
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new(), 0), |acc, r| if r.0 > acc.0 { r } else { acc });
    let periods: Vec<f64> = idx.iter().map(|&g| period_grid[g]).collect();
    let mut prices = vec![0.0; n_types];
    prices[top] = value[top][idx[top]];
    for i in (0..top).rev() {
        prices[i] = prices[i + 1] + (value[i][idx[i]] - value[i][idx[i + 1]]);
    }
    Ok(DiscreteOracle { periods, prices, profit, tuples_examined: examined })
}

/// Profit of a grouped menu with chained prices, computed from scratch:
/// group `k` holds `N (G(σ_k) - G(σ_{k-1}))` consumers paying `π_k`.
pub fn menu_profit(
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
    boundaries: &[f64],
    periods: &[f64],
) -> f64 {
    let k = boundaries.len();
    let mut price = profile.v(boundaries[k - 1], periods[k - 1]);
    let mut total = 0.0;
    for j in (0..k).rev() {
        if j < k - 1 {
            price += profile.v(boundaries[j], periods[j]) - profile.v(boundaries[j], periods[j + 1]);
        }
        let lower = if j == 0 { 0.0 } else { market.big_g(boundaries[j - 1]) };
        let count = market.total_n() * (market.big_g(boundaries[j]) - lower);
        total += count * (price - cost.at(periods[j]));
    }
    total
}

/// Best grouped configuration found on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedOracle {
    pub boundaries: Vec<f64>,
    pub periods: Vec<f64>,
    pub profit: f64,
    pub cells: u64,
}

/// Global optimum over non-decreasing boundary tuples × non-decreasing
/// period tuples on the given grids.
///
/// Profit splits into terms `A(σ_k, t_k) - A(σ_k, t_{k+1})` (and `A(σ_K, t_K)`
/// for the top group) with `A(σ, t) = N G(σ)(V(σ, t) - C(t))`, so the
/// exhaustive search collapses into a chain recursion with prefix maxima
/// over both axes. This is exact on the grid, not a heuristic.
pub fn grid_oracle_grouped(
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
    groups: usize,
    boundary_grid: &[f64],
    period_grid: &[f64],
) -> Result<GroupedOracle> {
    const OP: &str = "grid_oracle_grouped";
    check_grid(OP, "boundary", boundary_grid, false)?;
    check_grid(OP, "period", period_grid, true)?;
    let (lo, hi) = market.support();
    if boundary_grid[0] < lo || boundary_grid[boundary_grid.len() - 1] > hi {
        return Err(Error::precondition(OP, format!("boundary grid must lie in [{lo}, {hi}]")));
    }
    let (nb, nt) = (boundary_grid.len(), period_grid.len());
    let cells = (groups * nb * nt) as f64;
    if groups == 0 || groups > 3 || cells > GROUPED_CELL_LIMIT {
        return Err(Error::BudgetExceeded {
            size: format!("K={groups}, {nb} boundary × {nt} period points"),
            limit: format!("1 ≤ K ≤ 3, K·B·T ≤ {GROUPED_CELL_LIMIT:e}"),
        });
    }
    let a: Vec<f64> = boundary_grid
        .par_iter()
        .flat_map_iter(|&s| {
            let mass = market.total_n() * market.big_g(s);
            period_grid.iter().map(move |&t| mass * (profile.v(s, t) - cost.at(t)))
        })
        .collect();
    let at = |s: usize, t: usize| s * nt + t;

    // f[s·nt + t]: best value of the completed terms of groups below the
    // current one, given the current group sits at (s, t).
    let mut f = vec![0.0; nb * nt];
    let mut back_s: Vec<Vec<u32>> = Vec::new();
    let mut back_t: Vec<Vec<u32>> = Vec::new();
    for _ in 1..groups {
        // h(s', t) = max_{t' ≤ t} f(s', t') + A(s', t')
        let mut h = vec![0.0; nb * nt];
        let mut ht = vec![0u32; nb * nt];
        for s in 0..nb {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for t in 0..nt {
                let cand = f[at(s, t)] + a[at(s, t)];
                if cand > best {
                    best = cand;
                    arg = t;
                }
                h[at(s, t)] = best - a[at(s, t)];
                ht[at(s, t)] = arg as u32;
            }
        }
        // next f(s, t) = max_{s' ≤ s} h(s', t)
        let mut next = vec![0.0; nb * nt];
        let mut hs = vec![0u32; nb * nt];
        for t in 0..nt {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for s in 0..nb {
                if h[at(s, t)] > best {
                    best = h[at(s, t)];
                    arg = s;
                }
                next[at(s, t)] = best;
                hs[at(s, t)] = arg as u32;
            }
        }
        f = next;
        back_s.push(hs);
        back_t.push(ht);
    }
    let (mut s, mut t) = (0, 0);
    let mut best = f64::NEG_INFINITY;
    for si in 0..nb {
        for ti in 0..nt {
            let v = f[at(si, ti)] + a[at(si, ti)];
            if v > best {
                best = v;
                s = si;
                t = ti;
            }
        }
    }
    let mut bi = vec![s];
    let mut ti = vec![t];
    for level in (0..groups - 1).rev() {
        let s_prev = back_s[level][at(s, t)] as usize;
        let t_prev = back_t[level][at(s_prev, t)] as usize;
        s = s_prev;
        t = t_prev;
        bi.push(s);
        ti.push(t);
    }
    bi.reverse();
    ti.reverse();
    let boundaries: Vec<f64> = bi.iter().map(|&i| boundary_grid[i]).collect();
    let periods: Vec<f64> = ti.iter().map(|&i| period_grid[i]).collect();
    let profit = menu_profit(market, profile, cost, &boundaries, &periods);
    Ok(GroupedOracle { boundaries, periods, profit, cells: cells as u64 })
}

/// Local pattern search from a grid optimum: coordinate moves on single
/// variables and on runs of tied variables, halving the step down to
/// `1e-10`. Only ascending, in-support configurations are accepted.
pub fn polish_grouped(
    market: &ContinuousMarket,
    profile: &DemandProfile,
    cost: &CostModel,
    start: &GroupedOracle,
    initial_step: f64,
) -> GroupedOracle {
    let k = start.boundaries.len();
    let (lo, hi) = market.support();
    let mut x: Vec<f64> = start.boundaries.iter().chain(&start.periods).copied().collect();
    let eval = |x: &[f64]| menu_profit(market, profile, cost, &x[..k], &x[k..]);
    let valid = |x: &[f64]| {
        let (b, t) = x.split_at(k);
        b[0] >= lo
            && b[k - 1] <= hi
            && t[0] > 0.0
            && b.windows(2).all(|w| w[0] <= w[1])
            && t.windows(2).all(|w| w[0] <= w[1])
    };
    let mut best = eval(&x);
    let mut step = initial_step;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..2 * k {
            let block = if i < k { 0..k } else { k..2 * k };
            // the run of values tied with x[i] inside its own block
            let (mut a, mut b) = (i, i + 1);
            while a > block.start && x[a - 1] == x[i] {
                a -= 1;
            }
            while b < block.end && x[b] == x[i] {
                b += 1;
            }
            for range in [i..i + 1, a..b] {
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    for v in &mut y[range.clone()] {
                        *v += dir * step;
                    }
                    if valid(&y) {
                        let val = eval(&y);
                        if val > best {
                            best = val;
                            x = y;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    GroupedOracle {
        boundaries: x[..k].to_vec(),
        periods: x[k..].to_vec(),
        profit: best,
        cells: start.cells,
    }
}

//! Independent checks of solver output: brute-force incentive checks, grid
//! oracles, Monte Carlo valuation, fixed-period baselines and surplus
//! metrics.

mod baseline;
mod feasibility;
mod montecarlo;
mod oracle;

pub use baseline::{
    fixed_period_baseline, serve_all_baseline, social_metrics_discrete, social_metrics_grouped,
    social_optimal_period, Baseline, BaselineKind, ComparisonReport, SocialMetrics,
};
pub use feasibility::{
    brute_force_ic_ir, discrete_samples, grouped_samples, FeasibilityCertificate, ViolatingPair,
};
pub use montecarlo::{monte_carlo_valuation, McEstimate};
pub use oracle::{
    grid, grid_oracle_discrete, grid_oracle_grouped, menu_profit, polish_grouped, DiscreteOracle,
    GroupedOracle, DISCRETE_GRID_LIMIT, DISCRETE_TUPLE_LIMIT, GROUPED_CELL_LIMIT,
};

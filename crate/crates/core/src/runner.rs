//! End-to-end runs: solve a scenario, verify the menu, compare against
//! fixed-period baselines and write the result tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuous::{solve_alternating, AlternatingOptions, GroupedSolution};
use crate::discrete::{feasibility_check, solve_discrete, ConditionCertificate, DiscreteSolution};
use crate::distribution::{ContinuousMarket, Market, UnimodalityReport};
use crate::error::{Error, Result};
use crate::scenario::{Scenario, SolverSpec};
use crate::verify::{
    brute_force_ic_ir, discrete_samples, fixed_period_baseline, grid, grid_oracle_discrete, grid_oracle_grouped,
    grouped_samples, polish_grouped, serve_all_baseline, social_metrics_discrete, social_metrics_grouped, Baseline,
    ComparisonReport, FeasibilityCertificate,
};

/// Tolerance for the brute-force incentive check of emitted menus.
pub const IC_IR_TOLERANCE: f64 = 1e-9;
/// Uniform type draws used to check grouped menus.
pub const GROUPED_SAMPLES: usize = 500;

/// One row of `solution.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub group_index: usize,
    /// Type of a discrete item, or upper boundary of a group.
    pub sigma_boundary: f64,
    pub period: f64,
    pub price: f64,
    pub count: f64,
    /// Per-consumer margin `π - C(t)`.
    pub item_profit: f64,
}

#[derive(Debug, Clone)]
pub enum Solved {
    Discrete(DiscreteSolution),
    Grouped(GroupedSolution),
}

impl Solved {
    pub fn total_profit(&self) -> f64 {
        match self {
            Solved::Discrete(s) => s.total_profit,
            Solved::Grouped(s) => s.total_profit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub solved: Solved,
    pub rows: Vec<SolutionRow>,
    pub comparison: ComparisonReport,
    pub certificate: FeasibilityCertificate,
    /// `|Σ count · item_profit - reported profit|`.
    pub consistency_gap: f64,
    pub verified: bool,
}

#[derive(Debug, Serialize)]
struct CertificateFile<'a> {
    scenario: &'a str,
    verified: bool,
    ic_ir: &'a FeasibilityCertificate,
    consistency_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditions: Option<ConditionCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unimodality: Option<UnimodalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<SolverDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
struct SolverDiagnostics {
    groups: usize,
    iterations: usize,
    converged: bool,
    profit_trace_monotone: bool,
    unimodality_guaranteed: bool,
    boundaries_at_support_edge: Vec<usize>,
    restart: usize,
}

fn continuous(market: &Market) -> Option<&ContinuousMarket> {
    match market {
        Market::Continuous(m) => Some(m),
        Market::Discrete(_) => None,
    }
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn solve_grouped(scenario: &Scenario, groups: usize) -> Result<GroupedSolution> {
    let market = continuous(&scenario.market)
        .ok_or_else(|| Error::precondition("solve_grouped", "scenario market is discrete"))?;
    let SolverSpec::Continuous { restarts, seed, .. } = scenario.solver else {
        return Err(Error::precondition("solve_grouped", "scenario solver is discrete"));
    };
    let mut opts = AlternatingOptions::new(groups);
    opts.restarts = restarts;
    opts.seed = seed;
    solve_alternating(market, &scenario.profile, &scenario.cost, &opts)
}

/// Solves the scenario; continuous scenarios use their largest `K`.
pub fn solve(scenario: &Scenario) -> Result<Solved> {
    match &scenario.market {
        Market::Discrete(m) => solve_discrete(m, &scenario.profile, &scenario.cost).map(Solved::Discrete),
        Market::Continuous(_) => {
            let k = scenario.groups().expect("continuous scenarios carry K");
            solve_grouped(scenario, k).map(Solved::Grouped)
        }
    }
}

/// Name of a baseline period in reports.
pub fn baseline_label(t: f64) -> String {
    if t == 1.0 {
        "monthly".into()
    } else if t == 2.0 {
        "rollover".into()
    } else {
        format!("t={t}")
    }
}

/// Every requested period, priced to serve everyone and priced optimally.
pub fn baselines(scenario: &Scenario) -> Result<Vec<(String, Baseline)>> {
    let mut out = Vec::new();
    for &t in &scenario.baselines {
        let label = baseline_label(t);
        out.push((label.clone(), serve_all_baseline(&scenario.market, &scenario.profile, &scenario.cost, t)?));
        out.push((
            format!("{label}_optimized"),
            fixed_period_baseline(&scenario.market, &scenario.profile, &scenario.cost, t)?,
        ));
    }
    Ok(out)
}

fn rows_for(scenario: &Scenario, solved: &Solved) -> Vec<SolutionRow> {
    let cost = &scenario.cost;
    let make = |i: usize, s: f64, t: f64, pi: f64, n: f64| SolutionRow {
        group_index: i,
        sigma_boundary: s,
        period: t,
        price: pi,
        count: n,
        item_profit: pi - cost.at(t),
    };
    match (solved, &scenario.market) {
        (Solved::Discrete(sol), Market::Discrete(m)) => (0..m.len())
            .map(|i| make(i, m.types()[i], sol.periods[i], sol.prices[i], m.counts()[i]))
            .collect(),
        (Solved::Grouped(sol), _) => {
            let c = sol.collapsed();
            (0..c.groups())
                .map(|k| make(k, c.boundaries[k], c.periods[k], c.prices[k], c.per_group_counts[k]))
                .collect()
        }
        _ => unreachable!("solver matches market kind"),
    }
}

/// Brute-force IC/IR over market types or seeded uniform draws.
pub fn certify_rows(scenario: &Scenario, rows: &[SolutionRow]) -> Result<FeasibilityCertificate> {
    let items: Vec<_> = rows
        .iter()
        .map(|r| crate::market::ContractItem { t: r.period, pi: r.price })
        .collect();
    let samples = match &scenario.market {
        Market::Discrete(m) => {
            if rows.len() != m.len() {
                return Err(Error::precondition(
                    "certify",
                    format!("{} rows for {} market types", rows.len(), m.len()),
                ));
            }
            discrete_samples(m)
        }
        Market::Continuous(m) => {
            let b: Vec<f64> = rows.iter().map(|r| r.sigma_boundary).collect();
            grouped_samples(&b, m, GROUPED_SAMPLES, scenario.seed())
        }
    };
    brute_force_ic_ir(&items, &samples, &scenario.profile, IC_IR_TOLERANCE)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ComparisonRow {
    label: String,
    profit: f64,
    uplift_percent: Option<f64>,
    served_fraction: f64,
}

/// Solves, verifies and writes `solution.csv`, `comparison.csv`,
/// `certificate.json` and `summary.json` into `out_dir`. Files are written
/// even when verification fails; check [`RunArtifacts::verified`].
pub fn run(scenario: &Scenario, out_dir: impl AsRef<Path>) -> Result<RunArtifacts> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let solved = solve(scenario)?;
    let rows = rows_for(scenario, &solved);
    let certificate = certify_rows(scenario, &rows)?;
    let total = solved.total_profit();
    let recomputed: f64 = rows.iter().map(|r| r.count * r.item_profit).sum();
    let consistency_gap = (recomputed - total).abs();

    let (social, conditions, unimodality, diagnostics, served) = match (&solved, &scenario.market) {
        (Solved::Discrete(sol), Market::Discrete(m)) => (
            social_metrics_discrete(&sol.periods, m, &scenario.profile, &scenario.cost)?,
            Some(feasibility_check(&sol.items(), m, &scenario.profile, IC_IR_TOLERANCE)?),
            None,
            None,
            1.0,
        ),
        (Solved::Grouped(sol), Market::Continuous(m)) => {
            let trace_ok = sol
                .profit_trace
                .windows(2)
                .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
            (
                social_metrics_grouped(sol, m, &scenario.profile, &scenario.cost),
                None,
                Some(m.verify_unimodality(1000)?),
                Some(SolverDiagnostics {
                    groups: sol.groups(),
                    iterations: sol.iterations,
                    converged: sol.converged,
                    profit_trace_monotone: trace_ok,
                    unimodality_guaranteed: sol.unimodality_guaranteed,
                    boundaries_at_support_edge: sol.boundaries_at_support_edge.clone(),
                    restart: sol.restart,
                }),
                sol.per_group_counts.iter().sum::<f64>() / m.total_n(),
            )
        }
        _ => unreachable!("solver matches market kind"),
    };
    let comparison = ComparisonReport { optimal_profit: total, baselines: baselines(scenario)?, social };
    let verified = certificate.passed
        && consistency_gap <= 1e-9
        && conditions.as_ref().is_none_or(|c| c.passed)
        && diagnostics.as_ref().is_none_or(|d| d.profit_trace_monotone);

    write_rows(&out_dir.join("solution.csv"), &rows)?;
    let mut comp_rows = vec![ComparisonRow {
        label: "optimal".into(),
        profit: total,
        uplift_percent: None,
        served_fraction: served,
    }];
    for ((label, b), (_, u)) in comparison.baselines.iter().zip(comparison.uplift_percent()) {
        comp_rows.push(ComparisonRow {
            label: label.clone(),
            profit: b.profit,
            uplift_percent: Some(u),
            served_fraction: b.served_fraction,
        });
    }
    write_rows(&out_dir.join("comparison.csv"), &comp_rows)?;
    write_json(
        &out_dir.join("certificate.json"),
        &CertificateFile {
            scenario: &scenario.name,
            verified,
            ic_ir: &certificate,
            consistency_gap,
            conditions,
            unimodality,
            solver: diagnostics,
        },
    )?;
    write_json(&out_dir.join("summary.json"), &comparison)?;
    Ok(RunArtifacts { solved, rows, comparison, certificate, consistency_gap, verified })
}

/// One row of `fig8_sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub groups: usize,
    pub profit: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(label, uplift %)` for each baseline.
    pub uplifts: Vec<(String, f64)>,
}

/// Solves once per group count with the scenario's seed and writes
/// `fig8_sweep.csv`.
pub fn sweep_groups(scenario: &Scenario, groups: &[usize], out_dir: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    if continuous(&scenario.market).is_none() {
        return Err(Error::precondition("sweep_groups", "sweeps need a continuous market"));
    }
    if groups.is_empty() || groups.contains(&0) {
        return Err(Error::precondition("sweep_groups", "group counts must be >= 1"));
    }
    let base = baselines(scenario)?;
    let mut rows = Vec::new();
    for &k in groups {
        let sol = solve_grouped(scenario, k)?;
        let uplifts = base
            .iter()
            .map(|(l, b)| (l.clone(), 100.0 * (sol.total_profit / b.profit - 1.0)))
            .collect();
        rows.push(SweepRow {
            groups: k,
            profit: sol.total_profit,
            iterations: sol.iterations,
            converged: sol.converged,
            uplifts,
        });
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(out_dir.join("fig8_sweep.csv"))?;
    let mut header = vec!["groups".to_string(), "profit".into(), "iterations".into(), "converged".into()];
    header.extend(base.iter().map(|(l, _)| format!("uplift_{l}")));
    w.write_record(&header)?;
    for r in &rows {
        let mut rec = vec![r.groups.to_string(), r.profit.to_string(), r.iterations.to_string(), r.converged.to_string()];
        rec.extend(r.uplifts.iter().map(|(_, u)| u.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(rows)
}

/// Reads a `solution.csv` and re-runs the brute-force incentive check.
pub fn verify_solution_file(scenario: &Scenario, path: impl AsRef<Path>) -> Result<FeasibilityCertificate> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let rows: Vec<SolutionRow> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse { source_name: path.display().to_string(), detail: e.to_string() })?;
    if rows.is_empty() {
        return Err(Error::Parse { source_name: path.display().to_string(), detail: "no solution rows".into() });
    }
    certify_rows(scenario, &rows)
}

/// Solver result next to the grid optimum.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub grid_step: f64,
    pub solver_profit: f64,
    pub solver_periods: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_boundaries: Option<Vec<f64>>,
    pub grid_profit: f64,
    pub grid_periods: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_boundaries: Option<Vec<f64>>,
    /// Grid optimum after local refinement (grouped menus only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_profit: Option<f64>,
    /// `100 (best oracle - solver) / best oracle`.
    pub gap_percent: f64,
}

/// Compares the solver with the exhaustive grid search. Periods are
/// searched on `step, 2 step, …, period_max`.
pub fn oracle_report(scenario: &Scenario, step: f64, period_max: f64) -> Result<OracleReport> {
    if !(step.is_finite() && step > 0.0 && period_max >= step) {
        return Err(Error::precondition("oracle_report", "need 0 < step <= period_max"));
    }
    let periods = grid(step, period_max, step);
    let (p, c) = (&scenario.profile, &scenario.cost);
    match &scenario.market {
        Market::Discrete(m) => {
            let o = grid_oracle_discrete(m, p, c, &periods)?;
            let s = solve_discrete(m, p, c)?;
            Ok(OracleReport {
                grid_step: step,
                solver_profit: s.total_profit,
                solver_periods: s.periods,
                solver_boundaries: None,
                gap_percent: 100.0 * (o.profit - s.total_profit) / o.profit,
                grid_profit: o.profit,
                grid_periods: o.periods,
                grid_boundaries: None,
                refined_profit: None,
            })
        }
        Market::Continuous(m) => {
            let k = scenario.groups().expect("continuous scenarios carry K");
            let (lo, hi) = m.support();
            let o = grid_oracle_grouped(m, p, c, k, &grid(lo, hi, step), &periods)?;
            let refined = polish_grouped(m, p, c, &o, step);
            let s = solve_grouped(scenario, k)?;
            let best = refined.profit.max(o.profit);
            Ok(OracleReport {
                grid_step: step,
                solver_profit: s.total_profit,
                solver_periods: s.periods,
                solver_boundaries: Some(s.boundaries),
                gap_percent: 100.0 * (best - s.total_profit) / best,
                grid_profit: o.profit,
                grid_periods: o.periods,
                grid_boundaries: Some(o.boundaries),
                refined_profit: Some(refined.profit),
            })
        }
    }
}

pub fn write_oracle_report(report: &OracleReport, out_dir: impl AsRef<Path>) -> Result<()> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("oracle.json"), report)
}

//! Acceptance criteria, one PASS/FAIL line each. Tolerances are pinned
//! here and nowhere else; the process exits nonzero if any line fails.
//!
//! Uplifts use the serve-all fixed-period baseline (`monthly`, `rollover`).
//! Profit-maximizing single-item baselines are printed as INFO lines.

use std::process::ExitCode;
use std::time::Instant;

use dataplan::continuous::{solve_alternating, AlternatingOptions, GroupedSolution};
use dataplan::discrete::{feasibility_check, solve_discrete};
use dataplan::market::{
    valuation, valuation_dsigma, valuation_dsigma_dt, valuation_dt, valuation_dtt, ContractItem,
};
use dataplan::runner::{baselines, solve_grouped};
use dataplan::verify::{
    brute_force_ic_ir, discrete_samples, grid, grid_oracle_discrete, grid_oracle_grouped, grouped_samples,
    monte_carlo_valuation, polish_grouped, serve_all_baseline, fixed_period_baseline, social_metrics_discrete,
};
use dataplan::{load_scenario, ContinuousMarket, CostModel, DemandProfile, DiscreteMarket, Market, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASE1_UPLIFT: (f64, f64) = (41.0, 4.0);
const CASE1_RUNTIME_S: f64 = 5.0;
const SURPLUS_RATIO: (f64, f64) = (0.93, 0.03);
const UNIFORM_UPLIFT_T1: (f64, f64) = (37.0, 5.0);
const UNIFORM_UPLIFT_T2: (f64, f64) = (21.0, 5.0);
const K4_OVER_K6: f64 = 0.98;
const MONOTONE_SLACK: f64 = 1e-12;
const ORACLE_REL_GAP: f64 = 0.01;
const ORACLE_CEILING: f64 = 1e-6;
const GROUPED_STEP: f64 = 0.01;
const DISCRETE_STEP: f64 = 0.05;
const IC_TOL: f64 = 1e-9;
const GROUPED_SAMPLE_COUNT: usize = 500;
const PERTURBATIONS: usize = 1000;
const MC_SAMPLES: usize = 1_000_000;
const MC_PAIRS: usize = 20;
const MC_SE: f64 = 3.0;
const DERIV_REL: f64 = 1e-5;
const SCALING_ABS: f64 = 1e-12;
const UNIMODAL_SLACK: f64 = -1e-10;
const UNIMODAL_POINTS: usize = 1000;
const MAX_ITERATIONS: usize = 200;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, what: &str, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("[{}] {id} {what}: {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn info(&self, id: &str, detail: String) {
        println!("[INFO] {id} {detail}");
    }
}

fn within(x: f64, (target, tol): (f64, f64)) -> bool {
    (x - target).abs() <= tol
}

fn scenario(name: &str) -> Scenario {
    let path = format!("{}/../../scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"));
    load_scenario(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn base_case() -> (DemandProfile, CostModel) {
    (DemandProfile::new(1.0, 13.0, 15.0).unwrap(), CostModel::affine(10.0, 0.5).unwrap())
}

fn discrete_market(s: &Scenario) -> &DiscreteMarket {
    match &s.market {
        Market::Discrete(m) => m,
        _ => panic!("expected a discrete market"),
    }
}

fn continuous_market(s: &Scenario) -> &ContinuousMarket {
    match &s.market {
        Market::Continuous(m) => m,
        _ => panic!("expected a continuous market"),
    }
}

fn uplift(profit: f64, base: f64) -> f64 {
    100.0 * (profit / base - 1.0)
}

fn c1_c2(r: &mut Report) {
    let s = scenario("case1_discrete");
    let m = discrete_market(&s);
    let start = Instant::now();
    let sol = solve_discrete(m, &s.profile, &s.cost).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let base = serve_all_baseline(&s.market, &s.profile, &s.cost, 1.0).unwrap();
    let u = uplift(sol.total_profit, base.profit);
    r.line(
        "C1",
        within(u, CASE1_UPLIFT) && secs < CASE1_RUNTIME_S,
        "case (1) uplift vs monthly",
        format!(
            "{u:.2}% (target {}±{}), runtime {secs:.3}s (< {CASE1_RUNTIME_S}s)",
            CASE1_UPLIFT.0, CASE1_UPLIFT.1
        ),
    );
    let opt = fixed_period_baseline(&s.market, &s.profile, &s.cost, 1.0).unwrap();
    r.info(
        "C1",
        format!("profit-maximizing monthly baseline gives {:.2}%", uplift(sol.total_profit, opt.profit)),
    );
    let social = social_metrics_discrete(&sol.periods, m, &s.profile, &s.cost).unwrap();
    r.line(
        "C2",
        within(social.ratio, SURPLUS_RATIO),
        "case (1) social surplus ratio",
        format!("{:.4} (target {}±{})", social.ratio, SURPLUS_RATIO.0, SURPLUS_RATIO.1),
    );
}

fn c3_c4(r: &mut Report) {
    let s = scenario("uniform_k6");
    let sol = solve_grouped(&s, 6).unwrap();
    let t1 = serve_all_baseline(&s.market, &s.profile, &s.cost, 1.0).unwrap();
    let t2 = serve_all_baseline(&s.market, &s.profile, &s.cost, 2.0).unwrap();
    let (u1, u2) = (uplift(sol.total_profit, t1.profit), uplift(sol.total_profit, t2.profit));
    r.line(
        "C3",
        within(u1, UNIFORM_UPLIFT_T1) && within(u2, UNIFORM_UPLIFT_T2),
        "uniform K=6 uplift vs t=1 / t=2",
        format!(
            "{u1:.2}% (target {}±{}), {u2:.2}% (target {}±{})",
            UNIFORM_UPLIFT_T1.0, UNIFORM_UPLIFT_T1.1, UNIFORM_UPLIFT_T2.0, UNIFORM_UPLIFT_T2.1
        ),
    );
    let o1 = fixed_period_baseline(&s.market, &s.profile, &s.cost, 1.0).unwrap();
    let o2 = fixed_period_baseline(&s.market, &s.profile, &s.cost, 2.0).unwrap();
    r.info(
        "C3",
        format!(
            "profit-maximizing baselines give {:.2}% / {:.2}%",
            uplift(sol.total_profit, o1.profit),
            uplift(sol.total_profit, o2.profit)
        ),
    );
    let profits: Vec<f64> = (1..=6).map(|k| solve_grouped(&s, k).unwrap().total_profit).collect();
    let monotone = profits.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK * w[0].abs());
    let ratio = profits[3] / profits[5];
    r.line(
        "C4",
        monotone && ratio >= K4_OVER_K6,
        "uniform profit(K) monotone, profit(4)/profit(6)",
        format!(
            "profits {:?}, ratio {ratio:.4} (>= {K4_OVER_K6})",
            profits.iter().map(|p| format!("{p:.5}")).collect::<Vec<_>>()
        ),
    );
}

fn c5(r: &mut Report) {
    let mut rows = Vec::new();
    for name in ["exponential_k6", "truncnormal_k6", "uniform_k6"] {
        let s = scenario(name);
        let sol = solve_grouped(&s, 6).unwrap();
        let b = baselines(&s).unwrap();
        let get = |label: &str| b.iter().find(|(l, _)| l == label).unwrap().1.profit;
        rows.push((
            name,
            uplift(sol.total_profit, get("monthly")),
            uplift(sol.total_profit, get("rollover")),
            uplift(sol.total_profit, get("monthly_optimized")),
            uplift(sol.total_profit, get("rollover_optimized")),
        ));
    }
    let ordered = |f: fn(&(&str, f64, f64, f64, f64)) -> f64| {
        f(&rows[0]) > f(&rows[1]) && f(&rows[1]) > f(&rows[2]) && rows.iter().all(|x| f(x) > 0.0)
    };
    let pass = ordered(|x| x.1) && ordered(|x| x.2);
    r.line(
        "C5",
        pass,
        "K=6 uplift order exponential > truncated normal > uniform, all positive",
        rows.iter()
            .map(|x| format!("{} {:.2}%/{:.2}%", x.0, x.1, x.2))
            .collect::<Vec<_>>()
            .join(", "),
    );
    r.info(
        "C5",
        format!(
            "profit-maximizing baselines: {}",
            rows.iter()
                .map(|x| format!("{} {:.2}%/{:.2}%", x.0, x.3, x.4))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

fn c6(r: &mut Report) {
    let (p, c) = base_case();
    let u = ContinuousMarket::uniform(1.0, 0.0, 6.0).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for k in [2, 3] {
        let sol = solve_alternating(&u, &p, &c, &AlternatingOptions::new(k)).unwrap();
        let o = grid_oracle_grouped(&u, &p, &c, k, &grid(0.0, 6.0, GROUPED_STEP), &grid(GROUPED_STEP, 6.0, GROUPED_STEP))
            .unwrap();
        let refined = polish_grouped(&u, &p, &c, &o, GROUPED_STEP);
        let ceiling = o.profit.max(refined.profit);
        let gap = (sol.total_profit - o.profit).abs() / o.profit;
        ok &= gap <= ORACLE_REL_GAP && sol.total_profit <= ceiling + ORACLE_CEILING;
        detail.push(format!(
            "K={k}: solver {:.9} grid {:.9} refined {:.9} (gap {:.2e})",
            sol.total_profit, o.profit, refined.profit, gap
        ));
    }
    let s = scenario("case1_discrete");
    let types = discrete_market(&s).types();
    let periods = grid(DISCRETE_STEP, 10.0, DISCRETE_STEP);
    for idx in [vec![5], vec![3, 7], vec![2, 5, 8]] {
        let m = DiscreteMarket::new(idx.iter().map(|&i| types[i]).collect(), vec![1.0; idx.len()]).unwrap();
        let sol = solve_discrete(&m, &p, &c).unwrap();
        let o = grid_oracle_discrete(&m, &p, &c, &periods).unwrap();
        let dist = sol.periods.iter().zip(&o.periods).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ok &= dist <= DISCRETE_STEP;
        detail.push(format!("I={}: max period gap {dist:.4}", idx.len()));
    }
    r.line(
        "C6",
        ok,
        &format!(
            "oracle equivalence (rel {ORACLE_REL_GAP}, ceiling +{ORACLE_CEILING:e}, steps {GROUPED_STEP}/{DISCRETE_STEP})"
        ),
        detail.join("; "),
    );
}

fn c7(r: &mut Report) {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut case1 = None;
    for name in ["case1_discrete", "case2_discrete"] {
        let s = scenario(name);
        let m = discrete_market(&s);
        let sol = solve_discrete(m, &s.profile, &s.cost).unwrap();
        let cert = brute_force_ic_ir(&sol.items(), &discrete_samples(m), &s.profile, IC_TOL).unwrap();
        ok &= cert.passed;
        worst = worst.max(cert.worst_ic_violation.max(cert.worst_ir_violation));
        checked += 1;
        if name == "case1_discrete" {
            case1 = Some((s.clone(), sol));
        }
    }
    for name in ["uniform_k6", "exponential_k6", "truncnormal_k6"] {
        let s = scenario(name);
        let m = continuous_market(&s);
        for k in 1..=6 {
            let sol: GroupedSolution = solve_grouped(&s, k).unwrap();
            let samples = grouped_samples(&sol.boundaries, m, GROUPED_SAMPLE_COUNT, 11);
            let cert = brute_force_ic_ir(&sol.items(), &samples, &s.profile, IC_TOL).unwrap();
            ok &= cert.passed;
            worst = worst.max(cert.worst_ic_violation.max(cert.worst_ir_violation));
            checked += 1;
        }
    }
    // random price perturbations that keep the menu feasible
    let (s, sol) = case1.unwrap();
    let m = discrete_market(&s);
    let (n, types) = (m.len(), m.types());
    let width: Vec<f64> = (0..n - 1)
        .map(|i| {
            let (a, b) = (sol.periods[i], sol.periods[i + 1]);
            let v = |sigma: f64, t: f64| valuation(&s.profile, sigma, t).unwrap();
            (v(types[i], a) - v(types[i], b)) - (v(types[i + 1], a) - v(types[i + 1], b))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut feasible, mut attempts, mut beaten) = (0, 0, 0);
    while feasible < PERTURBATIONS && attempts < 1_000_000 {
        attempts += 1;
        let mut d = vec![0.0; n];
        d[n - 1] = rng.gen_range(-0.01..0.05);
        for i in (0..n - 1).rev() {
            d[i] = d[i + 1] + rng.gen_range(-0.2..1.2) * width[i];
        }
        let items: Vec<ContractItem> = (0..n)
            .map(|i| ContractItem { t: sol.periods[i], pi: sol.prices[i] - d[i] })
            .collect();
        if !feasibility_check(&items, m, &s.profile, 0.0).unwrap().passed {
            continue;
        }
        feasible += 1;
        let profit: f64 = (0..n)
            .map(|i| m.counts()[i] * (items[i].pi - dataplan::market::cost(&s.cost, items[i].t).unwrap()))
            .sum();
        if profit > sol.total_profit + 1e-12 {
            beaten += 1;
        }
    }
    ok &= feasible == PERTURBATIONS && beaten == 0;
    r.line(
        "C7",
        ok,
        &format!("brute-force IC/IR at tol {IC_TOL:e} and price perturbations"),
        format!(
            "{checked} menus, worst violation {worst:.2e}; {feasible} feasible perturbations ({attempts} drawn), {beaten} beat the chained prices"
        ),
    );
}

/// Richardson-extrapolated central difference.
fn diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn c8(r: &mut Report) {
    let (p, _) = base_case();
    let v = |s: f64, t: f64| valuation(&p, s, t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // draws restricted to thresholds a = sqrt(t) Δq / σ <= 3 so that the
    // overage is observed often enough for a meaningful standard error
    let mut pairs = Vec::new();
    while pairs.len() < MC_PAIRS {
        let (s, t): (f64, f64) = (rng.gen_range(0.5..6.0), rng.gen_range(0.1..4.0));
        if t.sqrt() * 2.0 / s <= 3.0 {
            pairs.push((s, t));
        }
    }
    let mut mc_ok = true;
    let mut worst_z = 0.0f64;
    for (i, &(s, t)) in pairs.iter().enumerate() {
        let est = monte_carlo_valuation(&p, s, t, MC_SAMPLES, 100 + i as u64).unwrap();
        let z = (est.estimate - v(s, t)).abs() / est.std_error;
        worst_z = worst_z.max(z);
        mc_ok &= z <= MC_SE;
    }

    let mut worst_rel = 0.0f64;
    let mut deriv_ok = true;
    let mut check = |exact: f64, fd: f64| {
        let rel = ((exact - fd) / exact).abs();
        worst_rel = worst_rel.max(rel);
        deriv_ok &= rel <= DERIV_REL;
    };
    for &(s, t) in &pairs {
        let h: f64 = 2e-3;
        check(valuation_dt(&p, s, t).unwrap(), diff(|x| v(s, x), t, h.min(t / 4.0)));
        check(valuation_dsigma(&p, s, t).unwrap().value, diff(|x| v(x, t), s, h));
        let mixed = diff(|y| diff(|x| v(x, y), s, h), t, h.min(t / 4.0));
        check(valuation_dsigma_dt(&p, s, t).unwrap().value, mixed);
        // closed form of the second period derivative
        let a = t.sqrt() * 2.0 / s;
        let phi = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let vtt = -s * phi / (2.0 * t.powf(2.5)) * (0.5 * a * a + 1.5);
        check(vtt, valuation_dtt(&p, s, t).unwrap());
    }

    let mut worst_scale = 0.0f64;
    for &(s, t) in &pairs {
        for k in [0.5, 2.0, 3.0] {
            worst_scale = worst_scale.max((v(s, t) - v(k * s, k * k * t)).abs());
        }
    }
    r.line(
        "C8",
        mc_ok && deriv_ok && worst_scale <= SCALING_ABS,
        "valuation: Monte Carlo, derivatives, scaling",
        format!(
            "{MC_PAIRS} pairs × {MC_SAMPLES} draws, worst |z| {worst_z:.2} (<= {MC_SE}); worst derivative rel err {worst_rel:.2e} (<= {DERIV_REL:e}); worst scaling gap {worst_scale:.1e} (<= {SCALING_ABS:e})"
        ),
    );
}

fn c9(r: &mut Report) {
    let mut markets = vec![("uniform[0,6]".to_string(), ContinuousMarket::uniform(1.0, 0.0, 6.0).unwrap())];
    for rate in [0.25, 0.5, 1.0] {
        markets.push((format!("exp(λ={rate})"), ContinuousMarket::exponential(1.0, rate, 0.0, 6.0).unwrap()));
    }
    for (m, w) in [(1.0, 1.0), (3.0, 1.0), (3.0, 2.0), (5.0, 1.0)] {
        markets.push((format!("N({m},{w})"), ContinuousMarket::truncated_normal(1.0, m, w, 0.0, 6.0).unwrap()));
    }
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut worst_name = String::new();
    for (name, m) in &markets {
        let rep = m.verify_unimodality(UNIMODAL_POINTS).unwrap();
        ok &= rep.min_slack >= UNIMODAL_SLACK;
        if rep.min_slack < worst {
            worst = rep.min_slack;
            worst_name = name.clone();
        }
    }
    r.line(
        "C9",
        ok,
        "unimodality condition on 1000-point grids",
        format!("{} distributions, smallest slack {worst:.3e} ({worst_name}) (>= {UNIMODAL_SLACK:e})", markets.len()),
    );
}

fn c10(r: &mut Report) {
    let mut ok = true;
    let mut most = 0;
    let mut runs = 0;
    for name in ["uniform_k6", "exponential_k6", "truncnormal_k6"] {
        let s = scenario(name);
        for k in 1..=6 {
            let sol = solve_grouped(&s, k).unwrap();
            let monotone = sol
                .profit_trace
                .windows(2)
                .all(|w| w[1] >= w[0] - MONOTONE_SLACK * w[0].abs().max(1.0));
            ok &= monotone && sol.converged && sol.iterations <= MAX_ITERATIONS;
            most = most.max(sol.iterations);
            runs += 1;
        }
    }
    r.line(
        "C10",
        ok,
        "alternating profit trace monotone and converged",
        format!("{runs} runs, at most {most} iterations (<= {MAX_ITERATIONS}), slack {MONOTONE_SLACK:e}"),
    );
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    c1_c2(&mut r);
    c3_c4(&mut r);
    c5(&mut r);
    c6(&mut r);
    c7(&mut r);
    c8(&mut r);
    c9(&mut r);
    c10(&mut r);
    if r.failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", r.failed);
        ExitCode::FAILURE
    }
}

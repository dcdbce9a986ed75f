//! Scenario files: one JSON document describing demand, cost, market,
//! solver settings and baseline periods.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distribution::{ContinuousMarket, DiscreteMarket, Market};
use crate::error::{Error, Result};
use crate::market::{CostModel, DemandProfile};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    c0: f64,
    c1: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawMarket {
    Discrete {
        types: Vec<f64>,
        counts: Vec<f64>,
    },
    Uniform {
        #[serde(default = "one")]
        total_n: f64,
        lo: f64,
        hi: f64,
    },
    Exponential {
        #[serde(default = "one")]
        total_n: f64,
        rate: f64,
        lo: f64,
        hi: f64,
    },
    TruncatedNormal {
        #[serde(default = "one")]
        total_n: f64,
        mean: f64,
        std: f64,
        lo: f64,
        hi: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum RawGroups {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSolver {
    Discrete,
    Continuous {
        #[serde(rename = "K")]
        groups: RawGroups,
        #[serde(default)]
        restarts: usize,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    alpha: f64,
    mu: f64,
    q: f64,
    cost: RawCost,
    market: RawMarket,
    solver: RawSolver,
    #[serde(default)]
    baselines: Vec<f64>,
    /// Free-form remark carried through untouched.
    #[serde(default)]
    note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverSpec {
    Discrete,
    /// `groups` holds one entry for a single solve, several for a sweep.
    Continuous { groups: Vec<usize>, restarts: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub profile: DemandProfile,
    pub cost: CostModel,
    pub market: Market,
    pub solver: SolverSpec,
    pub baselines: Vec<f64>,
    pub note: Option<String>,
}

impl Scenario {
    pub fn seed(&self) -> u64 {
        match self.solver {
            SolverSpec::Continuous { seed, .. } => seed,
            SolverSpec::Discrete => 0,
        }
    }

    /// Largest group count listed, used for single solves.
    pub fn groups(&self) -> Option<usize> {
        match &self.solver {
            SolverSpec::Continuous { groups, .. } => groups.iter().copied().max(),
            SolverSpec::Discrete => None,
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str, source_name: &str) -> Result<Scenario> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        detail: e.to_string(),
    })?;
    let profile = DemandProfile::new(raw.alpha, raw.mu, raw.q)?;
    let cost = CostModel::affine(raw.cost.c0, raw.cost.c1)?;
    let market = match raw.market {
        RawMarket::Discrete { types, counts } => Market::Discrete(DiscreteMarket::new(types, counts)?),
        RawMarket::Uniform { total_n, lo, hi } => Market::Continuous(ContinuousMarket::uniform(total_n, lo, hi)?),
        RawMarket::Exponential { total_n, rate, lo, hi } => {
            Market::Continuous(ContinuousMarket::exponential(total_n, rate, lo, hi)?)
        }
        RawMarket::TruncatedNormal { total_n, mean, std, lo, hi } => {
            Market::Continuous(ContinuousMarket::truncated_normal(total_n, mean, std, lo, hi)?)
        }
    };
    let solver = match raw.solver {
        RawSolver::Discrete => SolverSpec::Discrete,
        RawSolver::Continuous { groups, restarts, seed } => {
            let groups = match groups {
                RawGroups::One(k) => vec![k],
                RawGroups::Many(ks) => ks,
            };
            if groups.is_empty() {
                return Err(Error::invalid("solver.K", "at least one group count is required"));
            }
            if let Some(i) = groups.iter().position(|&k| k == 0) {
                return Err(Error::invalid(format!("solver.K[{i}]"), "group count must be >= 1"));
            }
            SolverSpec::Continuous { groups, restarts, seed }
        }
    };
    match (&market, &solver) {
        (Market::Discrete(_), SolverSpec::Continuous { .. }) => {
            return Err(Error::invalid("solver.kind", "a discrete market needs the discrete solver"))
        }
        (Market::Continuous(_), SolverSpec::Discrete) => {
            return Err(Error::invalid("solver.kind", "a continuous market needs the continuous solver"))
        }
        _ => {}
    }
    if let Some(i) = raw.baselines.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::invalid(format!("baselines[{i}]"), "baseline period must be > 0"));
    }
    if raw.name.trim().is_empty() {
        return Err(Error::invalid("name", "must not be empty"));
    }
    Ok(Scenario {
        name: raw.name,
        profile,
        cost,
        market,
        solver,
        baselines: raw.baselines,
        note: raw.note,
    })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text, &path.display().to_string())
}

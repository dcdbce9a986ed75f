use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distribution::{ContinuousMarket, DiscreteMarket};
use crate::error::{Error, Result};
use crate::market::{consumer_utility, ContractItem, DemandProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolatingPair {
    pub sigma: f64,
    /// Item the consumer actually prefers; `None` means staying out.
    pub chosen: Option<usize>,
    pub assigned: Option<usize>,
}

/// Outcome of checking every sampled type against every item.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityCertificate {
    pub passed: bool,
    /// Largest utility gain from switching away from the assigned item.
    pub worst_ic_violation: f64,
    /// Largest utility gain from switching between buying and not buying.
    pub worst_ir_violation: f64,
    pub violating_pair: Option<ViolatingPair>,
    pub samples: usize,
    pub tolerance: f64,
}

/// Each sample is a type and the item it is meant to buy (`None`: unserved).
pub fn brute_force_ic_ir(
    contract: &[ContractItem],
    samples: &[(f64, Option<usize>)],
    profile: &DemandProfile,
    tol: f64,
) -> Result<FeasibilityCertificate> {
    if contract.is_empty() || samples.is_empty() {
        return Err(Error::precondition("brute_force_ic_ir", "contract and samples must be non-empty"));
    }
    let mut ic = 0.0f64;
    let mut ir = 0.0f64;
    let mut pair = None;
    let mut worst_seen = tol;
    for &(sigma, assigned) in samples {
        if let Some(a) = assigned {
            if a >= contract.len() {
                return Err(Error::precondition("brute_force_ic_ir", format!("item {a} out of range")));
            }
        }
        let utils: Vec<f64> = contract.iter().map(|item| consumer_utility(profile, sigma, item)).collect();
        let (best, best_u) = utils
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &u)| if u > acc.1 { (j, u) } else { acc });
        let chosen = if best_u >= 0.0 { Some(best) } else { None };
        let (gain_ic, gain_ir) = match assigned {
            Some(a) => (best_u - utils[a], (-utils[a]).max(0.0)),
            None => (0.0, best_u.max(0.0)),
        };
        ic = ic.max(gain_ic);
        ir = ir.max(gain_ir);
        let worst = gain_ic.max(gain_ir);
        if worst > worst_seen {
            worst_seen = worst;
            pair = Some(ViolatingPair { sigma, chosen, assigned });
        }
    }
    Ok(FeasibilityCertificate {
        passed: ic <= tol && ir <= tol,
        worst_ic_violation: ic,
        worst_ir_violation: ir,
        violating_pair: pair,
        samples: samples.len(),
        tolerance: tol,
    })
}

/// Every market type paired with its own item.
pub fn discrete_samples(market: &DiscreteMarket) -> Vec<(f64, Option<usize>)> {
    market.types().iter().enumerate().map(|(i, &s)| (s, Some(i))).collect()
}

/// `n` seeded uniform draws over the support plus every boundary type,
/// each paired with its group (or `None` above the top boundary).
pub fn grouped_samples(
    boundaries: &[f64],
    market: &ContinuousMarket,
    n: usize,
    seed: u64,
) -> Vec<(f64, Option<usize>)> {
    let (lo, hi) = market.support();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigmas: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    sigmas.extend_from_slice(boundaries);
    sigmas
        .into_iter()
        .map(|s| (s, boundaries.iter().position(|&b| s <= b)))
        .collect()
}

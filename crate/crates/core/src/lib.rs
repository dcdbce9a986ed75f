//! Pricing and duration design for data plans sold to consumers with
//! uncertain demand.

pub mod continuous;
pub mod discrete;
pub mod distribution;
pub mod error;
pub mod market;
pub mod optimize;
pub mod pooling;
pub mod runner;
pub mod scenario;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use continuous::{solve_alternating, AlternatingOptions, GroupedSolution, Init};
pub use discrete::{solve_discrete, DiscreteSolution};
pub use distribution::{ContinuousMarket, Density, DiscreteMarket, Market};
pub use market::{ContractItem, CostModel, DemandProfile};
pub use scenario::{load_scenario, parse_scenario, Scenario, SolverSpec};

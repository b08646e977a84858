//! Household consumption, portfolio choice and energy-retrofit adoption
//! under market risk.
//!
//! The crate solves the adoption problem in closed form ([`agent_solution`]),
//! measures rebound, backfire and welfare ([`welfare`]), designs the
//! planner's subsidy ([`subsidy`]), simulates paths and Monte-Carlo checks
//! ([`stochastic`]), aggregates a heterogeneous population into diffusion
//! curves ([`aggregate`]) and reproduces the case-study tables
//! ([`analysis`]). [`cli`] drives everything from a config file.

pub mod agent_solution;
pub mod aggregate;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod numerics;
pub mod params;
pub mod stochastic;
pub mod subsidy;
pub mod welfare;

pub use agent_solution::{Agent, ControlTriple, DualSolution, Regime};
pub use error::{Error, Result};
pub use params::{
    AgentParams, DerivedConstants, MarketParams, ModelParams, RetrofitParams, Threshold,
    UnitConventions,
};

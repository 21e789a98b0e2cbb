//! Deadline-aware Wi-Fi offloading as a finite-horizon Markov decision
//! process.
//!
//! A user must move a file of `K` units within `T` slots while wandering
//! between locations. Each slot it can stay idle, pay for cellular, or use
//! Wi-Fi where a hotspot is in range; data left at the deadline is penalised.
//!
//! * [`general::solve`] computes an optimal policy by backward induction.
//! * [`monotone::solve_monotone`] exploits the threshold structure that holds
//!   for free Wi-Fi, flat cellular pricing and a convex penalty.
//! * [`oracle::expectimax`] brute-forces tiny instances for testing.
//! * [`baselines`] and [`sim`] compare heuristics by Monte-Carlo simulation.
//!
//! The library is unit-agnostic; the simulation layer works in Mbit, seconds
//! and dollars.

pub mod baselines;
pub mod error;
pub mod general;
pub mod io;
pub mod model;
pub mod monotone;
pub mod oracle;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use general::{solve, solve_with_budget, Policy, Solution, ValueTable};
pub use model::{
    admissible_actions, payment, penalty, transition_dist, Action, LinkParams, LocationId, Mobility,
    NetworkModel, PaymentRule, PenaltyFn, ProblemSpec, State,
};
pub use monotone::{solve_monotone, MonotoneModel, ThresholdPolicy, WifiMode};
pub use sim::ScenarioConfig;

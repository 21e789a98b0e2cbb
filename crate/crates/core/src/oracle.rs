//! Brute-force expectimax over the full decision tree, for certifying the
//! DP solvers on tiny instances.
//!
//! It only uses the model-level primitives ([`payment`], [`transition_dist`],
//! [`penalty`]) and recurses forward from the queried state without any table,
//! so it shares no code path with the backward solvers.

use crate::error::{Error, Result};
use crate::model::{admissible_actions, payment, penalty, transition_dist, NetworkModel, ProblemSpec, State};
use crate::Action;

pub const MAX_LOCATIONS: usize = 4;
pub const MAX_HORIZON: usize = 6;
pub const MAX_GRID_STEPS: usize = 6;

/// Relative tolerance for collecting the root argmin set.
pub const ARGMIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimal_value: f64,
    /// Every root action whose value is within [`ARGMIN_TOLERANCE`] of the optimum.
    pub optimal_actions: Vec<Action>,
}

/// Minimal expected cost from state `s` at slot `t` (`1 ≤ t ≤ T + 1`).
pub fn expectimax(model: &NetworkModel, spec: &ProblemSpec, s: State, t: usize) -> Result<OracleResult> {
    if model.num_locations() > MAX_LOCATIONS
        || spec.horizon() > MAX_HORIZON
        || spec.grid_steps() > MAX_GRID_STEPS
    {
        return Err(Error::SizeGuard(format!(
            "L = {}, T = {}, K/σ = {} (limits {MAX_LOCATIONS}, {MAX_HORIZON}, {MAX_GRID_STEPS})",
            model.num_locations(),
            spec.horizon(),
            spec.grid_steps()
        )));
    }
    if t == 0 || t > spec.horizon() + 1 {
        return Err(Error::Domain(format!("slot {t} outside 1..={}", spec.horizon() + 1)));
    }
    if s.k > spec.grid_steps() {
        return Err(Error::Domain(format!("k = {} beyond the file size", s.k)));
    }
    model.check_location(s.l)?;

    if t == spec.horizon() + 1 {
        return Ok(OracleResult {
            optimal_value: penalty(spec, spec.data_at(s.k))?,
            optimal_actions: Vec::new(),
        });
    }
    let mut scored = Vec::with_capacity(3);
    for &a in admissible_actions(model, s.l)? {
        scored.push((a, action_value(model, spec, s, a, t)?));
    }
    let best = scored.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let slack = ARGMIN_TOLERANCE * best.abs().max(1.0);
    Ok(OracleResult {
        optimal_value: best,
        optimal_actions: scored
            .into_iter()
            .filter(|x| x.1 <= best + slack)
            .map(|x| x.0)
            .collect(),
    })
}

fn action_value(model: &NetworkModel, spec: &ProblemSpec, s: State, a: Action, t: usize) -> Result<f64> {
    let mut total = payment(model, spec, s, a)?;
    for (next, p) in transition_dist(model, spec, s, a)? {
        total += p * value(model, spec, next, t + 1)?;
    }
    Ok(total)
}

fn value(model: &NetworkModel, spec: &ProblemSpec, s: State, t: usize) -> Result<f64> {
    if t == spec.horizon() + 1 {
        return penalty(spec, spec.data_at(s.k));
    }
    let mut best = f64::INFINITY;
    for &a in admissible_actions(model, s.l)? {
        best = best.min(action_value(model, spec, s, a, t)?);
    }
    Ok(best)
}

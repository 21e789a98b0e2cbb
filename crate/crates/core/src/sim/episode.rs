//! Executing one transfer: the user moves along the mobility chain and a
//! decision source picks an action every slot.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{no_offload_decide, otso_decide, wiffler_decide, WifflerState};
use crate::error::{Error, Result};
use crate::general::Policy;
use crate::model::{is_admissible, payment, Action, LocationId, NetworkModel, ProblemSpec, State};
use crate::monotone::ThresholdPolicy;

/// Anything that can choose an action each slot.
pub trait Decider {
    /// Called once per slot with the user's location, before [`Decider::decide`].
    fn observe(&mut self, _model: &NetworkModel, _t: usize, _l: LocationId) {}

    fn decide(&mut self, model: &NetworkModel, spec: &ProblemSpec, s: State, t: usize) -> Action;
}

impl Decider for Policy {
    fn decide(&mut self, _: &NetworkModel, _: &ProblemSpec, s: State, t: usize) -> Action {
        self.get(t, s.k, s.l)
    }
}

impl Decider for ThresholdPolicy {
    fn decide(&mut self, _: &NetworkModel, _: &ProblemSpec, s: State, t: usize) -> Action {
        crate::monotone::decide(self, s, t)
    }
}

/// Always cellular.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoOffload;

impl Decider for NoOffload {
    fn decide(&mut self, _: &NetworkModel, _: &ProblemSpec, s: State, _: usize) -> Action {
        no_offload_decide(s)
    }
}

/// On-the-spot offloading.
#[derive(Debug, Clone, Copy, Default)]
pub struct Otso;

impl Decider for Otso {
    fn decide(&mut self, model: &NetworkModel, _: &ProblemSpec, s: State, _: usize) -> Action {
        otso_decide(model, s)
    }
}

impl Decider for WifflerState {
    fn observe(&mut self, model: &NetworkModel, t: usize, l: LocationId) {
        WifflerState::observe(self, model, t, l);
    }

    fn decide(&mut self, model: &NetworkModel, spec: &ProblemSpec, s: State, t: usize) -> Action {
        wiffler_decide(self, model, spec, s, t)
    }
}

/// One slot of a trajectory, recorded before the transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: usize,
    pub l: LocationId,
    /// Remaining data as a grid index.
    pub k: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub completed: bool,
    pub total_payment: f64,
    pub penalty_paid: f64,
    pub total_cost: f64,
    pub slots_cellular: usize,
    pub slots_wifi: usize,
    /// Idle slots while data was still pending.
    pub slots_waiting: usize,
    pub trajectory: Vec<Step>,
}

/// Locations for slots `1..=T`, starting at the problem's initial location.
pub fn sample_path<R: Rng + ?Sized>(model: &NetworkModel, spec: &ProblemSpec, rng: &mut R) -> Vec<LocationId> {
    let mut path = Vec::with_capacity(spec.horizon());
    let mut l = spec.initial_location();
    for t in 0..spec.horizon() {
        if t > 0 {
            l = next_location(model, l, rng.random::<f64>());
        }
        path.push(l);
    }
    path
}

fn next_location(model: &NetworkModel, from: LocationId, u: f64) -> LocationId {
    let support = model.mobility().support(from.pos());
    let mut acc = 0.0;
    for &(to, p) in support {
        acc += p;
        if u < acc {
            return LocationId::from_zero_based(to);
        }
    }
    // u landed in the rounding gap at the top of the row
    LocationId::from_zero_based(support.last().expect("row with support").0)
}

/// Plays `decider` along a fixed location path (one entry per slot).
///
/// Stops early once the file is through. An inadmissible action aborts the
/// episode with [`Error::Inadmissible`].
pub fn run_episode_on_path<D: Decider + ?Sized>(
    decider: &mut D,
    model: &NetworkModel,
    spec: &ProblemSpec,
    path: &[LocationId],
) -> Result<EpisodeResult> {
    if path.len() != spec.horizon() {
        return Err(Error::Domain(format!(
            "path covers {} slots, horizon is {}",
            path.len(),
            spec.horizon()
        )));
    }
    let mut k = spec.grid_steps();
    let mut result = EpisodeResult {
        completed: false,
        total_payment: 0.0,
        penalty_paid: 0.0,
        total_cost: 0.0,
        slots_cellular: 0,
        slots_wifi: 0,
        slots_waiting: 0,
        trajectory: Vec::new(),
    };
    for (i, &l) in path.iter().enumerate() {
        if k == 0 {
            break;
        }
        let t = i + 1;
        decider.observe(model, t, l);
        let s = State::new(k, l);
        let a = decider.decide(model, spec, s, t);
        if !is_admissible(model, l, a) {
            return Err(Error::Inadmissible {
                action: a,
                location: l.get(),
            });
        }
        result.trajectory.push(Step { t, l, k, action: a });
        result.total_payment += payment(model, spec, s, a)?;
        match a {
            Action::Idle => result.slots_waiting += 1,
            Action::Cellular => result.slots_cellular += 1,
            Action::WiFi => result.slots_wifi += 1,
        }
        k = k.saturating_sub(spec.transfer_steps(model.rate(l, a)));
    }
    result.completed = k == 0;
    result.penalty_paid = spec.penalty_table()[k];
    result.total_cost = result.total_payment + result.penalty_paid;
    Ok(result)
}

/// Samples a path and plays `decider` along it.
pub fn run_episode<D: Decider + ?Sized, R: Rng + ?Sized>(
    decider: &mut D,
    model: &NetworkModel,
    spec: &ProblemSpec,
    rng: &mut R,
) -> Result<EpisodeResult> {
    let path = sample_path(model, spec, rng);
    run_episode_on_path(decider, model, spec, &path)
}

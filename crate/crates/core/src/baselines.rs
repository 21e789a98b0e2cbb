//! Comparison schemes: always-cellular, on-the-spot offloading, and a
//! Wiffler-style predictor that waits for Wi-Fi when the expected hotspot
//! capacity before the deadline covers the remaining data.

use std::collections::VecDeque;

use crate::model::{Action, LocationId, NetworkModel, ProblemSpec, State};

/// Cellular whenever data is pending.
pub fn no_offload_decide(s: State) -> Action {
    if s.k > 0 {
        Action::Cellular
    } else {
        Action::Idle
    }
}

/// Wi-Fi whenever a hotspot is in range, cellular otherwise.
pub fn otso_decide(model: &NetworkModel, s: State) -> Action {
    if s.k == 0 {
        Action::Idle
    } else if model.has_wifi(s.l) {
        Action::WiFi
    } else {
        Action::Cellular
    }
}

/// One completed stay within hotspot coverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encounter {
    /// Slots between the start of the previous encounter (or the start of
    /// the episode) and the start of this one.
    pub inter_meeting_time: usize,
    /// Mean observed Wi-Fi rate during the encounter, data per slot.
    pub throughput: f64,
    /// Slots spent in coverage.
    pub dwell: usize,
}

/// Estimates how much data Wi-Fi can carry in the remaining time.
pub type Predictor = fn(&VecDeque<Encounter>, usize) -> f64;

/// `(remaining / mean gap) × mean data per encounter`; zero without history.
pub fn mean_encounter_predictor(history: &VecDeque<Encounter>, remaining: usize) -> f64 {
    if history.is_empty() || remaining == 0 {
        return 0.0;
    }
    let n = history.len() as f64;
    let mean_gap = history.iter().map(|e| e.inter_meeting_time as f64).sum::<f64>() / n;
    let mean_data = history
        .iter()
        .map(|e| e.throughput * e.dwell as f64)
        .sum::<f64>()
        / n;
    if mean_gap <= 0.0 {
        return 0.0;
    }
    remaining as f64 / mean_gap * mean_data
}

#[derive(Debug, Clone, Copy)]
struct OpenEncounter {
    start: usize,
    gap: usize,
    rate_sum: f64,
    slots: usize,
}

/// Per-episode predictor state.
#[derive(Debug, Clone)]
pub struct WifflerState {
    theta: f64,
    window: usize,
    history: VecDeque<Encounter>,
    open: Option<OpenEncounter>,
    last_start: usize,
    predictor: Predictor,
}

impl WifflerState {
    /// # Panics
    /// Panics unless `theta > 0` and `window ≥ 1`.
    pub fn new(theta: f64, window: usize) -> Self {
        Self::with_predictor(theta, window, mean_encounter_predictor)
    }

    pub fn with_predictor(theta: f64, window: usize, predictor: Predictor) -> Self {
        assert!(theta > 0.0, "conservative coefficient must be positive");
        assert!(window >= 1, "history window must hold at least one encounter");
        WifflerState {
            theta,
            window,
            history: VecDeque::with_capacity(window),
            open: None,
            last_start: 0,
            predictor,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn history(&self) -> &VecDeque<Encounter> {
        &self.history
    }

    /// Seeds the history directly, keeping only the latest `window` entries.
    pub fn push_encounter(&mut self, e: Encounter) {
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(e);
    }

    /// Records the user's location at slot `t`. Entering coverage opens an
    /// encounter; leaving it closes the encounter into the history.
    pub fn observe(&mut self, model: &NetworkModel, t: usize, l: LocationId) {
        if model.has_wifi(l) {
            let rate = model.rate(l, Action::WiFi);
            match &mut self.open {
                Some(open) => {
                    open.rate_sum += rate;
                    open.slots += 1;
                }
                None => {
                    self.open = Some(OpenEncounter {
                        start: t,
                        gap: t - self.last_start,
                        rate_sum: rate,
                        slots: 1,
                    });
                }
            }
        } else if let Some(open) = self.open.take() {
            self.last_start = open.start;
            self.push_encounter(Encounter {
                inter_meeting_time: open.gap,
                throughput: open.rate_sum / open.slots as f64,
                dwell: open.slots,
            });
        }
    }
}

/// `ζ`: predicted Wi-Fi capacity over `remaining_time` slots.
pub fn wiffler_predict(ws: &WifflerState, remaining_time: usize) -> f64 {
    (ws.predictor)(&ws.history, remaining_time)
}

/// Wi-Fi in coverage; otherwise wait if `ζ ≥ θ·k`, else cellular.
///
/// The prediction horizon is the slots after the current one, `T − t`.
pub fn wiffler_decide(
    ws: &WifflerState,
    model: &NetworkModel,
    spec: &ProblemSpec,
    s: State,
    t: usize,
) -> Action {
    if s.k == 0 {
        return Action::Idle;
    }
    if model.has_wifi(s.l) {
        return Action::WiFi;
    }
    let zeta = wiffler_predict(ws, spec.horizon().saturating_sub(t));
    if zeta >= ws.theta * spec.data_at(s.k) {
        Action::Idle
    } else {
        Action::Cellular
    }
}

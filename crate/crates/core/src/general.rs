//! Exact finite-horizon backward induction over the full `(t, k, l)` lattice.
//!
//! `v_{T+1}(k,l) = h(k)` and, for `t = T, …, 1`,
//! `v_t(k,l) = min_a { c(k,l,a) + Σ_{l'} p(l'|l) · v_{t+1}(k − q(μ(l,a)), l') }`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{is_admissible, Action, LocationId, NetworkModel, ProblemSpec, State};

/// Default ceiling on the dense tables kept by [`solve`]: 1 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

/// Relative slack under which two action values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `v_t(k,l)` for `t ∈ 1..=T+1`, `k ∈ 0..=K/σ`, `l ∈ 1..=L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    horizon: usize,
    grid_len: usize,
    locations: usize,
    data: Vec<f64>,
}

impl ValueTable {
    pub(crate) fn filled(horizon: usize, grid_len: usize, locations: usize) -> Self {
        ValueTable {
            horizon,
            grid_len,
            locations,
            data: vec![0.0; (horizon + 1) * grid_len * locations],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of grid points, `K/σ + 1`.
    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn num_locations(&self) -> usize {
        self.locations
    }

    fn stage_len(&self) -> usize {
        self.grid_len * self.locations
    }

    /// `v_t(k,l)`.
    pub fn get(&self, t: usize, k: usize, l: LocationId) -> f64 {
        self.stage(t)[k * self.locations + l.pos()]
    }

    /// All values at stage `t`, laid out `[k][l]`.
    pub fn stage(&self, t: usize) -> &[f64] {
        assert!((1..=self.horizon + 1).contains(&t), "stage {t} out of range");
        let n = self.stage_len();
        &self.data[(t - 1) * n..t * n]
    }

    pub(crate) fn stage_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.stage_len();
        &mut self.data[(t - 1) * n..t * n]
    }

    /// Splits out the writable stage `t` and the read-only stage `t + 1`.
    pub(crate) fn stage_pair(&mut self, t: usize) -> (&mut [f64], &[f64]) {
        let n = self.stage_len();
        let (head, tail) = self.data.split_at_mut(t * n);
        (&mut head[(t - 1) * n..], &tail[..n])
    }
}

/// Decision table `δ_t(k,l)` for `t ∈ 1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    horizon: usize,
    grid_len: usize,
    locations: usize,
    data: Vec<Action>,
}

impl Policy {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn num_locations(&self) -> usize {
        self.locations
    }

    /// `δ_t(k,l)`.
    pub fn get(&self, t: usize, k: usize, l: LocationId) -> Action {
        assert!((1..=self.horizon).contains(&t), "slot {t} out of range");
        self.data[((t - 1) * self.grid_len + k) * self.locations + l.pos()]
    }

    /// The `T × (K/σ + 1)` action matrix at one location.
    pub fn location_map(&self, l: LocationId) -> Vec<Vec<Action>> {
        (1..=self.horizon)
            .map(|t| (0..self.grid_len).map(|k| self.get(t, k, l)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub policy: Policy,
    pub values: ValueTable,
}

impl Solution {
    /// `v_1(K, l_1)`: the optimal expected cost from the problem's start.
    pub fn root_value(&self, spec: &ProblemSpec) -> f64 {
        self.values
            .get(1, spec.grid_steps(), spec.initial_location())
    }
}

/// Precomputed per-location quantities so that every action value is a
/// payment plus a short weighted sum. Shared by both solvers so that equal
/// inputs yield bit-identical action values.
pub(crate) struct Evaluator<'a> {
    model: &'a NetworkModel,
    sigma: f64,
    // [location][action]
    steps: Vec<[usize; 3]>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(model: &'a NetworkModel, spec: &ProblemSpec) -> Self {
        let steps = model
            .locations()
            .map(|l| Action::ALL.map(|a| spec.transfer_steps(model.rate(l, a))))
            .collect();
        Evaluator {
            model,
            sigma: spec.sigma(),
            steps,
        }
    }

    /// `Σ_{l'} p(l'|l) · v(k, l')` over one stage laid out `[k][l]`.
    #[inline]
    pub(crate) fn expected(&self, stage: &[f64], k: usize, l: usize) -> f64 {
        let width = self.model.num_locations();
        let row = &stage[k * width..(k + 1) * width];
        self.model
            .mobility()
            .support(l)
            .iter()
            .map(|&(to, p)| p * row[to])
            .sum()
    }

    /// Action value `ψ_t(k,l,a)` given the next stage.
    #[inline]
    pub(crate) fn psi(&self, next: &[f64], k: usize, l: usize, a: Action) -> f64 {
        let pay = self.model.payment_at(l, a, k as f64 * self.sigma);
        let next_k = k.saturating_sub(self.steps[l][a.slot()]);
        pay + self.expected(next, next_k, l)
    }
}

fn preference(a: Action) -> u8 {
    match a {
        Action::WiFi => 0,
        Action::Cellular => 1,
        Action::Idle => 2,
    }
}

/// Picks one action out of a set of equally good ones: Wi-Fi, then cellular,
/// then idle. Cellular wins over idle so that the frontier `k >= k*` is weak,
/// which keeps tied columns in threshold form.
pub fn tie_break(candidates: &[Action]) -> Result<Action> {
    candidates
        .iter()
        .copied()
        .min_by_key(|&a| preference(a))
        .ok_or_else(|| Error::Internal("tie-break over an empty candidate set".into()))
}

/// Minimum over `(action, value)` pairs with deterministic tie handling.
/// Values within [`TIE_TOLERANCE`] (relative) of the minimum are tied.
pub(crate) fn argmin(candidates: &[(Action, f64)]) -> (Action, f64) {
    debug_assert!(!candidates.is_empty());
    let best = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::INFINITY, f64::min);
    let slack = TIE_TOLERANCE * best.abs().max(1.0);
    let mut chosen: Option<(Action, f64)> = None;
    for &(a, v) in candidates {
        if v <= best + slack && chosen.is_none_or(|(c, _)| preference(a) < preference(c)) {
            chosen = Some((a, v));
        }
    }
    chosen.expect("non-empty candidate list")
}

/// `ψ_t(k,l,a)`: immediate payment plus expected next-stage value.
///
/// `next` is the stage `t+1` slice of a [`ValueTable`] (layout `[k][l]`).
pub fn q_value(
    model: &NetworkModel,
    spec: &ProblemSpec,
    next: &[f64],
    s: State,
    a: Action,
) -> Result<f64> {
    model.check_location(s.l)?;
    if !is_admissible(model, s.l, a) {
        return Err(Error::Inadmissible {
            action: a,
            location: s.l.get(),
        });
    }
    let expected_len = (spec.grid_steps() + 1) * model.num_locations();
    if next.len() != expected_len || s.k > spec.grid_steps() {
        return Err(Error::Domain(format!(
            "stage slice of length {} does not cover the lattice ({expected_len})",
            next.len()
        )));
    }
    Ok(Evaluator::new(model, spec).psi(next, s.k, s.l.pos(), a))
}

pub(crate) fn check_budget(
    spec: &ProblemSpec,
    locations: usize,
    budget: u64,
    with_policy: bool,
) -> Result<()> {
    let cells = (spec.grid_steps() as u64 + 1) * locations as u64;
    let mut required = (spec.horizon() as u64 + 1) * cells * 8;
    if with_policy {
        required += spec.horizon() as u64 * cells;
    }
    if required > budget {
        return Err(Error::Resource { required, budget });
    }
    Ok(())
}

/// Solves the problem exactly, returning an optimal policy and the value table.
pub fn solve(model: &NetworkModel, spec: &ProblemSpec) -> Result<Solution> {
    solve_with_budget(model, spec, DEFAULT_MEMORY_BUDGET)
}

pub fn solve_with_budget(model: &NetworkModel, spec: &ProblemSpec, budget: u64) -> Result<Solution> {
    let locations = model.num_locations();
    model.check_location(spec.initial_location())?;
    check_budget(spec, locations, budget, true)?;

    let horizon = spec.horizon();
    let grid_len = spec.grid_steps() + 1;
    let eval = Evaluator::new(model, spec);

    let mut values = ValueTable::filled(horizon, grid_len, locations);
    {
        let terminal = values.stage_mut(horizon + 1);
        for (k, &h) in spec.penalty_table().iter().enumerate() {
            terminal[k * locations..(k + 1) * locations].fill(h);
        }
    }
    let mut policy = vec![Action::Idle; horizon * grid_len * locations];

    let mut candidates = Vec::with_capacity(3);
    for t in (1..=horizon).rev() {
        let (current, next) = values.stage_pair(t);
        let decisions = &mut policy[(t - 1) * grid_len * locations..t * grid_len * locations];
        for l in 0..locations {
            let wifi = model.has_wifi(LocationId::from_zero_based(l));
            for k in 0..grid_len {
                let cell = k * locations + l;
                if k == 0 {
                    // Nothing left to send: idle, and the cost-to-go is just the
                    // expected future value of an empty file.
                    decisions[cell] = Action::Idle;
                    current[cell] = eval.psi(next, 0, l, Action::Idle);
                    continue;
                }
                candidates.clear();
                candidates.push((Action::Idle, eval.psi(next, k, l, Action::Idle)));
                candidates.push((Action::Cellular, eval.psi(next, k, l, Action::Cellular)));
                if wifi {
                    candidates.push((Action::WiFi, eval.psi(next, k, l, Action::WiFi)));
                }
                let (a, v) = argmin(&candidates);
                decisions[cell] = a;
                current[cell] = v;
            }
        }
    }

    Ok(Solution {
        policy: Policy {
            horizon,
            grid_len,
            locations,
            data: policy,
        },
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinkParams, Mobility, PenaltyFn};

    fn single_location(rate: f64, price: f64) -> NetworkModel {
        NetworkModel::new(
            Mobility::identity(1).unwrap(),
            &[],
            &[LinkParams {
                cellular_rate: rate,
                wifi_rate: 0.0,
                cellular_price: price,
                wifi_price: 0.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn tie_break_prefers_progress() {
        assert_eq!(tie_break(&[Action::Idle, Action::WiFi]).unwrap(), Action::WiFi);
        assert_eq!(tie_break(&[Action::Cellular]).unwrap(), Action::Cellular);
        assert_eq!(
            tie_break(&[Action::Idle, Action::Cellular]).unwrap(),
            Action::Cellular
        );
        assert!(matches!(tie_break(&[]), Err(Error::Internal(_))));
    }

    #[test]
    fn argmin_respects_tolerance() {
        let (a, _) = argmin(&[(Action::Idle, 1.0), (Action::Cellular, 1.0 + 1e-15)]);
        assert_eq!(a, Action::Cellular);
        let (a, _) = argmin(&[(Action::Idle, 1.0), (Action::Cellular, 1.0 + 1e-6)]);
        assert_eq!(a, Action::Idle);
    }

    #[test]
    fn idle_at_last_slot_costs_the_penalty() {
        let m = single_location(1.0, 1.0);
        let spec =
            ProblemSpec::on_grid(3, 1, 1.0, PenaltyFn::Quadratic { b: 2.0 }, LocationId::new(1))
                .unwrap();
        let sol = solve(&m, &spec).unwrap();
        let next = sol.values.stage(2);
        let q = q_value(&m, &spec, next, State::new(3, LocationId::new(1)), Action::Idle).unwrap();
        assert_eq!(q, 18.0);
    }

    #[test]
    fn one_step_deterministic_transfer() {
        // K = σ, μ = σ: sending costs exactly the payment, the penalty vanishes.
        let m = single_location(1.0, 0.25);
        let spec =
            ProblemSpec::on_grid(1, 1, 1.0, PenaltyFn::Quadratic { b: 1.0 }, LocationId::new(1))
                .unwrap();
        let sol = solve(&m, &spec).unwrap();
        let q = q_value(
            &m,
            &spec,
            sol.values.stage(2),
            State::new(1, LocationId::new(1)),
            Action::Cellular,
        )
        .unwrap();
        assert_eq!(q, 0.25);
        assert_eq!(sol.root_value(&spec), 0.25);
        assert_eq!(sol.policy.get(1, 1, LocationId::new(1)), Action::Cellular);
    }

    #[test]
    fn empty_file_is_free() {
        let m = single_location(1.0, 1.0);
        let spec =
            ProblemSpec::on_grid(0, 4, 1.0, PenaltyFn::Step { z: 5.0 }, LocationId::new(1)).unwrap();
        let sol = solve(&m, &spec).unwrap();
        for t in 1..=4 {
            assert_eq!(sol.policy.get(t, 0, LocationId::new(1)), Action::Idle);
        }
        for t in 1..=5 {
            assert_eq!(sol.values.get(t, 0, LocationId::new(1)), 0.0);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let m = single_location(1.0, 1.0);
        let spec =
            ProblemSpec::on_grid(1000, 100, 1.0, PenaltyFn::Step { z: 5.0 }, LocationId::new(1))
                .unwrap();
        match solve_with_budget(&m, &spec, 1024) {
            Err(Error::Resource { required, budget }) => {
                assert_eq!(budget, 1024);
                assert_eq!(required, 101 * 1001 * 8 + 100 * 1001);
            }
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn q_value_rejects_inadmissible_wifi() {
        let m = single_location(1.0, 1.0);
        let spec =
            ProblemSpec::on_grid(1, 1, 1.0, PenaltyFn::Step { z: 5.0 }, LocationId::new(1)).unwrap();
        let next = vec![0.0; 2];
        assert!(matches!(
            q_value(&m, &spec, &next, State::new(1, LocationId::new(1)), Action::WiFi),
            Err(Error::Inadmissible { .. })
        ));
    }
}

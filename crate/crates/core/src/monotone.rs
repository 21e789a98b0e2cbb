//! Threshold solver for the structured regime.
//!
//! When the penalty is convex, Wi-Fi is free, cellular is charged a flat
//! `q` per slot, and both rates are the same everywhere, the optimal decision
//! at each `(l, t)` switches at most once along `k`: below a threshold
//! `k*(l,t)` the user idles (no hotspot) or uses Wi-Fi, at or above it the
//! user goes cellular. Thresholds only move down as the deadline approaches,
//! so each backward pass starts its search where the later pass found its
//! switch and evaluates a single action outside the band between the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::general::{argmin, check_budget, Evaluator, ValueTable, DEFAULT_MEMORY_BUDGET};
use crate::model::{
    Action, LinkParams, LocationId, Mobility, NetworkModel, PaymentRule, ProblemSpec, State,
};

const SAME_TOLERANCE: f64 = 1e-12;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= SAME_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// A network satisfying the structural assumptions, with the flat cellular
/// cost `q` and the location-independent rates `μ₁` (cellular) and `μ₂` (Wi-Fi).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneModel {
    network: NetworkModel,
    q: f64,
    mu1: f64,
    mu2: f64,
}

impl MonotoneModel {
    pub fn new(
        mobility: Mobility,
        wifi_locations: &[LocationId],
        q: f64,
        mu1: f64,
        mu2: f64,
    ) -> Result<Self> {
        if !(q.is_finite() && q >= 0.0) {
            return Err(Error::InvalidModel(format!("cellular slot cost {q}")));
        }
        let cellular_price = if mu1 > 0.0 { q / mu1 } else { 0.0 };
        let links = vec![
            LinkParams {
                cellular_rate: mu1,
                wifi_rate: mu2,
                cellular_price,
                wifi_price: 0.0,
            };
            mobility.size()
        ];
        let size = mobility.size();
        let network = NetworkModel::new(mobility, wifi_locations, &links)?
            .with_per_slot_cellular_cost(vec![q; size])?;
        Ok(MonotoneModel {
            network,
            q,
            mu1,
            mu2,
        })
    }

    /// Accepts a general model only if it already has the required structure.
    /// The flat cellular cost is taken from a per-slot payment rule when
    /// present, and is `μ₁ · p(l,1)` otherwise.
    pub fn from_network(model: &NetworkModel) -> Result<Self> {
        let locs: Vec<LocationId> = model.locations().collect();
        let wifi = model.wifi_locations();
        if let Some(l) = wifi
            .iter()
            .find(|&&l| model.price(l, Action::WiFi) != 0.0)
        {
            return Err(Error::Precondition {
                clause: "free Wi-Fi",
                detail: format!("Wi-Fi at location {l} is not free"),
            });
        }
        let p1 = model.price(locs[0], Action::Cellular);
        if let Some(l) = locs
            .iter()
            .find(|&&l| !same(model.price(l, Action::Cellular), p1))
        {
            return Err(Error::Precondition {
                clause: "flat cellular price",
                detail: format!("cellular price at location {l} differs from location 1"),
            });
        }
        let mu1 = model.rate(locs[0], Action::Cellular);
        if let Some(l) = locs
            .iter()
            .find(|&&l| !same(model.rate(l, Action::Cellular), mu1))
        {
            return Err(Error::Precondition {
                clause: "flat rates",
                detail: format!("cellular rate at location {l} differs from location 1"),
            });
        }
        let mu2 = wifi
            .first()
            .map(|&l| model.rate(l, Action::WiFi))
            .unwrap_or(0.0);
        if let Some(l) = wifi
            .iter()
            .find(|&&l| !same(model.rate(l, Action::WiFi), mu2))
        {
            return Err(Error::Precondition {
                clause: "flat rates",
                detail: format!("Wi-Fi rate at location {l} differs from other hotspots"),
            });
        }
        let q = match model.payment_rule() {
            PaymentRule::Usage => mu1 * p1,
            PaymentRule::PerSlotCellular { cost } => {
                if let Some(pos) = cost.iter().position(|&c| !same(c, cost[0])) {
                    return Err(Error::Precondition {
                        clause: "flat cellular price",
                        detail: format!(
                            "cellular slot cost at location {} differs from location 1",
                            pos + 1
                        ),
                    });
                }
                cost[0]
            }
        };
        Self::new(model.mobility().clone(), &wifi, q, mu1, mu2)
    }

    /// Coerces any model into the structured form by averaging: `μ₁` and the
    /// cellular price over all locations, `μ₂` over hotspots. Wi-Fi is taken
    /// as free.
    pub fn approximate(model: &NetworkModel) -> Result<Self> {
        let n = model.num_locations() as f64;
        let mu1 = model.locations().map(|l| model.rate(l, Action::Cellular)).sum::<f64>() / n;
        let p1 = model.locations().map(|l| model.price(l, Action::Cellular)).sum::<f64>() / n;
        let wifi = model.wifi_locations();
        let mu2 = if wifi.is_empty() {
            0.0
        } else {
            wifi.iter().map(|&l| model.rate(l, Action::WiFi)).sum::<f64>() / wifi.len() as f64
        };
        Self::new(model.mobility().clone(), &wifi, mu1 * p1, mu1, mu2)
    }

    /// Planning model that only knows mean rates: the hotspot layout and
    /// mobility come from `model`, rates and cellular price are given.
    pub fn with_mean_rates(
        model: &NetworkModel,
        mu1: f64,
        mu2: f64,
        cellular_price: f64,
    ) -> Result<Self> {
        Self::new(
            model.mobility().clone(),
            &model.wifi_locations(),
            mu1 * cellular_price,
            mu1,
            mu2,
        )
    }

    /// The equivalent general model, charging `q` per cellular slot.
    pub fn network(&self) -> &NetworkModel {
        &self.network
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn cellular_rate(&self) -> f64 {
        self.mu1
    }

    pub fn wifi_rate(&self) -> f64 {
        self.mu2
    }

    pub fn mode(&self, l: LocationId) -> WifiMode {
        if !self.network.has_wifi(l) {
            WifiMode::NoWifi
        } else if self.mu1 < self.mu2 {
            WifiMode::WifiFaster
        } else {
            WifiMode::WifiSlower
        }
    }
}

/// Validates the convexity clause against the problem's penalty grid.
pub fn check_penalty_convex(spec: &ProblemSpec) -> Result<()> {
    let h = spec.penalty_table();
    for (i, w) in h.windows(3).enumerate() {
        let second = w[2] - 2.0 * w[1] + w[0];
        let scale = w[2].abs().max(1.0);
        if second < -1e-12 * scale {
            return Err(Error::Precondition {
                clause: "convex penalty",
                detail: format!(
                    "penalty is not convex around grid point {} (second difference {second})",
                    i + 1
                ),
            });
        }
    }
    Ok(())
}

/// How a location's decision rule is shaped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WifiMode {
    /// No hotspot: idle below the threshold, cellular at or above.
    NoWifi,
    /// Hotspot no faster than cellular: Wi-Fi below, cellular at or above.
    WifiSlower,
    /// Hotspot faster than cellular: always Wi-Fi.
    WifiFaster,
}

/// Per-`(l, t)` file-size thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    horizon: usize,
    grid_steps: usize,
    // [l][t - 1], sentinel grid_steps + 1 for "never cellular"
    k_star: Vec<usize>,
    modes: Vec<WifiMode>,
}

impl ThresholdPolicy {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn grid_steps(&self) -> usize {
        self.grid_steps
    }

    pub fn num_locations(&self) -> usize {
        self.modes.len()
    }

    /// The "no threshold" marker, one step past the file size.
    pub fn sentinel(&self) -> usize {
        self.grid_steps + 1
    }

    /// `k*(l,t)` as a grid index; [`Self::sentinel`] when cellular is never chosen.
    pub fn k_star(&self, l: LocationId, t: usize) -> usize {
        assert!((1..=self.horizon).contains(&t), "slot {t} out of range");
        self.k_star[l.pos() * self.horizon + t - 1]
    }

    /// `k*(l,t)`, or `None` when there is no switch.
    pub fn threshold(&self, l: LocationId, t: usize) -> Option<usize> {
        let k = self.k_star(l, t);
        (k <= self.grid_steps).then_some(k)
    }

    pub fn mode(&self, l: LocationId) -> WifiMode {
        self.modes[l.pos()]
    }

    pub fn decide(&self, s: State, t: usize) -> Action {
        decide(self, s, t)
    }
}

/// Runs the backward threshold passes; returns the thresholds and the full
/// value table (which equals the general solver's on the same model).
pub fn solve_monotone(mm: &MonotoneModel, spec: &ProblemSpec) -> Result<(ThresholdPolicy, ValueTable)> {
    check_penalty_convex(spec)?;
    let model = mm.network();
    let locations = model.num_locations();
    model.check_location(spec.initial_location())?;
    check_budget(spec, locations, DEFAULT_MEMORY_BUDGET, false)?;

    let horizon = spec.horizon();
    let grid_len = spec.grid_steps() + 1;
    let eval = Evaluator::new(model, spec);
    let modes: Vec<WifiMode> = model.locations().map(|l| mm.mode(l)).collect();
    let mut values = ValueTable::filled(horizon, grid_len, locations);
    {
        let terminal = values.stage_mut(horizon + 1);
        for (k, &h) in spec.penalty_table().iter().enumerate() {
            terminal[k * locations..(k + 1) * locations].fill(h);
        }
    }
    let mut k_star = vec![0usize; locations * horizon];
    // k*(l, T+1) = 0 so the pass at T scans with both actions from the start.
    let mut later = vec![0usize; locations];
    let mut row = vec![0.0; grid_len];

    for t in (1..=horizon).rev() {
        let (current, next) = values.stage_pair(t);
        for l in 0..locations {
            let ks = pass(&eval, modes[l], l, next, later[l], &mut row);
            for (k, &v) in row.iter().enumerate() {
                current[k * locations + l] = v;
            }
            k_star[l * horizon + t - 1] = ks;
            later[l] = ks;
        }
    }

    Ok((
        ThresholdPolicy {
            horizon,
            grid_steps: spec.grid_steps(),
            k_star,
            modes,
        },
        values,
    ))
}

/// One threshold search at `(l, t)`.
///
/// `next` is stage `t+1` of the value table and `k_star_next = k*(l, t+1)`.
/// Returns `k*(l, t)` (sentinel `K/σ + 1` when absent) and the value row
/// `v_t(·, l)`.
pub fn threshold_pass(
    mm: &MonotoneModel,
    spec: &ProblemSpec,
    l: LocationId,
    next: &[f64],
    k_star_next: usize,
) -> Result<(usize, Vec<f64>)> {
    let model = mm.network();
    model.check_location(l)?;
    let expected_len = (spec.grid_steps() + 1) * model.num_locations();
    if next.len() != expected_len {
        return Err(Error::Domain(format!(
            "stage slice of length {} does not cover the lattice ({expected_len})",
            next.len()
        )));
    }
    let eval = Evaluator::new(model, spec);
    let mut row = vec![0.0; spec.grid_steps() + 1];
    let ks = pass(&eval, mm.mode(l), l.pos(), next, k_star_next, &mut row);
    Ok((ks, row))
}

fn pass(
    eval: &Evaluator<'_>,
    mode: WifiMode,
    l: usize,
    next: &[f64],
    k_star_next: usize,
    row: &mut [f64],
) -> usize {
    let sentinel = row.len();
    row[0] = eval.psi(next, 0, l, Action::Idle);
    if mode == WifiMode::WifiFaster {
        for (k, v) in row.iter_mut().enumerate().skip(1) {
            *v = eval.psi(next, k, l, Action::WiFi);
        }
        return sentinel;
    }
    let fallback = if mode == WifiMode::NoWifi {
        Action::Idle
    } else {
        Action::WiFi
    };
    let mut k_star = sentinel;
    // 0: only the fallback action can be optimal (below the later threshold);
    // 1: both compete; 2: past the switch, only cellular.
    let mut phase = u8::from(k_star_next == 0);
    for k in 1..row.len() {
        if phase == 0 && k >= k_star_next {
            phase = 1;
        }
        row[k] = match phase {
            0 => eval.psi(next, k, l, fallback),
            1 => {
                let (a, v) = argmin(&[
                    (fallback, eval.psi(next, k, l, fallback)),
                    (Action::Cellular, eval.psi(next, k, l, Action::Cellular)),
                ]);
                if a == Action::Cellular {
                    k_star = k;
                    phase = 2;
                }
                v
            }
            _ => eval.psi(next, k, l, Action::Cellular),
        };
    }
    k_star
}

/// Decision rule induced by the thresholds.
pub fn decide(tp: &ThresholdPolicy, s: State, t: usize) -> Action {
    if s.k == 0 {
        return Action::Idle;
    }
    match tp.mode(s.l) {
        WifiMode::WifiFaster => Action::WiFi,
        mode => {
            if s.k >= tp.k_star(s.l, t) {
                Action::Cellular
            } else if mode == WifiMode::NoWifi {
                Action::Idle
            } else {
                Action::WiFi
            }
        }
    }
}

/// Time threshold `t*(k,l) = min{t : k ≥ k*(l,t)}`, or `T + 1` if cellular
/// is never chosen for this `k`.
pub fn t_star_view(tp: &ThresholdPolicy, k: usize, l: LocationId) -> usize {
    if k == 0 {
        return tp.horizon + 1;
    }
    (1..=tp.horizon)
        .find(|&t| k >= tp.k_star(l, t))
        .unwrap_or(tp.horizon + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::solve;
    use crate::model::PenaltyFn;
    use crate::sim::build_grid_mobility;

    fn grid_mm(q: f64, mu1: f64, mu2: f64) -> MonotoneModel {
        let wifi: Vec<_> = [4, 11, 13, 16].iter().map(|&i| LocationId::new(i)).collect();
        MonotoneModel::new(build_grid_mobility(4, 4, 0.6).unwrap(), &wifi, q, mu1, mu2).unwrap()
    }

    fn small_spec(b: f64) -> ProblemSpec {
        ProblemSpec::on_grid(20, 20, 1.0, PenaltyFn::Quadratic { b }, LocationId::new(1)).unwrap()
    }

    #[test]
    fn faster_wifi_means_always_wifi() {
        let mm = grid_mm(1.0, 1.0, 2.0);
        let spec = small_spec(10.0);
        let (tp, _) = solve_monotone(&mm, &spec).unwrap();
        let l = LocationId::new(4);
        assert_eq!(tp.mode(l), WifiMode::WifiFaster);
        for t in 1..=20 {
            assert_eq!(tp.threshold(l, t), None);
            for k in 1..=20 {
                assert_eq!(decide(&tp, State::new(k, l), t), Action::WiFi);
            }
        }
    }

    #[test]
    fn decision_rule_matches_threshold_shape() {
        let mm = grid_mm(1.0, 2.0, 1.0);
        let spec = small_spec(10.0);
        let (tp, _) = solve_monotone(&mm, &spec).unwrap();
        for l in mm.network().locations() {
            for t in 1..=20 {
                let ks = tp.k_star(l, t);
                for k in 1..=20 {
                    let a = decide(&tp, State::new(k, l), t);
                    let below = if mm.network().has_wifi(l) { Action::WiFi } else { Action::Idle };
                    assert_eq!(a, if k >= ks { Action::Cellular } else { below });
                }
                assert_eq!(decide(&tp, State::new(0, l), t), Action::Idle);
            }
        }
    }

    #[test]
    fn last_slot_threshold_with_steep_penalty() {
        // ψ_T(σ, l, idle) = h(σ) = 10 > ψ_T(σ, l, cellular) = q + h(0) = 1.
        let mm = grid_mm(1.0, 2.0, 1.0);
        let spec = small_spec(10.0);
        let (tp, _) = solve_monotone(&mm, &spec).unwrap();
        assert!(tp.k_star(LocationId::new(1), 20) <= 1);
    }

    #[test]
    fn no_switch_reports_sentinel() {
        // Zero penalty: never worth paying for cellular.
        let mm = grid_mm(1.0, 2.0, 1.0);
        let spec = small_spec(0.0);
        let (tp, _) = solve_monotone(&mm, &spec).unwrap();
        for t in 1..=20 {
            assert_eq!(tp.k_star(LocationId::new(1), t), 21);
            assert_eq!(tp.threshold(LocationId::new(1), t), None);
        }
    }

    #[test]
    fn t_star_view_edges() {
        let mm = grid_mm(1.0, 2.0, 1.0);
        let spec = small_spec(10.0);
        let (tp, _) = solve_monotone(&mm, &spec).unwrap();
        let l = LocationId::new(1);
        assert_eq!(t_star_view(&tp, 0, l), 21);
        if let Some(k1) = tp.threshold(l, 1) {
            assert_eq!(t_star_view(&tp, k1, l), 1);
        }
        for k in 1..20 {
            assert!(t_star_view(&tp, k, l) >= t_star_view(&tp, k + 1, l));
        }
    }

    #[test]
    fn values_match_general_solver() {
        let mm = grid_mm(1.0, 2.0, 1.0);
        let spec = small_spec(10.0);
        let (_, v) = solve_monotone(&mm, &spec).unwrap();
        let sol = solve(mm.network(), &spec).unwrap();
        assert_eq!(v, sol.values);
    }

    #[test]
    fn threshold_pass_matches_full_solve() {
        let mm = grid_mm(1.0, 2.0, 1.0);
        let spec = small_spec(10.0);
        let (tp, v) = solve_monotone(&mm, &spec).unwrap();
        let l = LocationId::new(11);
        let (ks, row) = threshold_pass(&mm, &spec, l, v.stage(6), tp.k_star(l, 6)).unwrap();
        assert_eq!(ks, tp.k_star(l, 5));
        for (k, &x) in row.iter().enumerate() {
            assert_eq!(x, v.get(5, k, l));
        }
    }

    #[test]
    fn assumption_violations_name_the_clause() {
        let step = ProblemSpec::on_grid(5, 3, 1.0, PenaltyFn::Step { z: 10.0 }, LocationId::new(1))
            .unwrap();
        match solve_monotone(&grid_mm(1.0, 2.0, 1.0), &step) {
            Err(Error::Precondition { clause, .. }) => assert_eq!(clause, "convex penalty"),
            other => panic!("{other:?}"),
        }

        let mobility = build_grid_mobility(1, 2, 0.5).unwrap();
        let link = |c: f64, w: f64, pc: f64, pw: f64| LinkParams {
            cellular_rate: c,
            wifi_rate: w,
            cellular_price: pc,
            wifi_price: pw,
        };
        let wifi = [LocationId::new(2)];
        let paid_wifi = NetworkModel::new(
            mobility.clone(),
            &wifi,
            &[link(2.0, 1.0, 1.0, 0.0), link(2.0, 1.0, 1.0, 0.5)],
        )
        .unwrap();
        assert!(matches!(
            MonotoneModel::from_network(&paid_wifi),
            Err(Error::Precondition { clause: "free Wi-Fi", .. })
        ));
        let price_varies = NetworkModel::new(
            mobility.clone(),
            &wifi,
            &[link(2.0, 1.0, 1.0, 0.0), link(2.0, 1.0, 2.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            MonotoneModel::from_network(&price_varies),
            Err(Error::Precondition { clause: "flat cellular price", .. })
        ));
        let rate_varies = NetworkModel::new(
            mobility.clone(),
            &wifi,
            &[link(2.0, 1.0, 1.0, 0.0), link(3.0, 1.0, 1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            MonotoneModel::from_network(&rate_varies),
            Err(Error::Precondition { clause: "flat rates", .. })
        ));
        let fine = NetworkModel::new(
            mobility,
            &wifi,
            &[link(2.0, 1.0, 0.5, 0.0), link(2.0, 5.0, 0.5, 0.0)],
        )
        .unwrap();
        let mm = MonotoneModel::from_network(&fine).unwrap();
        assert_eq!(mm.q(), 1.0);
        assert_eq!(mm.wifi_rate(), 5.0);
        let avg = MonotoneModel::approximate(&rate_varies).unwrap();
        assert_eq!(avg.cellular_rate(), 2.5);
    }
}

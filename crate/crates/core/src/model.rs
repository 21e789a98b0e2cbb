//! Domain types for the offloading decision problem.
//!
//! A mobile user has `K` units of data to upload within `T` slots. In every
//! slot it either idles, transmits over cellular, or (where a hotspot is in
//! range) transmits over Wi-Fi. The remaining data lives on a grid of step
//! `σ`; every per-slot transfer is quantized down to that grid so planned and
//! realized trajectories walk the same lattice.
//!
//! The library is unit-agnostic: rates, sizes and `σ` only have to share one
//! data unit. The scenario layer in [`crate::sim`] uses megabits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when validating probability rows.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Slack added before flooring a quotient onto the grid, so that e.g. `2.0 / 1.0`
/// is not truncated to `1` by representation error.
const GRID_EPS: f64 = 1e-9;

/// Location index, 1-based as in `{1, …, L}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocationId(usize);

impl LocationId {
    /// Creates a location id from its 1-based index.
    ///
    /// # Panics
    /// Panics if `index == 0`.
    pub fn new(index: usize) -> Self {
        assert!(index >= 1, "location ids are 1-based");
        LocationId(index)
    }

    /// Creates a location id from a 0-based array position.
    pub fn from_zero_based(pos: usize) -> Self {
        LocationId(pos + 1)
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// 0-based array position.
    pub fn pos(self) -> usize {
        self.0 - 1
    }
}

impl std::fmt::Display for LocationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-slot transmission decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    Idle = 0,
    Cellular = 1,
    WiFi = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Idle, Action::Cellular, Action::WiFi];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Action> {
        match code {
            0 => Some(Action::Idle),
            1 => Some(Action::Cellular),
            2 => Some(Action::WiFi),
            _ => None,
        }
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

const WITH_WIFI: [Action; 3] = [Action::Idle, Action::Cellular, Action::WiFi];
const WITHOUT_WIFI: [Action; 2] = [Action::Idle, Action::Cellular];

/// Row-stochastic location transition matrix `p(l'|l)`.
///
/// Stored densely for lookups and as a sparse support list per row for the
/// expectation sums in the solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mobility {
    size: usize,
    dense: Vec<f64>,
    support: Vec<Vec<(usize, f64)>>,
}

impl Mobility {
    /// Builds the chain from dense rows; row `i` holds `p(·|i+1)`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidModel("mobility matrix has no rows".into()));
        }
        let mut dense = Vec::with_capacity(size * size);
        let mut support = Vec::with_capacity(size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidModel(format!(
                    "mobility row {} has {} entries, expected {size}",
                    i + 1,
                    row.len()
                )));
            }
            let mut sum = 0.0;
            let mut sparse = Vec::new();
            for (j, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "p({}|{}) = {p} is not a probability",
                        j + 1,
                        i + 1
                    )));
                }
                sum += p;
                if p > 0.0 {
                    sparse.push((j, p));
                }
            }
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "mobility row {} sums to {sum}",
                    i + 1
                )));
            }
            dense.extend(row);
            support.push(sparse);
        }
        Ok(Mobility {
            size,
            dense,
            support,
        })
    }

    /// The chain that never leaves its starting location.
    pub fn identity(size: usize) -> Result<Self> {
        let rows = (0..size)
            .map(|i| (0..size).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `p(to|from)`.
    pub fn prob(&self, from: LocationId, to: LocationId) -> f64 {
        self.dense[from.pos() * self.size + to.pos()]
    }

    /// Non-zero entries of row `from` as `(0-based target, probability)`.
    pub fn support(&self, from: usize) -> &[(usize, f64)] {
        &self.support[from]
    }
}

/// Rates (data per slot) and prices (money per data unit) at one location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub cellular_rate: f64,
    pub wifi_rate: f64,
    pub cellular_price: f64,
    pub wifi_price: f64,
}

/// How a transmitting slot is charged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PaymentRule {
    /// `min{k, μ(l,a)} · p(l,a)`: pay for what is actually sent.
    Usage,
    /// Cellular costs a flat amount per slot regardless of the remaining data
    /// (the approximation used by the threshold solver); Wi-Fi stays usage based.
    PerSlotCellular { cost: Vec<f64> },
}

/// Locations, hotspot coverage, mobility, and per-location rates and prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    wifi: Vec<bool>,
    mobility: Mobility,
    // indexed by [location][action]
    rates: Vec<[f64; 3]>,
    prices: Vec<[f64; 3]>,
    payment_rule: PaymentRule,
}

impl NetworkModel {
    /// `links[i]` describes location `i + 1`. Wi-Fi parameters of locations
    /// outside `wifi_locations` are ignored and stored as zero.
    pub fn new(
        mobility: Mobility,
        wifi_locations: &[LocationId],
        links: &[LinkParams],
    ) -> Result<Self> {
        let n = mobility.size();
        if links.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} link descriptions for {n} locations",
                links.len()
            )));
        }
        let mut wifi = vec![false; n];
        for &l in wifi_locations {
            if l.get() > n {
                return Err(Error::InvalidModel(format!(
                    "Wi-Fi location {l} outside 1..={n}"
                )));
            }
            wifi[l.pos()] = true;
        }
        let mut rates = Vec::with_capacity(n);
        let mut prices = Vec::with_capacity(n);
        for (i, link) in links.iter().enumerate() {
            for (name, v) in [
                ("cellular rate", link.cellular_rate),
                ("Wi-Fi rate", link.wifi_rate),
                ("cellular price", link.cellular_price),
                ("Wi-Fi price", link.wifi_price),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "{name} at location {} is {v}",
                        i + 1
                    )));
                }
            }
            let (wr, wp) = if wifi[i] {
                (link.wifi_rate, link.wifi_price)
            } else {
                (0.0, 0.0)
            };
            rates.push([0.0, link.cellular_rate, wr]);
            prices.push([0.0, link.cellular_price, wp]);
        }
        Ok(NetworkModel {
            wifi,
            mobility,
            rates,
            prices,
            payment_rule: PaymentRule::Usage,
        })
    }

    /// Switches cellular charging to a flat per-slot cost, one entry per location.
    pub fn with_per_slot_cellular_cost(mut self, cost: Vec<f64>) -> Result<Self> {
        if cost.len() != self.num_locations() {
            return Err(Error::InvalidModel(format!(
                "{} per-slot costs for {} locations",
                cost.len(),
                self.num_locations()
            )));
        }
        if let Some(c) = cost.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidModel(format!("per-slot cellular cost {c}")));
        }
        self.payment_rule = PaymentRule::PerSlotCellular { cost };
        Ok(self)
    }

    pub fn num_locations(&self) -> usize {
        self.wifi.len()
    }

    pub fn locations(&self) -> impl Iterator<Item = LocationId> {
        (0..self.num_locations()).map(LocationId::from_zero_based)
    }

    pub fn mobility(&self) -> &Mobility {
        &self.mobility
    }

    pub fn payment_rule(&self) -> &PaymentRule {
        &self.payment_rule
    }

    pub fn has_wifi(&self, l: LocationId) -> bool {
        self.wifi[l.pos()]
    }

    pub fn wifi_locations(&self) -> Vec<LocationId> {
        self.locations().filter(|&l| self.has_wifi(l)).collect()
    }

    /// `μ(l,a)`, data per slot. Zero for idle.
    pub fn rate(&self, l: LocationId, a: Action) -> f64 {
        self.rates[l.pos()][a.slot()]
    }

    /// `p(l,a)`, money per data unit. Zero for idle.
    pub fn price(&self, l: LocationId, a: Action) -> f64 {
        self.prices[l.pos()][a.slot()]
    }

    pub fn check_location(&self, l: LocationId) -> Result<()> {
        if l.get() > self.num_locations() {
            Err(Error::Domain(format!(
                "location {l} outside 1..={}",
                self.num_locations()
            )))
        } else {
            Ok(())
        }
    }

    pub(crate) fn payment_at(&self, l: usize, a: Action, k_data: f64) -> f64 {
        match a {
            Action::Idle => 0.0,
            Action::Cellular => match &self.payment_rule {
                PaymentRule::Usage => k_data.min(self.rates[l][1]) * self.prices[l][1],
                PaymentRule::PerSlotCellular { cost } => cost[l],
            },
            Action::WiFi => k_data.min(self.rates[l][2]) * self.prices[l][2],
        }
    }
}

/// Terminal penalty `h(k)` for data still pending after the deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PenaltyFn {
    /// `b·k²`, with `k` in the model's data unit.
    Quadratic { b: f64 },
    /// `Z` for any `k > 0`.
    Step { z: f64 },
    /// Explicit values on the grid `0, σ, …, K`.
    Custom { values: Vec<f64> },
}

impl PenaltyFn {
    fn tabulate(&self, grid_len: usize, sigma: f64) -> Result<Vec<f64>> {
        let table: Vec<f64> = match self {
            PenaltyFn::Quadratic { b } => {
                if !(b.is_finite() && *b >= 0.0) {
                    return Err(Error::InvalidModel(format!("quadratic coefficient {b}")));
                }
                (0..grid_len)
                    .map(|i| {
                        let k = i as f64 * sigma;
                        b * k * k
                    })
                    .collect()
            }
            PenaltyFn::Step { z } => {
                if !(z.is_finite() && *z >= 0.0) {
                    return Err(Error::InvalidModel(format!("step penalty {z}")));
                }
                (0..grid_len).map(|i| if i == 0 { 0.0 } else { *z }).collect()
            }
            PenaltyFn::Custom { values } => {
                if values.len() != grid_len {
                    return Err(Error::InvalidModel(format!(
                        "custom penalty has {} values, grid has {grid_len} points",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        if table.first().is_some_and(|&h0| h0 != 0.0) {
            return Err(Error::InvalidModel("penalty must satisfy h(0) = 0".into()));
        }
        for (i, w) in table.windows(2).enumerate() {
            if !(w[1].is_finite()) || w[1] < w[0] {
                return Err(Error::InvalidModel(format!(
                    "penalty decreases between grid points {i} and {}",
                    i + 1
                )));
            }
        }
        Ok(table)
    }
}

/// Raised when the file size had to be rounded up onto the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingWarning {
    pub requested: f64,
    pub rounded: f64,
}

impl std::fmt::Display for RoundingWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "file size {} is not a multiple of the grid step; rounded up to {}",
            self.requested, self.rounded
        )
    }
}

/// File size, deadline, grid step, penalty, and starting location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    grid_steps: usize,
    sigma: f64,
    horizon: usize,
    penalty: PenaltyFn,
    penalty_table: Vec<f64>,
    initial_location: LocationId,
}

impl ProblemSpec {
    /// Builds a problem; a file size that is not a multiple of `sigma` is
    /// rounded up and reported through the returned warning.
    pub fn new(
        file_size: f64,
        horizon: usize,
        sigma: f64,
        penalty: PenaltyFn,
        initial_location: LocationId,
    ) -> Result<(Self, Option<RoundingWarning>)> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidModel(format!("grid step {sigma} must be > 0")));
        }
        if !(file_size.is_finite() && file_size >= 0.0) {
            return Err(Error::InvalidModel(format!("file size {file_size}")));
        }
        if horizon == 0 {
            return Err(Error::InvalidModel("horizon must be at least one slot".into()));
        }
        let ratio = file_size / sigma;
        let nearest = ratio.round();
        let (grid_steps, warning) = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            (nearest as usize, None)
        } else {
            let steps = ratio.ceil() as usize;
            (
                steps,
                Some(RoundingWarning {
                    requested: file_size,
                    rounded: steps as f64 * sigma,
                }),
            )
        };
        let penalty_table = penalty.tabulate(grid_steps + 1, sigma)?;
        Ok((
            ProblemSpec {
                grid_steps,
                sigma,
                horizon,
                penalty,
                penalty_table,
                initial_location,
            },
            warning,
        ))
    }

    /// Convenience constructor for sizes already expressed in grid steps.
    pub fn on_grid(
        grid_steps: usize,
        horizon: usize,
        sigma: f64,
        penalty: PenaltyFn,
        initial_location: LocationId,
    ) -> Result<Self> {
        Self::new(grid_steps as f64 * sigma, horizon, sigma, penalty, initial_location).map(|r| r.0)
    }

    /// `K`, the file size in data units.
    pub fn file_size(&self) -> f64 {
        self.grid_steps as f64 * self.sigma
    }

    /// `K / σ`.
    pub fn grid_steps(&self) -> usize {
        self.grid_steps
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `T`, the number of decision slots.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn penalty_fn(&self) -> &PenaltyFn {
        &self.penalty
    }

    pub fn initial_location(&self) -> LocationId {
        self.initial_location
    }

    pub fn with_initial_location(mut self, l: LocationId) -> Self {
        self.initial_location = l;
        self
    }

    /// Data represented by grid index `k`.
    pub fn data_at(&self, k: usize) -> f64 {
        k as f64 * self.sigma
    }

    /// `h` on the grid, indexed by grid step.
    pub fn penalty_table(&self) -> &[f64] {
        &self.penalty_table
    }

    /// Maps an amount of data to its grid index, failing if it is off the grid.
    pub fn grid_index(&self, data: f64) -> Result<usize> {
        let ratio = data / self.sigma;
        let idx = ratio.round();
        if !(data >= 0.0) || (ratio - idx).abs() > 1e-9 * idx.max(1.0) {
            return Err(Error::Domain(format!(
                "{data} is not on the grid of step {}",
                self.sigma
            )));
        }
        let idx = idx as usize;
        if idx > self.grid_steps {
            return Err(Error::Domain(format!(
                "{data} exceeds the file size {}",
                self.file_size()
            )));
        }
        Ok(idx)
    }

    /// Number of whole grid steps a transfer of `amount` covers: `floor(amount / σ)`.
    pub fn transfer_steps(&self, amount: f64) -> usize {
        if amount <= 0.0 {
            0
        } else {
            (amount / self.sigma + GRID_EPS).floor() as usize
        }
    }

    /// Remaining data after one slot: `[k − σ·floor(transfer/σ)]⁺`.
    pub fn next_file_size(&self, k: f64, transfer: f64) -> f64 {
        let moved = self.transfer_steps(transfer) as f64 * self.sigma;
        (k - moved).max(0.0)
    }
}

/// Remaining data (as a grid index) and current location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    /// Remaining data in grid steps: the amount is `k · σ`.
    pub k: usize,
    pub l: LocationId,
}

impl State {
    pub fn new(k: usize, l: LocationId) -> Self {
        State { k, l }
    }
}

/// Actions available at `l`: Wi-Fi only where a hotspot is in range.
pub fn admissible_actions(model: &NetworkModel, l: LocationId) -> Result<&'static [Action]> {
    model.check_location(l)?;
    Ok(if model.has_wifi(l) {
        &WITH_WIFI
    } else {
        &WITHOUT_WIFI
    })
}

pub fn is_admissible(model: &NetworkModel, l: LocationId, a: Action) -> bool {
    a != Action::WiFi || model.has_wifi(l)
}

fn check_admissible(model: &NetworkModel, l: LocationId, a: Action) -> Result<()> {
    model.check_location(l)?;
    if is_admissible(model, l, a) {
        Ok(())
    } else {
        Err(Error::Inadmissible {
            action: a,
            location: l.get(),
        })
    }
}

/// Money charged for taking `a` in state `s`.
pub fn payment(model: &NetworkModel, spec: &ProblemSpec, s: State, a: Action) -> Result<f64> {
    check_admissible(model, s.l, a)?;
    Ok(model.payment_at(s.l.pos(), a, spec.data_at(s.k)))
}

/// `h(k)` for an on-grid amount of pending data.
pub fn penalty(spec: &ProblemSpec, k: f64) -> Result<f64> {
    let idx = spec.grid_index(k)?;
    Ok(spec.penalty_table[idx])
}

/// Successor distribution: remaining data moves deterministically, location
/// follows the mobility chain.
pub fn transition_dist(
    model: &NetworkModel,
    spec: &ProblemSpec,
    s: State,
    a: Action,
) -> Result<Vec<(State, f64)>> {
    check_admissible(model, s.l, a)?;
    if s.k > spec.grid_steps() {
        return Err(Error::Domain(format!("state k = {} beyond file size", s.k)));
    }
    let next_k = s
        .k
        .saturating_sub(spec.transfer_steps(model.rate(s.l, a)));
    Ok(model
        .mobility()
        .support(s.l.pos())
        .iter()
        .map(|&(to, p)| (State::new(next_k, LocationId::from_zero_based(to)), p))
        .collect())
}

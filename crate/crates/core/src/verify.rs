//! Structural property checks on solved instances.
//!
//! Apart from `lemma1a` and `oracle`, every property concerns the structured
//! model (free Wi-Fi, flat cellular price and rates, convex penalty, flat
//! per-slot cellular cost). Such checks run on [`MonotoneModel::network`],
//! i.e. with the flat per-slot cellular charge, and are skipped with the
//! violated clause when the instance does not have that structure.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::general::{solve, Evaluator, Solution};
use crate::model::{Action, LocationId, NetworkModel, ProblemSpec, State};
use crate::monotone::{check_penalty_convex, MonotoneModel, WifiMode};
use crate::oracle::{self, expectimax};

/// Relative slack for value comparisons.
pub const VALUE_TOLERANCE: f64 = 1e-9;
/// Quadruples drawn per instance for the cross-difference check.
pub const CROSS_DIFFERENCE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    /// `v_t(k,l)` non-decreasing in `k`.
    Lemma1a,
    /// `v_t(k,l)` non-decreasing in `t`.
    Lemma1b,
    /// Wi-Fi never worse than idle; always Wi-Fi when it is at least as fast.
    Lemma2,
    /// Single switch along `k` and along `t`, in the prescribed direction.
    Theorem2,
    /// `k*(l,t−1) ≥ k*(l,t)` and `t*(k,l) ≥ t*(k+σ,l)`.
    Theorem3,
    /// Agreement with brute-force expectimax (tiny instances only).
    Oracle,
    /// Sub/superadditivity of action values on sampled quadruples.
    CrossDifference,
    /// Value increments in `k` are non-decreasing in `t`.
    TimeIncrement,
}

impl Property {
    pub const ALL: [Property; 8] = [
        Property::Lemma1a,
        Property::Lemma1b,
        Property::Lemma2,
        Property::Theorem2,
        Property::Theorem3,
        Property::Oracle,
        Property::CrossDifference,
        Property::TimeIncrement,
    ];

    /// What `all` expands to: the lemma and theorem statements plus the
    /// oracle. The intermediate proof steps must be named explicitly.
    pub const STATEMENTS: [Property; 6] = [
        Property::Lemma1a,
        Property::Lemma1b,
        Property::Lemma2,
        Property::Theorem2,
        Property::Theorem3,
        Property::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Lemma1a => "lemma1a",
            Property::Lemma1b => "lemma1b",
            Property::Lemma2 => "lemma2",
            Property::Theorem2 => "theorem2",
            Property::Theorem3 => "theorem3",
            Property::Oracle => "oracle",
            Property::CrossDifference => "cross-difference",
            Property::TimeIncrement => "time-increment",
        }
    }

    pub fn parse_list(text: &str) -> Result<Vec<Property>> {
        if text.trim() == "all" {
            return Ok(Property::STATEMENTS.to_vec());
        }
        text.split(',').map(|s| s.trim().parse()).collect()
    }

    fn needs_structure(self) -> bool {
        !matches!(self, Property::Lemma1a | Property::Oracle)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown property `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Pass,
    Fail { counterexample: String },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub property: Property,
    pub outcome: Outcome,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn failed(&self) -> bool {
        matches!(self.outcome, Outcome::Fail { .. })
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Outcome::Pass => write!(f, "{}: pass", self.property),
            Outcome::Fail { counterexample } => write!(f, "{}: FAIL at {counterexample}", self.property),
            Outcome::Skipped { reason } => write!(f, "{}: skipped ({reason})", self.property),
        }
    }
}

fn le(a: f64, b: f64) -> bool {
    a <= b + VALUE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

fn verdict(first_failure: Option<String>) -> Outcome {
    match first_failure {
        None => Outcome::Pass,
        Some(counterexample) => Outcome::Fail { counterexample },
    }
}

/// The structured model and its exact solution.
pub struct Structured {
    pub model: MonotoneModel,
    pub solution: Solution,
}

impl Structured {
    /// Fails with [`Error::Precondition`] naming the violated clause.
    pub fn new(model: &NetworkModel, spec: &ProblemSpec) -> Result<Self> {
        check_penalty_convex(spec)?;
        let mm = MonotoneModel::from_network(model)?;
        let solution = solve(mm.network(), spec)?;
        Ok(Structured { model: mm, solution })
    }
}

/// Runs the requested properties. `seed` drives the sampled checks.
pub fn verify(model: &NetworkModel, spec: &ProblemSpec, properties: &[Property], seed: u64) -> Result<Vec<Report>> {
    let general = properties
        .contains(&Property::Lemma1a)
        .then(|| solve(model, spec))
        .transpose()?;
    let structured = if properties.iter().any(|p| p.needs_structure()) {
        match Structured::new(model, spec) {
            Ok(s) => Ok(s),
            Err(Error::Precondition { clause, detail }) => Err(format!("requires {clause}: {detail}")),
            Err(e) => return Err(e),
        }
    } else {
        Err(String::new())
    };

    let mut reports = Vec::with_capacity(properties.len());
    for &property in properties {
        let outcome = match property {
            Property::Lemma1a => verdict(lemma1a(&general.as_ref().expect("solved above").values, spec)),
            Property::Oracle => oracle_check(model, spec)?,
            p => match &structured {
                Err(reason) => Outcome::Skipped {
                    reason: reason.clone(),
                },
                Ok(st) => verdict(match p {
                    Property::Lemma1b => lemma1b(st, spec),
                    Property::Lemma2 => lemma2(st, spec),
                    Property::Theorem2 => theorem2(st, spec),
                    Property::Theorem3 => theorem3(st, spec),
                    Property::CrossDifference => cross_difference(st, spec, seed),
                    Property::TimeIncrement => time_increment(st, spec),
                    Property::Lemma1a | Property::Oracle => unreachable!(),
                }),
            },
        };
        reports.push(Report { property, outcome });
    }
    Ok(reports)
}

fn locations(spec_locations: usize) -> impl Iterator<Item = LocationId> {
    (0..spec_locations).map(LocationId::from_zero_based)
}

/// `v_t(k,l) ≤ v_t(k+σ,l)` everywhere.
pub fn lemma1a(values: &crate::general::ValueTable, spec: &ProblemSpec) -> Option<String> {
    for t in 1..=spec.horizon() {
        for l in locations(values.num_locations()) {
            for k in 0..spec.grid_steps() {
                let (a, b) = (values.get(t, k, l), values.get(t, k + 1, l));
                if !le(a, b) {
                    return Some(format!("t={t} k={k} l={l}: v={a} > v(k+σ)={b}"));
                }
            }
        }
    }
    None
}

/// `v_t(k,l) ≤ v_{t+1}(k,l)` everywhere, including against the terminal stage.
pub fn lemma1b(st: &Structured, spec: &ProblemSpec) -> Option<String> {
    let v = &st.solution.values;
    for t in 1..=spec.horizon() {
        for l in locations(v.num_locations()) {
            for k in 0..=spec.grid_steps() {
                let (a, b) = (v.get(t, k, l), v.get(t + 1, k, l));
                if !le(a, b) {
                    return Some(format!("t={t} k={k} l={l}: v_t={a} > v_t+1={b}"));
                }
            }
        }
    }
    None
}

pub fn lemma2(st: &Structured, spec: &ProblemSpec) -> Option<String> {
    let net = st.model.network();
    let eval = Evaluator::new(net, spec);
    let faster = st.model.cellular_rate() <= st.model.wifi_rate();
    for t in 1..=spec.horizon() {
        let next = st.solution.values.stage(t + 1);
        for l in net.wifi_locations() {
            for k in 0..=spec.grid_steps() {
                let idle = eval.psi(next, k, l.pos(), Action::Idle);
                let wifi = eval.psi(next, k, l.pos(), Action::WiFi);
                if !le(wifi, idle) {
                    return Some(format!("t={t} k={k} l={l}: ψ(Wi-Fi)={wifi} > ψ(idle)={idle}"));
                }
                let chosen = st.solution.policy.get(t, k, l);
                if faster && k > 0 && chosen != Action::WiFi {
                    return Some(format!("t={t} k={k} l={l}: chose {chosen:?} with μ₁ ≤ μ₂"));
                }
            }
        }
    }
    None
}

fn fallback(mode: WifiMode) -> Action {
    match mode {
        WifiMode::NoWifi => Action::Idle,
        _ => Action::WiFi,
    }
}

/// First grid index `k ≥ 1` with cellular at `(l,t)`, or `K/σ + 1`.
pub fn k_star_from_policy(solution: &Solution, spec: &ProblemSpec, l: LocationId, t: usize) -> usize {
    (1..=spec.grid_steps())
        .find(|&k| solution.policy.get(t, k, l) == Action::Cellular)
        .unwrap_or(spec.grid_steps() + 1)
}

/// First slot with cellular at `(k,l)`, or `T + 1`.
pub fn t_star_from_policy(solution: &Solution, spec: &ProblemSpec, k: usize, l: LocationId) -> usize {
    (1..=spec.horizon())
        .find(|&t| solution.policy.get(t, k, l) == Action::Cellular)
        .unwrap_or(spec.horizon() + 1)
}

pub fn theorem2(st: &Structured, spec: &ProblemSpec) -> Option<String> {
    let pol = &st.solution.policy;
    for l in locations(pol.num_locations()) {
        let mode = st.model.mode(l);
        let base = fallback(mode);
        for t in 1..=spec.horizon() {
            let ks = k_star_from_policy(&st.solution, spec, l, t);
            for k in 1..=spec.grid_steps() {
                let expected = if mode != WifiMode::WifiFaster && k >= ks {
                    Action::Cellular
                } else {
                    base
                };
                let got = pol.get(t, k, l);
                if got != expected {
                    return Some(format!("t={t} k={k} l={l}: {got:?} breaks the k-threshold (k*={ks})"));
                }
            }
        }
        for k in 1..=spec.grid_steps() {
            let ts = t_star_from_policy(&st.solution, spec, k, l);
            for t in ts..=spec.horizon() {
                if pol.get(t, k, l) != Action::Cellular {
                    return Some(format!("t={t} k={k} l={l}: not cellular after t*={ts}"));
                }
            }
        }
    }
    None
}

pub fn theorem3(st: &Structured, spec: &ProblemSpec) -> Option<String> {
    for l in locations(st.solution.policy.num_locations()) {
        for t in 2..=spec.horizon() {
            let (earlier, later) = (
                k_star_from_policy(&st.solution, spec, l, t - 1),
                k_star_from_policy(&st.solution, spec, l, t),
            );
            if earlier < later {
                return Some(format!("l={l} t={t}: k*(t−1)={earlier} < k*(t)={later}"));
            }
        }
        for k in 1..spec.grid_steps() {
            let (small, large) = (
                t_star_from_policy(&st.solution, spec, k, l),
                t_star_from_policy(&st.solution, spec, k + 1, l),
            );
            if small < large {
                return Some(format!("l={l} k={k}: t*(k)={small} < t*(k+σ)={large}"));
            }
        }
    }
    None
}

/// The non-cellular action competing with cellular at `l`, if any.
fn rival(mode: WifiMode) -> Option<Action> {
    match mode {
        WifiMode::NoWifi => Some(Action::Idle),
        WifiMode::WifiSlower => Some(Action::WiFi),
        WifiMode::WifiFaster => None,
    }
}

/// Subadditivity on `{idle, cellular}` without Wi-Fi and superadditivity on
/// `{cellular, Wi-Fi}` with it. Both say `ψ(k,l,1) − ψ(k,l,j)` is
/// non-increasing in `k`.
pub fn cross_difference(st: &Structured, spec: &ProblemSpec, seed: u64) -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = st.model.network().num_locations();
    let eval = Evaluator::new(st.model.network(), spec);
    for _ in 0..CROSS_DIFFERENCE_SAMPLES {
        let t = rng.random_range(1..=spec.horizon());
        let l = LocationId::from_zero_based(rng.random_range(0..n));
        let a = rng.random_range(0..=spec.grid_steps());
        let b = rng.random_range(0..=spec.grid_steps());
        let (hi, lo) = (a.max(b), a.min(b));
        let Some(j) = rival(st.model.mode(l)) else {
            continue;
        };
        let next = st.solution.values.stage(t + 1);
        let psi = |k: usize, a: Action| eval.psi(next, k, l.pos(), a);
        let c = Action::Cellular;
        let lhs = psi(hi, c) + psi(lo, j);
        let rhs = psi(hi, j) + psi(lo, c);
        if !le(lhs, rhs) {
            return Some(format!(
                "t={t} l={l} k̂={hi} ǩ={lo} actions {{{j:?}, Cellular}}: {lhs} vs {rhs}"
            ));
        }
    }
    None
}

pub fn time_increment(st: &Structured, spec: &ProblemSpec) -> Option<String> {
    let v = &st.solution.values;
    let steps_c = spec.transfer_steps(st.model.cellular_rate());
    for l in locations(v.num_locations()) {
        let steps_j = match st.model.mode(l) {
            WifiMode::NoWifi => 0,
            WifiMode::WifiSlower => spec.transfer_steps(st.model.wifi_rate()),
            WifiMode::WifiFaster => continue,
        };
        for t in 1..=spec.horizon() {
            for k in 0..=spec.grid_steps() {
                let (kj, kc) = (k.saturating_sub(steps_j), k.saturating_sub(steps_c));
                let now = v.get(t, kj, l) - v.get(t, kc, l);
                let later = v.get(t + 1, kj, l) - v.get(t + 1, kc, l);
                if !le(now, later) {
                    return Some(format!("t={t} k={k} l={l}: increment {now} > {later} at t+1"));
                }
            }
        }
    }
    None
}

fn oracle_check(model: &NetworkModel, spec: &ProblemSpec) -> Result<Outcome> {
    if model.num_locations() > oracle::MAX_LOCATIONS
        || spec.horizon() > oracle::MAX_HORIZON
        || spec.grid_steps() > oracle::MAX_GRID_STEPS
    {
        return Ok(Outcome::Skipped {
            reason: format!(
                "instance larger than the brute-force limits (L ≤ {}, T ≤ {}, K/σ ≤ {})",
                oracle::MAX_LOCATIONS,
                oracle::MAX_HORIZON,
                oracle::MAX_GRID_STEPS
            ),
        });
    }
    let sol = solve(model, spec)?;
    for l in model.locations() {
        let k = spec.grid_steps();
        let brute = expectimax(model, spec, State::new(k, l), 1)?;
        let dp = sol.values.get(1, k, l);
        let chosen = sol.policy.get(1, k, l);
        if !((dp - brute.optimal_value).abs() <= VALUE_TOLERANCE * brute.optimal_value.abs().max(1.0)) {
            return Ok(Outcome::Fail {
                counterexample: format!("t=1 k={k} l={l}: dp {dp} vs brute force {}", brute.optimal_value),
            });
        }
        if k > 0 && !brute.optimal_actions.contains(&chosen) {
            return Ok(Outcome::Fail {
                counterexample: format!(
                    "t=1 k={k} l={l}: dp chose {chosen:?}, optimal set {:?}",
                    brute.optimal_actions
                ),
            });
        }
    }
    Ok(Outcome::Pass)
}

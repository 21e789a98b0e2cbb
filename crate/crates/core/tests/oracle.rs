//! The DP and the expectimax oracle against exhaustive enumeration of
//! deterministic Markov policies, plus a hand-computed case.

mod common;

use offload_core::model::{admissible_actions, payment, transition_dist};
use offload_core::oracle::expectimax;
use offload_core::{
    solve, Action, LinkParams, LocationId, Mobility, NetworkModel, PenaltyFn, ProblemSpec, State,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Decision points `(t, k, l)` with `k ≥ 1`; `k = 0` always idles.
fn decision_points(model: &NetworkModel, spec: &ProblemSpec) -> Vec<(usize, usize, LocationId)> {
    let mut v = Vec::new();
    for t in 1..=spec.horizon() {
        for k in 1..=spec.grid_steps() {
            for l in model.locations() {
                v.push((t, k, l));
            }
        }
    }
    v
}

fn evaluate(
    model: &NetworkModel,
    spec: &ProblemSpec,
    choice: &dyn Fn(usize, usize, LocationId) -> Action,
    s: State,
    t: usize,
) -> f64 {
    if t > spec.horizon() {
        return spec.penalty_table()[s.k];
    }
    let a = if s.k == 0 { Action::Idle } else { choice(t, s.k, s.l) };
    let mut total = payment(model, spec, s, a).unwrap();
    for (next, p) in transition_dist(model, spec, s, a).unwrap() {
        total += p * evaluate(model, spec, choice, next, t + 1);
    }
    total
}

/// Minimum over every deterministic Markov policy of its exact expected cost.
fn best_policy_value(model: &NetworkModel, spec: &ProblemSpec) -> f64 {
    let points = decision_points(model, spec);
    let menus: Vec<&[Action]> = points
        .iter()
        .map(|&(_, _, l)| admissible_actions(model, l).unwrap())
        .collect();
    let count: usize = menus.iter().map(|m| m.len()).product();
    assert!(count <= 200_000, "enumeration too large: {count}");
    let s0 = State::new(spec.grid_steps(), spec.initial_location());
    let mut best = f64::INFINITY;
    for mut code in 0..count {
        let mut pick = Vec::with_capacity(points.len());
        for m in &menus {
            pick.push(m[code % m.len()]);
            code /= m.len();
        }
        let choice = |t: usize, k: usize, l: LocationId| {
            let i = points.iter().position(|&p| p == (t, k, l)).unwrap();
            pick[i]
        };
        best = best.min(evaluate(model, spec, &choice, s0, 1));
    }
    best
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn two_locations_two_slots_by_enumeration() {
    let mobility = Mobility::from_rows(vec![vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap();
    let links = [
        LinkParams {
            cellular_rate: 1.0,
            wifi_rate: 0.0,
            cellular_price: 1.5,
            wifi_price: 0.0,
        },
        LinkParams {
            cellular_rate: 2.0,
            wifi_rate: 1.0,
            cellular_price: 1.0,
            wifi_price: 0.2,
        },
    ];
    let model = NetworkModel::new(mobility, &[LocationId::new(2)], &links).unwrap();
    for penalty in [
        PenaltyFn::Quadratic { b: 0.8 },
        PenaltyFn::Step { z: 3.0 },
        PenaltyFn::Custom { values: vec![0.0, 0.5, 4.0] },
    ] {
        for start in model.locations() {
            let spec = ProblemSpec::on_grid(2, 2, 1.0, penalty.clone(), start).unwrap();
            let dp = solve(&model, &spec).unwrap().root_value(&spec);
            let enumerated = best_policy_value(&model, &spec);
            let oracle = expectimax(&model, &spec, State::new(2, start), 1).unwrap().optimal_value;
            assert!(close(dp, enumerated), "{penalty:?} l={start}: dp {dp} vs enumeration {enumerated}");
            assert!(close(oracle, enumerated), "{penalty:?} l={start}: oracle {oracle} vs {enumerated}");
        }
    }
}

#[test]
fn single_slot_by_hand() {
    // One location, 3 Mbit left, 2 Mbit per cellular slot at 0.5 per Mbit,
    // penalty 2·k² on what is left after the slot.
    let links = [LinkParams {
        cellular_rate: 2.0,
        wifi_rate: 0.0,
        cellular_price: 0.5,
        wifi_price: 0.0,
    }];
    let model = NetworkModel::new(Mobility::identity(1).unwrap(), &[], &links).unwrap();
    let spec = ProblemSpec::on_grid(3, 1, 1.0, PenaltyFn::Quadratic { b: 2.0 }, LocationId::new(1)).unwrap();
    let sol = solve(&model, &spec).unwrap();
    // idle: 2·9 = 18; cellular: 2·0.5 + 2·1 = 3
    assert!(close(sol.root_value(&spec), 3.0));
    assert_eq!(sol.policy.get(1, 3, LocationId::new(1)), Action::Cellular);
    // with 1 Mbit left: idle 2, cellular 0.5 (charged for 1 Mbit only)
    assert!(close(sol.values.get(1, 1, LocationId::new(1)), 0.5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_matches_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, spec) = common::random_general(&mut rng, 2, 2, 2);
        let dp = solve(&model, &spec).unwrap().root_value(&spec);
        let enumerated = best_policy_value(&model, &spec);
        prop_assert!(close(dp, enumerated), "dp {} vs enumeration {}", dp, enumerated);
    }

    #[test]
    fn oracle_matches_dp_everywhere(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, spec) = common::random_general(&mut rng, 3, 4, 4);
        let sol = solve(&model, &spec).unwrap();
        for t in 1..=spec.horizon() {
            for k in 0..=spec.grid_steps() {
                for l in model.locations() {
                    let o = expectimax(&model, &spec, State::new(k, l), t).unwrap();
                    let v = sol.values.get(t, k, l);
                    prop_assert!(close(v, o.optimal_value), "t={} k={} l={}: {} vs {}", t, k, l, v, o.optimal_value);
                    prop_assert!(k == 0 || o.optimal_actions.contains(&sol.policy.get(t, k, l)));
                }
            }
        }
    }
}

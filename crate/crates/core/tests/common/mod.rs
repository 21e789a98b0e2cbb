//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use offload_core::sim::{sample_instance, Instance, ScenarioConfig};
use offload_core::{LinkParams, LocationId, Mobility, MonotoneModel, NetworkModel, PenaltyFn, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn load_config(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_path(config_path(name)).unwrap()
}

/// The configured instance; only valid for configs without random draws.
pub fn fixed_instance(name: &str) -> Instance {
    let cfg = load_config(name);
    assert_eq!(cfg.rate_std_mbps, 0.0);
    assert!(cfg.wifi_locations.is_some() && cfg.initial_location.is_some());
    sample_instance(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
}

/// Row-stochastic matrix where each row keeps a random subset of entries.
pub fn random_mobility(rng: &mut ChaCha8Rng, n: usize) -> Mobility {
    let rows = (0..n)
        .map(|_| {
            let mut w: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.6) { rng.random_range(0.05..1.0) } else { 0.0 })
                .collect();
            if w.iter().all(|&x| x == 0.0) {
                w[rng.random_range(0..n)] = 1.0;
            }
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        })
        .collect();
    Mobility::from_rows(rows).unwrap()
}

pub fn random_wifi(rng: &mut ChaCha8Rng, n: usize) -> Vec<LocationId> {
    (1..=n).filter(|_| rng.random_bool(0.5)).map(LocationId::new).collect()
}

pub fn random_penalty(rng: &mut ChaCha8Rng, steps: usize) -> PenaltyFn {
    match rng.random_range(0..3) {
        0 => PenaltyFn::Quadratic {
            b: rng.random_range(0.0..5.0),
        },
        1 => PenaltyFn::Step {
            z: rng.random_range(0.0..50.0),
        },
        _ => {
            let mut v = vec![0.0];
            for _ in 0..steps {
                let last = *v.last().unwrap();
                v.push(last + rng.random_range(0.0..10.0));
            }
            PenaltyFn::Custom { values: v }
        }
    }
}

/// Unstructured instance: location-dependent rates and prices, any penalty,
/// usage or per-slot cellular charging.
pub fn random_general(rng: &mut ChaCha8Rng, max_l: usize, max_t: usize, max_steps: usize) -> (NetworkModel, ProblemSpec) {
    let n = rng.random_range(1..=max_l);
    let sigma = [1.0, 0.5, 2.0][rng.random_range(0..3)];
    let links: Vec<LinkParams> = (0..n)
        .map(|_| LinkParams {
            cellular_rate: rng.random_range(0.0..3.5) * sigma,
            wifi_rate: rng.random_range(0.0..3.5) * sigma,
            cellular_price: rng.random_range(0.0..2.0),
            wifi_price: if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..1.0) },
        })
        .collect();
    let mut model = NetworkModel::new(random_mobility(rng, n), &random_wifi(rng, n), &links).unwrap();
    if rng.random_bool(0.3) {
        let cost = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        model = model.with_per_slot_cellular_cost(cost).unwrap();
    }
    let steps = rng.random_range(1..=max_steps);
    let horizon = rng.random_range(1..=max_t);
    let spec = ProblemSpec::on_grid(
        steps,
        horizon,
        sigma,
        random_penalty(rng, steps),
        LocationId::new(rng.random_range(1..=n)),
    )
    .unwrap();
    (model, spec)
}

/// Structured instance with a convex quadratic penalty and `μ₂ ≤ μ₁`.
pub fn random_structured(
    rng: &mut ChaCha8Rng,
    max_l: usize,
    max_t: usize,
    max_steps: usize,
) -> (MonotoneModel, ProblemSpec) {
    let n = rng.random_range(1..=max_l);
    let mu1 = rng.random_range(1..=4) as f64;
    let mu2 = rng.random_range(0..=mu1 as usize) as f64;
    let mm = MonotoneModel::new(
        random_mobility(rng, n),
        &random_wifi(rng, n),
        rng.random_range(0.1..3.0),
        mu1,
        mu2,
    )
    .unwrap();
    let steps = rng.random_range(1..=max_steps);
    let spec = ProblemSpec::on_grid(
        steps,
        rng.random_range(1..=max_t),
        1.0,
        PenaltyFn::Quadratic {
            b: rng.random_range(0.01..3.0),
        },
        LocationId::new(rng.random_range(1..=n)),
    )
    .unwrap();
    (mm, spec)
}

//! Random problem instances on a grid of cells.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{LinkParams, LocationId, Mobility, NetworkModel, ProblemSpec, RoundingWarning};
use crate::sim::config::{PaymentKind, ScenarioConfig};

/// Random walk on a `rows × cols` grid, cells numbered row-major from 1.
///
/// The user stays with probability `p_stay` and otherwise moves to one of the
/// horizontal or vertical neighbours with equal probability. Edges do not wrap.
pub fn build_grid_mobility(rows: usize, cols: usize, p_stay: f64) -> Result<Mobility> {
    if rows == 0 || cols == 0 {
        return Err(Error::Domain(format!("{rows}×{cols} grid has no cells")));
    }
    if !(0.0..=1.0).contains(&p_stay) {
        return Err(Error::Domain(format!("p_stay = {p_stay} is not a probability")));
    }
    let n = rows * cols;
    let mut matrix = vec![vec![0.0; n]; n];
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            let mut neighbours = Vec::with_capacity(4);
            if r > 0 {
                neighbours.push(i - cols);
            }
            if r + 1 < rows {
                neighbours.push(i + cols);
            }
            if c > 0 {
                neighbours.push(i - 1);
            }
            if c + 1 < cols {
                neighbours.push(i + 1);
            }
            if neighbours.is_empty() {
                matrix[i][i] = 1.0;
                continue;
            }
            matrix[i][i] = p_stay;
            let share = (1.0 - p_stay) / neighbours.len() as f64;
            for j in neighbours {
                matrix[i][j] = share;
            }
        }
    }
    Mobility::from_rows(matrix)
}

/// Normal(mean, std) conditioned on `[0, ∞)`, by rejection.
///
/// `mean` must be non-negative so that at least half the proposals are kept.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, std: f64) -> f64 {
    debug_assert!(mean >= 0.0);
    if std <= 0.0 {
        return mean.max(0.0);
    }
    let normal = Normal::new(mean, std).expect("finite positive standard deviation");
    loop {
        let x = normal.sample(rng);
        if x >= 0.0 {
            return x;
        }
    }
}

/// One randomized scenario.
#[derive(Debug, Clone)]
pub struct Instance {
    pub model: NetworkModel,
    pub spec: ProblemSpec,
    /// Set when the file size had to be rounded up onto the σ grid.
    pub warning: Option<RoundingWarning>,
}

/// Draws hotspots, static per-location rates and the starting cell.
///
/// Draw order from `rng`: `L` uniforms for hotspots, one cell index, then one
/// seed each for the cellular and the Wi-Fi rate generators. Rejection
/// sampling consumes a variable number of draws, so the two rate families get
/// their own generators; configurations that differ only in one rate mean
/// then share every other draw.
pub fn sample_instance<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Instance> {
    cfg.validate()?;
    let n = cfg.num_locations();
    let mobility = build_grid_mobility(cfg.grid_rows, cfg.grid_cols, cfg.p_stay)?;

    let coin: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let wifi: Vec<LocationId> = match &cfg.wifi_locations {
        Some(list) => list.iter().map(|&l| LocationId::new(l)).collect(),
        None => (0..n)
            .filter(|&i| coin[i] < cfg.wifi_prob)
            .map(LocationId::from_zero_based)
            .collect(),
    };

    let drawn = LocationId::from_zero_based(rng.random_range(0..n));
    let mut cellular_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let mut wifi_rng = ChaCha8Rng::seed_from_u64(rng.random());

    let std = cfg.rate_std_per_slot();
    let mut links = Vec::with_capacity(n);
    for i in 0..n {
        let hotspot = wifi.iter().any(|l| l.pos() == i);
        let cellular_mean = if hotspot {
            cfg.cellular_rate_at_wifi_per_slot()
        } else {
            cfg.cellular_rate_per_slot()
        };
        let cellular_rate = truncated_normal(&mut cellular_rng, cellular_mean, std);
        let wifi_rate = truncated_normal(&mut wifi_rng, cfg.wifi_rate_per_slot(), std);
        links.push(LinkParams {
            cellular_rate,
            wifi_rate,
            cellular_price: cfg.cellular_price(),
            wifi_price: cfg.wifi_price(),
        });
    }
    let mut model = NetworkModel::new(mobility, &wifi, &links)?;
    if cfg.payment == PaymentKind::PerSlot {
        let cost = cfg
            .cellular_slot_cost
            .unwrap_or(cfg.cellular_rate_per_slot() * cfg.cellular_price());
        model = model.with_per_slot_cellular_cost(vec![cost; n])?;
    }

    let initial = cfg.initial_location.map(LocationId::new).unwrap_or(drawn);
    let (spec, warning) = ProblemSpec::new(
        cfg.file_size_mbit(),
        cfg.horizon(),
        cfg.sigma_mbit,
        cfg.penalty_fn(),
        initial,
    )?;
    Ok(Instance {
        model,
        spec,
        warning,
    })
}

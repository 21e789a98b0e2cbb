//! Scenario configuration: a flat TOML key/value file.
//!
//! | key | unit | default |
//! |---|---|---|
//! | `grid_rows`, `grid_cols` | cells | 4, 4 |
//! | `p_stay` | probability | 0.6 |
//! | `wifi_prob` | probability per location | 0.5 |
//! | `wifi_locations` | list of 1-based cells, overrides `wifi_prob` | unset |
//! | `mu_c_mbps`, `mu_w_mbps` | Mbit/s (means) | 90, 20 |
//! | `mu_c_at_wifi_mbps` | Mbit/s, cellular mean at hotspot cells | `mu_c_mbps` |
//! | `rate_std_mbps` | Mbit/s | 5 |
//! | `price_cellular_per_gbyte`, `price_wifi_per_gbyte` | $/Gbyte | 6, 0 |
//! | `payment` | `"usage"` or `"per_slot"` | `"usage"` |
//! | `cellular_slot_cost` | $ per cellular slot (`per_slot` only) | rate × price |
//! | `file_size_mbytes` | Mbyte | 750 |
//! | `deadline_min` | minutes | 2 |
//! | `horizon_slots` | slots, overrides `deadline_min` | unset |
//! | `slot_seconds` | s | 10 |
//! | `sigma_mbit` | Mbit | 10 |
//! | `penalty` | `"quadratic"` or `"step"` | `"quadratic"` |
//! | `penalty_b` | $ per Mbit² | 1 |
//! | `penalty_z` | $ | 100000 |
//! | `theta`, `window` | Wiffler coefficient and history length | 1, 4 |
//! | `initial_location` | 1-based cell, unset = uniform | unset |
//! | `runs`, `seed` | | 1000, 1 |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PenaltyFn;

/// Mbit in one Gbyte.
pub const MBIT_PER_GBYTE: f64 = 8000.0;
/// Mbit in one Mbyte.
pub const MBIT_PER_MBYTE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaymentKind {
    Usage,
    PerSlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    Quadratic,
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub p_stay: f64,
    pub wifi_prob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wifi_locations: Option<Vec<usize>>,
    pub mu_c_mbps: f64,
    pub mu_w_mbps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_c_at_wifi_mbps: Option<f64>,
    pub rate_std_mbps: f64,
    pub price_cellular_per_gbyte: f64,
    pub price_wifi_per_gbyte: f64,
    pub payment: PaymentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cellular_slot_cost: Option<f64>,
    pub file_size_mbytes: f64,
    pub deadline_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_slots: Option<usize>,
    pub slot_seconds: f64,
    pub sigma_mbit: f64,
    pub penalty: PenaltyKind,
    pub penalty_b: f64,
    pub penalty_z: f64,
    pub theta: f64,
    pub window: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_location: Option<usize>,
    pub runs: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            grid_rows: 4,
            grid_cols: 4,
            p_stay: 0.6,
            wifi_prob: 0.5,
            wifi_locations: None,
            mu_c_mbps: 90.0,
            mu_w_mbps: 20.0,
            mu_c_at_wifi_mbps: None,
            rate_std_mbps: 5.0,
            price_cellular_per_gbyte: 6.0,
            price_wifi_per_gbyte: 0.0,
            payment: PaymentKind::Usage,
            cellular_slot_cost: None,
            file_size_mbytes: 750.0,
            deadline_min: 2.0,
            horizon_slots: None,
            slot_seconds: 10.0,
            sigma_mbit: 10.0,
            penalty: PenaltyKind::Quadratic,
            penalty_b: 1.0,
            penalty_z: 100_000.0,
            theta: 1.0,
            window: 4,
            initial_location: None,
            runs: 1000,
            seed: 1,
        }
    }
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}`: {msg}"))
}

fn probability(key: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(key, format!("{v} is not a probability")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("{v} must be finite and non-negative")))
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("{v} must be positive")))
    }
}

impl ScenarioConfig {
    /// Parses and validates a TOML document; missing keys take their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    pub fn num_locations(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_rows == 0 {
            return Err(invalid("grid_rows", "must be at least 1"));
        }
        if self.grid_cols == 0 {
            return Err(invalid("grid_cols", "must be at least 1"));
        }
        probability("p_stay", self.p_stay)?;
        probability("wifi_prob", self.wifi_prob)?;
        if let Some(locs) = &self.wifi_locations {
            if let Some(bad) = locs.iter().find(|&&l| l == 0 || l > self.num_locations()) {
                return Err(invalid(
                    "wifi_locations",
                    format!("cell {bad} outside 1..={}", self.num_locations()),
                ));
            }
        }
        non_negative("mu_c_mbps", self.mu_c_mbps)?;
        non_negative("mu_w_mbps", self.mu_w_mbps)?;
        if let Some(v) = self.mu_c_at_wifi_mbps {
            non_negative("mu_c_at_wifi_mbps", v)?;
        }
        non_negative("rate_std_mbps", self.rate_std_mbps)?;
        non_negative("price_cellular_per_gbyte", self.price_cellular_per_gbyte)?;
        non_negative("price_wifi_per_gbyte", self.price_wifi_per_gbyte)?;
        if let Some(q) = self.cellular_slot_cost {
            non_negative("cellular_slot_cost", q)?;
            if self.payment != PaymentKind::PerSlot {
                return Err(invalid(
                    "cellular_slot_cost",
                    "only meaningful with payment = \"per_slot\"",
                ));
            }
        }
        non_negative("file_size_mbytes", self.file_size_mbytes)?;
        positive("slot_seconds", self.slot_seconds)?;
        positive("sigma_mbit", self.sigma_mbit)?;
        match self.horizon_slots {
            Some(0) => return Err(invalid("horizon_slots", "must be at least 1")),
            Some(_) => {}
            None => {
                positive("deadline_min", self.deadline_min)?;
                let slots = 60.0 * self.deadline_min / self.slot_seconds;
                if (slots - slots.round()).abs() > 1e-9 * slots.max(1.0) || slots.round() < 1.0 {
                    return Err(invalid(
                        "deadline_min",
                        format!(
                            "60·D/Δt = {slots} is not a whole number of slots (slot_seconds = {})",
                            self.slot_seconds
                        ),
                    ));
                }
            }
        }
        non_negative("penalty_b", self.penalty_b)?;
        non_negative("penalty_z", self.penalty_z)?;
        positive("theta", self.theta)?;
        if self.window == 0 {
            return Err(invalid("window", "must be at least 1"));
        }
        if let Some(l) = self.initial_location {
            if l == 0 || l > self.num_locations() {
                return Err(invalid(
                    "initial_location",
                    format!("cell {l} outside 1..={}", self.num_locations()),
                ));
            }
        }
        if self.runs == 0 {
            return Err(invalid("runs", "must be at least 1"));
        }
        Ok(())
    }

    /// `T`: `horizon_slots` if set, otherwise `60·D/Δt`.
    pub fn horizon(&self) -> usize {
        self.horizon_slots
            .unwrap_or_else(|| (60.0 * self.deadline_min / self.slot_seconds).round() as usize)
    }

    /// Mean cellular transfer per slot, Mbit.
    pub fn cellular_rate_per_slot(&self) -> f64 {
        self.mu_c_mbps * self.slot_seconds
    }

    pub fn cellular_rate_at_wifi_per_slot(&self) -> f64 {
        self.mu_c_at_wifi_mbps.unwrap_or(self.mu_c_mbps) * self.slot_seconds
    }

    /// Mean Wi-Fi transfer per slot, Mbit.
    pub fn wifi_rate_per_slot(&self) -> f64 {
        self.mu_w_mbps * self.slot_seconds
    }

    pub fn rate_std_per_slot(&self) -> f64 {
        self.rate_std_mbps * self.slot_seconds
    }

    /// $ per Mbit.
    pub fn cellular_price(&self) -> f64 {
        self.price_cellular_per_gbyte / MBIT_PER_GBYTE
    }

    pub fn wifi_price(&self) -> f64 {
        self.price_wifi_per_gbyte / MBIT_PER_GBYTE
    }

    pub fn file_size_mbit(&self) -> f64 {
        self.file_size_mbytes * MBIT_PER_MBYTE
    }

    pub fn penalty_fn(&self) -> PenaltyFn {
        match self.penalty {
            PenaltyKind::Quadratic => PenaltyFn::Quadratic { b: self.penalty_b },
            PenaltyKind::Step => PenaltyFn::Step { z: self.penalty_z },
        }
    }
}

//! Parameter sweeps comparing schemes on common random numbers.
//!
//! Run `r` of a sweep point draws its instance from ChaCha8 stream `2r` and
//! its location path from stream `2r + 1`, both keyed by the configured seed.
//! Every scheme replays the same instance and path, and the streams do not
//! depend on the sweep value or on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::WifflerState;
use crate::error::{Error, Result};
use crate::general::solve;
use crate::model::NetworkModel;
use crate::monotone::{solve_monotone, MonotoneModel};
use crate::sim::config::ScenarioConfig;
use crate::sim::episode::{run_episode_on_path, sample_path, EpisodeResult, NoOffload, Otso};
use crate::sim::metrics::AggregateMetrics;
use crate::sim::scenario::{sample_instance, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact DP on the sampled instance.
    General,
    /// Threshold policy planned from mean rates only.
    Monotone,
    NoOffload,
    Otso,
    Wiffler,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::General,
        Scheme::Monotone,
        Scheme::NoOffload,
        Scheme::Otso,
        Scheme::Wiffler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::General => "general",
            Scheme::Monotone => "monotone",
            Scheme::NoOffload => "no-offload",
            Scheme::Otso => "otso",
            Scheme::Wiffler => "wiffler",
        }
    }

    /// Parses a comma-separated list; `all` selects every scheme.
    pub fn parse_list(text: &str) -> Result<Vec<Scheme>> {
        if text.trim() == "all" {
            return Ok(Scheme::ALL.to_vec());
        }
        text.split(',').map(|s| s.trim().parse()).collect()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// `deadline_min`, minutes.
    Deadline,
    /// `mu_w_mbps`, Mbit/s.
    WifiRate,
    /// `file_size_mbytes`, Mbyte.
    FileSize,
    PStay,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::Deadline => "deadline",
            SweepAxis::WifiRate => "mu_w",
            SweepAxis::FileSize => "file_size",
            SweepAxis::PStay => "p_stay",
        }
    }

    /// Copy of `cfg` with this axis set to `value`, validated.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut out = cfg.clone();
        match self {
            SweepAxis::Deadline => {
                out.deadline_min = value;
                out.horizon_slots = None;
            }
            SweepAxis::WifiRate => out.mu_w_mbps = value,
            SweepAxis::FileSize => out.file_size_mbytes = value,
            SweepAxis::PStay => out.p_stay = value,
        }
        out.validate()?;
        Ok(out)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepAxis::Deadline,
            SweepAxis::WifiRate,
            SweepAxis::FileSize,
            SweepAxis::PStay,
        ]
        .into_iter()
        .find(|a| a.key() == s)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown sweep axis `{s}` (expected deadline, mu_w, file_size or p_stay)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = Error;

    /// `axis=v1,v2,...`, e.g. `deadline=2,3,4,5`.
    fn from_str(s: &str) -> Result<Self> {
        let (axis, values) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep `{s}` is not of the form axis=v1,v2,...")))?;
        let axis: SweepAxis = axis.trim().parse()?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("sweep value `{v}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Config("sweep has no values".into()));
        }
        Ok(Sweep { axis, values })
    }
}

/// One `(sweep value, scheme)` line of the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub sweep_value: Option<f64>,
    pub scheme: Scheme,
    pub metrics: AggregateMetrics,
}

/// Modelling choices that the output should state explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub initial_location: String,
    pub rates: String,
    pub rng: String,
    pub seed: u64,
    pub runs: usize,
}

impl Metadata {
    fn new(cfg: &ScenarioConfig) -> Self {
        Metadata {
            initial_location: match cfg.initial_location {
                Some(l) => format!("fixed at cell {l}"),
                None => "uniform over all cells".into(),
            },
            rates: "drawn once per instance, static over the episode".into(),
            rng: "ChaCha8 seeded with `seed`; run r uses stream 2r for the instance, 2r+1 for the path"
                .into(),
            seed: cfg.seed,
            runs: cfg.runs,
        }
    }
}

/// Episodes of one sweep point, per scheme, in run order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub sweep_value: Option<f64>,
    pub episodes: Vec<(Scheme, Vec<EpisodeResult>)>,
}

impl PointResult {
    pub fn episodes(&self, scheme: Scheme) -> Option<&[EpisodeResult]> {
        self.episodes
            .iter()
            .find(|(s, _)| *s == scheme)
            .map(|(_, e)| e.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub config: ScenarioConfig,
    pub sweep_axis: Option<SweepAxis>,
    pub metadata: Metadata,
    pub rows: Vec<ExperimentRow>,
    /// Per-run results backing the rows; not serialized.
    #[serde(skip)]
    pub points: Vec<PointResult>,
}

impl ExperimentTable {
    pub fn row(&self, sweep_value: Option<f64>, scheme: Scheme) -> Option<&ExperimentRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == sweep_value && r.scheme == scheme)
    }

    pub fn point(&self, sweep_value: Option<f64>) -> Option<&PointResult> {
        self.points.iter().find(|p| p.sweep_value == sweep_value)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Instance drawn for run `run` of an experiment on `cfg`.
pub fn instance_for_run(cfg: &ScenarioConfig, run: u64) -> Result<Instance> {
    sample_instance(cfg, &mut rng_for(cfg.seed, 2 * run))
}

/// Planning model for the threshold scheme: hotspot layout and mobility of
/// the instance, but only the configured mean rates and price.
pub fn monotone_plan(cfg: &ScenarioConfig, model: &NetworkModel) -> Result<MonotoneModel> {
    let mu1 = cfg.cellular_rate_per_slot();
    let mu2 = cfg.wifi_rate_per_slot();
    let q = cfg.cellular_slot_cost.unwrap_or(mu1 * cfg.cellular_price());
    MonotoneModel::new(model.mobility().clone(), &model.wifi_locations(), q, mu1, mu2)
}

fn run_once(cfg: &ScenarioConfig, schemes: &[Scheme], run: u64) -> Result<Vec<EpisodeResult>> {
    let Instance { model, spec, .. } = instance_for_run(cfg, run)?;
    let path = sample_path(&model, &spec, &mut rng_for(cfg.seed, 2 * run + 1));
    schemes
        .iter()
        .map(|&scheme| {
            let mut e = match scheme {
                Scheme::General => {
                    let mut policy = solve(&model, &spec)?.policy;
                    run_episode_on_path(&mut policy, &model, &spec, &path)
                }
                Scheme::Monotone => {
                    let (mut tp, _) = solve_monotone(&monotone_plan(cfg, &model)?, &spec)?;
                    run_episode_on_path(&mut tp, &model, &spec, &path)
                }
                Scheme::NoOffload => run_episode_on_path(&mut NoOffload, &model, &spec, &path),
                Scheme::Otso => run_episode_on_path(&mut Otso, &model, &spec, &path),
                Scheme::Wiffler => {
                    let mut ws = WifflerState::new(cfg.theta, cfg.window);
                    run_episode_on_path(&mut ws, &model, &spec, &path)
                }
            }?;
            e.trajectory = Vec::new();
            Ok(e)
        })
        .collect()
}

/// Runs `cfg.runs` paired episodes of every scheme at one configuration.
pub fn run_point(cfg: &ScenarioConfig, schemes: &[Scheme], sweep_value: Option<f64>) -> Result<PointResult> {
    cfg.validate()?;
    let per_run: Vec<Vec<EpisodeResult>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| run_once(cfg, schemes, r))
        .collect::<Result<_>>()?;
    let episodes = schemes
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, per_run.iter().map(|run| run[i].clone()).collect()))
        .collect();
    Ok(PointResult {
        sweep_value,
        episodes,
    })
}

/// Runs every sweep point (or just `cfg` without a sweep) on `jobs` worker
/// threads (`0` = all cores). The result does not depend on `jobs`.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    schemes: &[Scheme],
    sweep: Option<&Sweep>,
    jobs: usize,
) -> Result<ExperimentTable> {
    cfg.validate()?;
    if schemes.is_empty() {
        return Err(Error::Config("no schemes selected".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let points = pool.install(|| -> Result<Vec<PointResult>> {
        match sweep {
            None => Ok(vec![run_point(cfg, schemes, None)?]),
            Some(sw) => sw
                .values
                .iter()
                .map(|&v| run_point(&sw.axis.apply(cfg, v)?, schemes, Some(v)))
                .collect(),
        }
    })?;
    let rows = points
        .iter()
        .flat_map(|p| {
            p.episodes.iter().map(|(s, e)| ExperimentRow {
                sweep_value: p.sweep_value,
                scheme: *s,
                metrics: AggregateMetrics::from_episodes(e),
            })
        })
        .collect();
    Ok(ExperimentTable {
        config: cfg.clone(),
        sweep_axis: sweep.map(|s| s.axis),
        metadata: Metadata::new(cfg),
        rows,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            grid_rows: 2,
            grid_cols: 2,
            file_size_mbytes: 25.0,
            mu_c_mbps: 5.0,
            mu_w_mbps: 2.0,
            rate_std_mbps: 0.5,
            deadline_min: 1.0,
            runs: 30,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "deadline=2,3,4,5".parse().unwrap();
        assert_eq!(s.axis, SweepAxis::Deadline);
        assert_eq!(s.values, vec![2.0, 3.0, 4.0, 5.0]);
        assert!("speed=1".parse::<Sweep>().is_err());
        assert!("deadline".parse::<Sweep>().is_err());
        assert!("mu_w=1,x".parse::<Sweep>().is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!(Scheme::parse_list("all").unwrap().len(), 5);
        assert!(Scheme::parse_list("general,bogus").is_err());
    }

    #[test]
    fn table_shape_and_thread_independence() {
        let sweep: Sweep = "deadline=1,2".parse().unwrap();
        let a = run_experiment(&small(), &Scheme::ALL, Some(&sweep), 1).unwrap();
        let b = run_experiment(&small(), &Scheme::ALL, Some(&sweep), 3).unwrap();
        assert_eq!(a.rows.len(), 10);
        assert_eq!(a, b);
    }

    #[test]
    fn single_run_row_equals_episode() {
        let cfg = ScenarioConfig { runs: 1, ..small() };
        let t = run_experiment(&cfg, &[Scheme::Otso], None, 1).unwrap();
        let e = &t.points[0].episodes[0].1[0];
        let m = &t.rows[0].metrics;
        assert_eq!(m.cost.mean, e.total_cost);
        assert_eq!(m.payment.mean, e.total_payment);
        assert_eq!(m.completion.mean, f64::from(u8::from(e.completed)));
    }

    #[test]
    fn completion_iff_no_penalty() {
        let t = run_experiment(&small(), &Scheme::ALL, None, 0).unwrap();
        for (_, eps) in &t.points[0].episodes {
            for e in eps {
                assert_eq!(e.completed, e.penalty_paid == 0.0);
                assert!((e.total_cost - e.total_payment - e.penalty_paid).abs() < 1e-12);
                assert!(e.slots_cellular + e.slots_wifi + e.slots_waiting <= t.config.horizon());
            }
        }
    }
}

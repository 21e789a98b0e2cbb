//! Monte-Carlo experiments: scenario configuration, random instances,
//! episode execution and aggregate metrics.

pub mod config;
pub mod episode;
pub mod experiment;
pub mod metrics;
pub mod scenario;

pub use config::ScenarioConfig;
pub use episode::{run_episode, run_episode_on_path, sample_path, Decider, EpisodeResult, NoOffload, Otso, Step};
pub use experiment::{instance_for_run, monotone_plan, run_experiment, run_point, ExperimentRow, ExperimentTable, Scheme, Sweep, SweepAxis};
pub use metrics::{paired_difference, AggregateMetrics, MeanCi};
pub use scenario::{build_grid_mobility, sample_instance, truncated_normal, Instance};

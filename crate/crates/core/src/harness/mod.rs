//! Episodes, baselines and the seeded experiment matrix.
//!
//! Each episode owns one `ChaCha8Rng` seeded from its episode seed, so a
//! given seed yields the same scene for every policy and the same result on
//! any thread count.

mod config;
mod episode;
mod experiment;
mod pose;

pub use config::{ExperimentConfig, Policy, PoseConfig, RunPoint, Stage};
pub use episode::{random_walk_policy, run_episode, Diagnostics, EpisodeResult};
pub use experiment::{episode_seeds, run_experiment, run_point, write_csv, PointSummary, CSV_HEADER};

use std::io::{self, Write};

use rayon::prelude::*;

use super::config::{ExperimentConfig, RunPoint, Stage};
use super::episode::{run_episode, EpisodeResult};
use crate::avs2d::ObservationModel;
use crate::error::{AvsError, Result};

/// Fixed CSV header.
pub const CSV_HEADER: &str = "policy,obs_model,stage,n_sim,particles,episodes,found,mean_steps,std_steps,mean_time_s,failures";

/// Aggregate of one experiment point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub point: RunPoint,
    pub obs_model: ObservationModel,
    pub stage: Stage,
    pub episodes: usize,
    pub found: usize,
    /// Over successful episodes only; `None` when nothing was found.
    pub mean_steps: Option<f64>,
    /// Sample standard deviation over successful episodes.
    pub std_steps: Option<f64>,
    pub mean_time_s: f64,
    pub failures: usize,
}

impl PointSummary {
    pub fn from_results(cfg: &ExperimentConfig, point: RunPoint, results: &[EpisodeResult]) -> Self {
        let steps: Vec<f64> = results.iter().filter(|r| r.found).map(|r| r.steps as f64).collect();
        let n = steps.len() as f64;
        let mean_steps = (!steps.is_empty()).then(|| steps.iter().sum::<f64>() / n);
        let std_steps = mean_steps.map(|m| {
            if steps.len() < 2 {
                0.0
            } else {
                (steps.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            }
        });
        let mean_time_s = if results.is_empty() {
            0.0
        } else {
            results.iter().map(|r| r.wall_time).sum::<f64>() / results.len() as f64
        };
        Self {
            point,
            obs_model: cfg.obs_model,
            stage: cfg.stage,
            episodes: results.len(),
            found: steps.len(),
            mean_steps,
            std_steps,
            mean_time_s,
            failures: results.len() - steps.len(),
        }
    }

    /// One CSV row, without the trailing newline. Missing statistics are
    /// written as `NaN`; with `record_time` off the time column is `0`.
    pub fn csv_row(&self, record_time: bool) -> String {
        let stat = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| format!("{x:.4}"));
        let time = if record_time {
            format!("{:.6}", self.mean_time_s)
        } else {
            "0".to_string()
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.point.policy.as_str(),
            self.obs_model.as_str(),
            self.stage.as_str(),
            self.point.n_sim,
            self.point.particles,
            self.episodes,
            self.found,
            stat(self.mean_steps),
            stat(self.std_steps),
            time,
            self.failures
        )
    }
}

/// Episode seeds for a config: `seed_base .. seed_base + episodes`, shared by
/// every point so comparisons are paired.
pub fn episode_seeds(cfg: &ExperimentConfig) -> impl Iterator<Item = u64> {
    let base = cfg.seed_base;
    (0..cfg.episodes as u64).map(move |i| base.wrapping_add(i))
}

/// Run every episode of one point in parallel, sorted by seed.
pub fn run_point(cfg: &ExperimentConfig, point: RunPoint) -> Result<Vec<EpisodeResult>> {
    let seeds: Vec<u64> = episode_seeds(cfg).collect();
    let mut out = seeds
        .par_iter()
        .map(|&s| run_episode(cfg, point, s))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|r| r.seed);
    Ok(out)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| AvsError::Config(format!("thread pool: {e}"))),
    }
}

/// Run the whole matrix and aggregate one summary per point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PointSummary>> {
    cfg.validate()?;
    with_pool(cfg.threads, || {
        cfg.points()
            .into_iter()
            .map(|p| run_point(cfg, p).map(|r| PointSummary::from_results(cfg, p, &r)))
            .collect()
    })?
}

/// Header plus one row per summary.
pub fn write_csv<W: Write>(rows: &[PointSummary], record_time: bool, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_row(record_time))?;
    }
    out.flush()
}

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::avs2d::{Footprint, MapFile, ObjectShape, ObservationModel, RewardConfig};
use crate::error::{AvsError, Result};
use crate::pomdp::SolverConfig;

/// Action-selection policy for an experiment point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    Pomcp,
    RandomWalk,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Pomcp => "pomcp",
            Policy::RandomWalk => "random",
        }
    }
}

impl FromStr for Policy {
    type Err = AvsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pomcp" => Ok(Policy::Pomcp),
            "random" | "random_walk" => Ok(Policy::RandomWalk),
            other => Err(AvsError::Config(format!("unknown policy '{other}'"))),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which stages an episode runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Stage {
    /// Search only.
    #[default]
    Search,
    /// Search followed by pose estimation.
    SearchAndPose,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Search => "2d",
            Stage::SearchAndPose => "3d",
        }
    }
}

impl FromStr for Stage {
    type Err = AvsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2d" | "search" => Ok(Stage::Search),
            "3d" | "2d+3d" | "search+pose" => Ok(Stage::SearchAndPose),
            other => Err(AvsError::Config(format!("unknown stage '{other}'"))),
        }
    }
}

/// Parameters specific to the pose-estimation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseConfig {
    pub z_levels: usize,
    /// Simulations per 3D decision.
    pub n_sim: usize,
    pub max_depth: usize,
    /// The object rests on a pedestal of up to this many cubes.
    pub max_elevation: usize,
    pub points_per_face: usize,
    /// Uniform x/y jitter as a fraction of the cell size.
    pub jitter: f64,
    pub dropout: f64,
}

impl Default for PoseConfig {
    fn default() -> Self {
        Self {
            z_levels: 5,
            n_sim: 50,
            max_depth: 10,
            max_elevation: 2,
            points_per_face: 64,
            jitter: 0.1,
            dropout: 0.05,
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub width: usize,
    pub height: usize,
    /// Fixed scene from a map file instead of random placements.
    pub map: Option<MapFile>,
    pub object: ObjectShape,
    pub footprint: Footprint,
    pub n_sims: Vec<usize>,
    pub particles: Vec<usize>,
    pub episodes: usize,
    pub p_noise: f64,
    pub rewards: RewardConfig,
    pub policies: Vec<Policy>,
    pub obs_model: ObservationModel,
    pub stage: Stage,
    pub seed_base: u64,
    pub max_steps: usize,
    /// Template for the planner; `n_sim`, `particles` and `seed` are set per point.
    pub solver: SolverConfig,
    pub pose: PoseConfig,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Write measured wall time to the CSV. When false the column is 0 and
    /// the output is byte-reproducible.
    pub record_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            width: 20,
            height: 20,
            map: None,
            object: ObjectShape::l(),
            footprint: Footprint::default(),
            n_sims: vec![4, 10, 25, 50, 100, 200],
            particles: vec![200],
            episodes: 100,
            p_noise: 0.0,
            rewards: RewardConfig::default(),
            policies: vec![Policy::Pomcp, Policy::RandomWalk],
            obs_model: ObservationModel::Grid,
            stage: Stage::Search,
            seed_base: 0,
            max_steps: 200,
            solver: SolverConfig::default(),
            pose: PoseConfig::default(),
            threads: None,
            record_time: true,
        }
    }
}

/// One `(policy, n_sim, K)` cell of the experiment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunPoint {
    pub policy: Policy,
    pub n_sim: usize,
    pub particles: usize,
}

impl RunPoint {
    pub fn pomcp(n_sim: usize, particles: usize) -> Self {
        Self {
            policy: Policy::Pomcp,
            n_sim,
            particles,
        }
    }

    pub fn random_walk() -> Self {
        Self {
            policy: Policy::RandomWalk,
            n_sim: 0,
            particles: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AvsError::Config(m));
        if self.episodes < 1 {
            return bad("episodes must be >= 1".into());
        }
        if self.n_sims.is_empty() || self.n_sims.iter().any(|n| *n < 1) {
            return bad("every n_sim must be >= 1".into());
        }
        if self.particles.is_empty() || self.particles.iter().any(|k| *k < 1) {
            return bad("every particle count must be >= 1".into());
        }
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        if !(0.0..=1.0).contains(&self.p_noise) {
            return bad(format!("noise probability {} outside [0, 1]", self.p_noise));
        }
        if self.width < 1 || self.height < 1 {
            return bad("grid dimensions must be >= 1".into());
        }
        if self.pose.z_levels < 1 {
            return bad("z_levels must be >= 1".into());
        }
        if self.pose.max_elevation + 1 > self.pose.z_levels {
            return bad("object elevation does not fit in z_levels".into());
        }
        if self.pose.n_sim < 1 {
            return bad("sims_3d must be >= 1".into());
        }
        self.rewards.validate()?;
        let probe = SolverConfig {
            n_sim: 1,
            particles: 1,
            ..self.solver.clone()
        };
        probe.validate()
    }

    /// Experiment points in emission order: every POMCP `(n_sim, K)` pair,
    /// then one random-walk row.
    pub fn points(&self) -> Vec<RunPoint> {
        let mut out = Vec::new();
        for policy in &self.policies {
            match policy {
                Policy::Pomcp => {
                    for &n in &self.n_sims {
                        for &k in &self.particles {
                            out.push(RunPoint::pomcp(n, k));
                        }
                    }
                }
                Policy::RandomWalk => out.push(RunPoint::random_walk()),
            }
        }
        out
    }

    pub fn solver_for(&self, point: &RunPoint, seed: u64) -> SolverConfig {
        SolverConfig {
            n_sim: point.n_sim.max(1),
            particles: point.particles.max(1),
            seed,
            ..self.solver.clone()
        }
    }

    /// Parse the line-oriented `key = value` format. `#` starts a comment.
    /// Relative map paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| AvsError::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            cfg.set(key.trim(), value.trim(), base_dir)
                .map_err(|e| AvsError::Config(format!("line {}: {}", lineno + 1, strip(e))))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AvsError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Set one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str, base_dir: Option<&Path>) -> Result<()> {
        match key {
            "width" => self.width = num(key, value)?,
            "height" => self.height = num(key, value)?,
            "grid" => {
                let (w, h) = pair(key, value)?;
                self.width = w;
                self.height = h;
            }
            "map" => {
                let mut path = PathBuf::from(value);
                if path.is_relative() {
                    if let Some(dir) = base_dir {
                        path = dir.join(path);
                    }
                }
                self.set_map_file(&path)?;
            }
            "object" => self.object = value.parse()?,
            "footprint" => {
                let (w, h) = pair(key, value)?;
                if w % 2 == 0 || h % 2 == 0 {
                    return Err(AvsError::Config("footprint dimensions must be odd".into()));
                }
                self.footprint = Footprint::new(w, h);
            }
            "n_sim" | "sims" => self.n_sims = list(key, value)?,
            "particles" | "k" => self.particles = list(key, value)?,
            "episodes" => self.episodes = num(key, value)?,
            "noise" | "p_noise" => self.p_noise = num(key, value)?,
            "policy" | "policies" => {
                self.policies = value.split(',').map(|s| s.parse()).collect::<Result<_>>()?;
            }
            "obs" | "obs_model" => self.obs_model = value.parse()?,
            "stage" => self.stage = value.parse()?,
            "seed" | "seed_base" => self.seed_base = num(key, value)?,
            "max_steps" => self.max_steps = num(key, value)?,
            "exploration" | "c" => self.solver.exploration = num(key, value)?,
            "gamma" => self.solver.gamma = num(key, value)?,
            "epsilon" => self.solver.epsilon = num(key, value)?,
            "max_depth" => self.solver.max_depth = num(key, value)?,
            "rejection_factor" => self.solver.rejection_factor = num(key, value)?,
            "p_action" => self.rewards.action_penalty = num(key, value)?,
            "p_reobserve" => self.rewards.reobserve_penalty = num(key, value)?,
            "r_terminal" => self.rewards.terminal = num(key, value)?,
            "r_exploration" => self.rewards.exploration = num(key, value)?,
            "r_discovery" => self.rewards.discovery = num(key, value)?,
            "r_refinement" => self.rewards.refinement = num(key, value)?,
            "z_levels" => self.pose.z_levels = num(key, value)?,
            "sims_3d" => self.pose.n_sim = num(key, value)?,
            "max_depth_3d" => self.pose.max_depth = num(key, value)?,
            "max_elevation" => self.pose.max_elevation = num(key, value)?,
            "points_per_face" => self.pose.points_per_face = num(key, value)?,
            "jitter" => self.pose.jitter = num(key, value)?,
            "dropout" => self.pose.dropout = num(key, value)?,
            "threads" => {
                let n: usize = num(key, value)?;
                self.threads = (n > 0).then_some(n);
            }
            "record_time" => self.record_time = num(key, value)?,
            other => return Err(AvsError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn set_map_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AvsError::Map(format!("cannot read {}: {e}", path.display())))?;
        let file: MapFile = text.parse()?;
        self.width = file.truth.width();
        self.height = file.truth.height();
        self.object = ObjectShape::new("map", file.object.iter().copied())?;
        self.map = Some(file);
        Ok(())
    }
}

fn strip(e: AvsError) -> String {
    match e {
        AvsError::Config(m) | AvsError::Map(m) => m,
        other => other.to_string(),
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| AvsError::Config(format!("invalid value '{value}' for '{key}'")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| num(key, v)).collect()
}

fn pair(key: &str, value: &str) -> Result<(usize, usize)> {
    let (a, b) = value
        .split_once(['x', 'X'])
        .ok_or_else(|| AvsError::Config(format!("'{key}' expects WxH, got '{value}'")))?;
    Ok((num(key, a)?, num(key, b)?))
}

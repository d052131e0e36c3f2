use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Policy, RunPoint, Stage};
use crate::avs2d::{
    apply_observation, candidate_placements, initial_belief, legal_moves, make_binary_observation, ConsistentSampler2D,
    GridMap2D, GroundTruthEnv, Observation2D, ObservationGrid2D, ObservationModel, Placement, Pos, Scene2D,
    SearchSim2D, SearchState2D,
};
use crate::error::{AvsError, Result};
use crate::pomcp::{update_belief, BeliefState, Pomcp};
use crate::pomdp::{Action, ActionSet, Simulator};

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub point: RunPoint,
    pub seed: u64,
    pub stage: Stage,
    /// Every configured stage reached its terminal predicate.
    pub found: bool,
    /// Real actions taken over all stages.
    pub steps: usize,
    pub wall_time: f64,
    /// The belief became unsatisfiable (environment contradiction).
    pub contradiction: bool,
    pub diagnostics: Diagnostics,
}

/// Extra per-episode facts used by the acceptance checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub search_found: bool,
    pub search_steps: usize,
    pub true_object: Placement,
    /// All particles hold the true object placement at the end of the search.
    pub belief_converged: Option<bool>,
    /// Believed 3D cells equal the true cells in every particle at the end.
    pub pose_correct: Option<bool>,
    /// Lifting copied every particle's 2D map into level 0 bit-exactly.
    pub level0_preserved: Option<bool>,
}

/// Uniform choice among the legal moves.
pub fn random_walk_policy<R: Rng + ?Sized>(legal: ActionSet, rng: &mut R) -> Result<Action> {
    legal.sample(rng).ok_or(AvsError::Blocked)
}

/// Build the scene for `seed`. Scene draws always come first on the episode
/// stream, so every policy sees the same scene for a given seed.
pub(crate) fn scene_for(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Scene2D> {
    match &cfg.map {
        Some(file) => Scene2D::from_map_file(file, rng),
        None => Scene2D::random(cfg.width, cfg.height, &cfg.object, rng),
    }
}

/// Play one episode.
///
/// RNG draw order on the single episode stream: scene, (3D scene), initial
/// observation noise, initial belief, then per step: planning, environment
/// noise, belief update.
pub fn run_episode(cfg: &ExperimentConfig, point: RunPoint, seed: u64) -> Result<EpisodeResult> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = scene_for(cfg, &mut rng)?;
    let scene3d = match cfg.stage {
        Stage::Search => None,
        Stage::SearchAndPose => Some(super::pose::scene3d_for(cfg, &scene, &mut rng)?),
    };

    let search = run_search(cfg, point, seed, scene, &mut rng)?;
    let mut result = EpisodeResult {
        point,
        seed,
        stage: cfg.stage,
        found: search.found,
        steps: search.steps,
        wall_time: 0.0,
        contradiction: search.contradiction,
        diagnostics: Diagnostics {
            search_found: search.found,
            search_steps: search.steps,
            true_object: search.true_object.clone(),
            belief_converged: search.converged,
            ..Diagnostics::default()
        },
    };

    if let (Some(scene3d), true) = (scene3d, search.found) {
        let pose = super::pose::run_pose_stage(cfg, point, seed, &scene3d, &search, &mut rng)?;
        result.found = pose.found;
        result.steps += pose.steps;
        result.contradiction |= pose.contradiction;
        result.diagnostics.pose_correct = pose.correct;
        result.diagnostics.level0_preserved = pose.level0_preserved;
    }
    result.wall_time = started.elapsed().as_secs_f64();
    Ok(result)
}

/// State handed from the search stage to the pose stage.
pub(crate) struct SearchOutcome {
    pub found: bool,
    pub steps: usize,
    pub contradiction: bool,
    pub converged: Option<bool>,
    pub true_object: Placement,
    pub real_map: GridMap2D,
    pub agent: Pos,
    pub belief: Option<BeliefState<SearchState2D>>,
}

/// Observation the agent actually receives, and the real-map update it implies.
fn perceive(map: &mut GridMap2D, grid: &ObservationGrid2D, pose: Pos, model: ObservationModel, size: usize) -> Observation2D {
    match model {
        ObservationModel::Grid => {
            apply_observation(map, grid, pose);
            Observation2D::Grid(grid.clone())
        }
        ObservationModel::Binary => {
            let found = make_binary_observation(grid, size);
            if found {
                apply_observation(map, grid, pose);
            }
            Observation2D::Binary(found)
        }
    }
}

/// Belief-free detector used for the random walk: some placement of the shape
/// is entirely marked `Object` in the real map.
fn map_shows_object(map: &GridMap2D, scene: &Scene2D) -> bool {
    map.count(crate::avs2d::CellValue::Object) >= scene.shape.size()
        && candidate_placements(map, &scene.shape)
            .iter()
            .any(|pl| pl.iter().all(|p| map.get(*p) == Some(crate::avs2d::CellValue::Object)))
}

pub(crate) fn run_search(
    cfg: &ExperimentConfig,
    point: RunPoint,
    seed: u64,
    scene: Scene2D,
    rng: &mut ChaCha8Rng,
) -> Result<SearchOutcome> {
    let size = scene.shape.size();
    let shape = scene.shape.clone();
    let true_object = scene.object.clone();
    let sim = SearchSim2D::new(cfg.footprint, cfg.rewards, cfg.obs_model, size);
    let solver = cfg.solver_for(&point, seed);
    let mut map = GridMap2D::initial_knowledge(&scene.truth);
    let mut env = GroundTruthEnv::new(scene, cfg.footprint, cfg.p_noise, cfg.max_steps);

    let first = env.observe_true(env.agent(), rng);
    let first_obs = perceive(&mut map, &first, env.agent(), cfg.obs_model, size);

    let mut belief = match point.policy {
        Policy::Pomcp => Some(initial_belief(&map, env.agent(), &shape, solver.particles, rng)?),
        Policy::RandomWalk => None,
    };
    let scene_ref = env.scene().clone();
    let is_found = |map: &GridMap2D, obs: &Observation2D, belief: &Option<BeliefState<SearchState2D>>| match belief {
        Some(b) => b.particles().iter().all(|s| sim.is_terminal(s)),
        None => match obs {
            Observation2D::Binary(f) => *f,
            Observation2D::Grid(_) => map_shows_object(map, &scene_ref),
        },
    };
    let mut found = is_found(&map, &first_obs, &belief);
    let mut contradiction = false;

    while !found && !env.exhausted() {
        let action = match &belief {
            Some(b) => match Pomcp::new(&sim, &solver).search(b, rng) {
                Ok(out) => out.action,
                Err(AvsError::Blocked) => break,
                Err(e) => return Err(e),
            },
            None => match random_walk_policy(legal_moves(&map, env.agent()), rng) {
                Ok(a) => a,
                Err(_) => break,
            },
        };
        let grid = env.step(action, rng)?;
        let obs = perceive(&mut map, &grid, env.agent(), cfg.obs_model, size);
        if let Some(b) = belief.as_ref() {
            let mut source = ConsistentSampler2D::new(&map, env.agent(), &shape);
            match update_belief(&sim, b, action, &obs, &solver, &mut source, rng) {
                Ok((next, _)) => belief = Some(next),
                Err(AvsError::Unsatisfiable) => {
                    contradiction = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        found = is_found(&map, &obs, &belief);
    }

    let converged = belief.as_ref().filter(|_| found).map(|b| {
        b.particles().iter().all(|s| s.believed == true_object)
    });
    Ok(SearchOutcome {
        found,
        steps: env.steps(),
        contradiction,
        converged,
        true_object,
        real_map: map,
        agent: env.agent(),
        belief,
    })
}

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Policy, RunPoint};
use super::episode::{random_walk_policy, SearchOutcome};
use crate::ape3d::{
    apply_observation_3d, legal_actions_3d, lift_belief, shapes_over_footprint, CloudConfig, ConsistentSampler3D,
    GridMap3D, GroundTruthEnv3D, PoseSim3D, Scene3D, Shape3,
};
use crate::avs2d::{candidate_placements, CellValue, ObjectShape, Placement, Scene2D};
use crate::error::{AvsError, Result};
use crate::pomcp::{update_belief, BeliefState, Pomcp};
use crate::pomdp::{Simulator, SolverConfig};

pub(crate) struct PoseOutcome {
    pub found: bool,
    pub steps: usize,
    pub contradiction: bool,
    pub correct: Option<bool>,
    pub level0_preserved: Option<bool>,
}

pub(crate) fn scene3d_for(cfg: &ExperimentConfig, scene: &Scene2D, rng: &mut ChaCha8Rng) -> Result<Scene3D> {
    Scene3D::random(scene, cfg.pose.z_levels, cfg.pose.max_elevation, rng)
}

fn cloud_config(cfg: &ExperimentConfig) -> CloudConfig {
    CloudConfig {
        cell_size: 1.0,
        points_per_face: cfg.pose.points_per_face,
        jitter: cfg.pose.jitter,
        dropout: cfg.pose.dropout,
    }
}

fn pose_solver(cfg: &ExperimentConfig, point: &RunPoint, seed: u64) -> SolverConfig {
    SolverConfig {
        n_sim: cfg.pose.n_sim,
        max_depth: cfg.pose.max_depth,
        ..cfg.solver_for(point, seed)
    }
}

/// 3D hypotheses over every footprint the agent may believe in.
fn hypotheses(footprints: &BTreeSet<Placement>, z_levels: usize, cubes: usize) -> Vec<Shape3> {
    let mut all: Vec<Shape3> = footprints
        .iter()
        .flat_map(|f| shapes_over_footprint(f, z_levels, cubes))
        .collect();
    all.sort();
    all.dedup();
    all
}

/// Lift the finished search and resolve the object's height.
///
/// The pose stage gets its own step budget of `max_steps`.
pub(crate) fn run_pose_stage(
    cfg: &ExperimentConfig,
    point: RunPoint,
    seed: u64,
    scene3d: &Scene3D,
    search: &SearchOutcome,
    rng: &mut ChaCha8Rng,
) -> Result<PoseOutcome> {
    let z = cfg.pose.z_levels;
    let cubes = search.true_object.len();
    let cloud = cloud_config(cfg);
    let sim = PoseSim3D::new(cfg.footprint, cfg.rewards, cloud);
    let solver = pose_solver(cfg, &point, seed);

    let (mut belief, footprints, level0_preserved) = match (&point.policy, &search.belief) {
        (Policy::Pomcp, Some(b2)) => {
            let b3 = lift_belief(b2, z, cubes, rng)?;
            let preserved = b3
                .particles()
                .iter()
                .zip(b2.particles())
                .all(|(s3, s2)| s3.map.level(0) == s2.map);
            let fps: BTreeSet<Placement> = b2.particles().iter().map(|s| s.believed.clone()).collect();
            (Some(b3), fps, Some(preserved))
        }
        (Policy::Pomcp, None) => return Err(AvsError::EmptyBelief),
        (Policy::RandomWalk, _) => {
            let shape = ObjectShape::new("found", search.true_object.iter().copied())?;
            let fps = candidate_placements(&search.real_map, &shape)
                .into_iter()
                .filter(|pl| pl.iter().all(|p| search.real_map.get(*p) == Some(CellValue::Object)))
                .collect();
            (None, fps, None)
        }
    };
    let hyps = hypotheses(&footprints, z, cubes);

    let mut real = GridMap3D::lift(&search.real_map, z);
    let mut env = GroundTruthEnv3D::new(scene3d.clone(), search.agent, cfg.footprint, cloud, cfg.max_steps);
    let is_found = |real: &GridMap3D, agent, belief: &Option<BeliefState<_>>| match belief {
        Some(b) => b.particles().iter().all(|s| sim.is_terminal(s)),
        None => !ConsistentSampler3D::new(real, agent, &hyps).resolved().is_empty(),
    };
    let mut found = is_found(&real, env.agent(), &belief);
    let mut contradiction = false;

    while !found && !env.exhausted() {
        let action = match &belief {
            Some(b) => match Pomcp::new(&sim, &solver).search(b, rng) {
                Ok(out) => out.action,
                Err(AvsError::Blocked) => break,
                Err(e) => return Err(e),
            },
            None => match random_walk_policy(legal_actions_3d(&real, env.agent()), rng) {
                Ok(a) => a,
                Err(_) => break,
            },
        };
        let obs = env.step(action, rng)?;
        apply_observation_3d(&mut real, &obs, env.agent());
        if let Some(b) = belief.as_ref() {
            let mut source = ConsistentSampler3D::new(&real, env.agent(), &hyps);
            match update_belief(&sim, b, action, &obs, &solver, &mut source, rng) {
                Ok((next, _)) => belief = Some(next),
                Err(AvsError::Unsatisfiable) => {
                    contradiction = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        found = is_found(&real, env.agent(), &belief);
    }

    let correct = match &belief {
        Some(b) => found && b.particles().iter().all(|s| s.believed == scene3d.object),
        None => found && ConsistentSampler3D::new(&real, env.agent(), &hyps).resolved() == vec![&scene3d.object],
    };
    Ok(PoseOutcome {
        found,
        steps: env.steps(),
        contradiction,
        correct: Some(correct),
        level0_preserved,
    })
}

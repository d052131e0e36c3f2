use rand::Rng;
use smallvec::SmallVec;

use super::cloud::{render_occupancy, CloudConfig, PointCloud};
use super::map::{GridMap3D, Pos3};
use super::voxel::{apply_observation_3d, soft_equal, voxelize, window_origin, ObservationGrid3D};
use crate::avs2d::{CellValue, Footprint, MapDelta, Pos, RewardConfig};
use crate::error::{AvsError, Result};
use crate::pomdp::{Action, ActionSet, Simulator};

/// Believed object cells, sorted.
pub type Shape3 = SmallVec<[Pos3; 8]>;

/// Pose-stage state: the 3D map, the agent column (the camera flies at a
/// fixed height) and the believed object cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SearchState3D {
    pub map: GridMap3D,
    pub agent: Pos,
    pub believed: Shape3,
}

impl SearchState3D {
    pub fn new(map: GridMap3D, agent: Pos, mut believed: Shape3) -> Self {
        believed.sort();
        Self { map, agent, believed }
    }
}

/// Moves onto columns that are inside the map and not `Blocked` at level 0.
pub fn legal_actions_3d(map: &GridMap3D, agent: Pos) -> ActionSet {
    Action::ALL
        .into_iter()
        .filter(|a| {
            let (dx, dy) = a.offset();
            let p = agent.offset(dx, dy);
            matches!(map.get(Pos3::new(p.x, p.y, 0)), Some(v) if v != CellValue::Blocked)
        })
        .collect()
}

/// Every believed cell is mapped `Object` and nothing above it in its column
/// is still `Candidate`. Cells below the object are never visible from above
/// and do not count.
pub fn is_terminal_3d(state: &SearchState3D) -> bool {
    !state.believed.is_empty()
        && state.believed.iter().all(|c| {
            state.map.get(*c) == Some(CellValue::Object)
                && (c.z + 1..state.map.depth() as i32)
                    .all(|z| state.map.get(Pos3::new(c.x, c.y, z)) != Some(CellValue::Candidate))
        })
}

/// Cells the simulator treats as solid: the believed object plus known
/// objects and blocked columns in the map.
pub fn occupancy(state: &SearchState3D, p: Pos3) -> Option<CellValue> {
    if state.believed.binary_search(&p).is_ok() {
        return Some(CellValue::Object);
    }
    match state.map.get(p)? {
        CellValue::Object => Some(CellValue::Object),
        CellValue::OtherObject | CellValue::Blocked => Some(CellValue::OtherObject),
        _ => None,
    }
}

/// Point cloud the state predicts from `pose`.
pub fn render_pointcloud<R: Rng + ?Sized>(
    state: &SearchState3D,
    pose: Pos,
    fp: Footprint,
    cfg: &CloudConfig,
    rng: &mut R,
) -> PointCloud {
    let m = &state.map;
    render_occupancy(|p| occupancy(state, p), m.width(), m.height(), m.depth(), pose, fp, cfg, rng)
}

/// Reward from the map change of one step: the shared penalty and terminal
/// terms plus `refinement` per `Object` cell resolved `Empty`.
pub fn reward_3d(delta: &MapDelta, terminal: bool, cfg: &RewardConfig) -> f64 {
    cfg.base(delta, terminal) + cfg.refinement * delta.discarded_objects as f64
}

/// Generative model for the pose stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSim3D {
    pub footprint: Footprint,
    pub rewards: RewardConfig,
    pub cloud: CloudConfig,
}

impl PoseSim3D {
    pub fn new(footprint: Footprint, rewards: RewardConfig, cloud: CloudConfig) -> Self {
        Self {
            footprint,
            rewards,
            cloud,
        }
    }

    pub fn dims(&self, depth: usize) -> (usize, usize, usize) {
        (self.footprint.w, self.footprint.h, depth)
    }

    /// Render, voxelize and apply the view from `state.agent`.
    pub fn observe_in_place<R: Rng + ?Sized>(&self, state: &mut SearchState3D, rng: &mut R) -> (ObservationGrid3D, MapDelta) {
        let pc = render_pointcloud(state, state.agent, self.footprint, &self.cloud, rng);
        let origin = window_origin(state.agent, self.footprint, self.cloud.cell_size);
        let obs = voxelize(&pc, origin, self.cloud.cell_size, self.dims(state.map.depth()));
        let delta = apply_observation_3d(&mut state.map, &obs, state.agent);
        (obs, delta)
    }
}

impl Simulator for PoseSim3D {
    type State = SearchState3D;
    type Observation = ObservationGrid3D;

    fn legal_actions(&self, state: &SearchState3D) -> ActionSet {
        legal_actions_3d(&state.map, state.agent)
    }

    fn step_mut<R: Rng + ?Sized>(
        &self,
        state: &mut SearchState3D,
        action: Action,
        rng: &mut R,
    ) -> Result<(ObservationGrid3D, f64, bool)> {
        if !self.legal_actions(state).contains(action) {
            return Err(AvsError::IllegalAction { action });
        }
        let (dx, dy) = action.offset();
        state.agent = state.agent.offset(dx, dy);
        let (obs, delta) = self.observe_in_place(state, rng);
        let terminal = is_terminal_3d(state);
        Ok((obs, reward_3d(&delta, terminal, &self.rewards), terminal))
    }

    fn is_terminal(&self, state: &SearchState3D) -> bool {
        is_terminal_3d(state)
    }

    fn observations_match(&self, a: &ObservationGrid3D, b: &ObservationGrid3D) -> bool {
        soft_equal(a, b).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::avs2d::GridMap2D;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use smallvec::smallvec;

    fn flat_l(z: i32) -> Shape3 {
        smallvec![Pos3::new(2, 2, z), Pos3::new(3, 2, z), Pos3::new(2, 3, z)]
    }

    fn lifted(depth: usize) -> GridMap3D {
        let mut base = GridMap2D::filled(6, 6, CellValue::Empty);
        for p in [Pos::new(2, 2), Pos::new(3, 2), Pos::new(2, 3)] {
            base.set(p, CellValue::Object);
        }
        GridMap3D::lift(&base, depth)
    }

    #[test]
    fn reward_counts_discarded_objects() {
        let cfg = RewardConfig::default();
        let delta = MapDelta {
            discarded_objects: 2,
            changed: true,
            ..MapDelta::default()
        };
        assert_eq!(reward_3d(&delta, false, &cfg), cfg.action_penalty + 2.0 * cfg.refinement);
        let still = MapDelta::default();
        assert_eq!(reward_3d(&still, false, &cfg), cfg.action_penalty + cfg.reobserve_penalty);
        assert_eq!(
            reward_3d(&still, true, &cfg),
            cfg.action_penalty + cfg.reobserve_penalty + cfg.terminal
        );
    }

    #[test]
    fn noise_free_step_resolves_elevated_object() {
        let sim = PoseSim3D::new(Footprint::default(), RewardConfig::default(), CloudConfig::noise_free());
        let mut s = SearchState3D::new(lifted(5), Pos::new(2, 3), flat_l(2));
        assert!(!is_terminal_3d(&s));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, r, done) = sim.step_mut(&mut s, Action::North, &mut rng).unwrap();
        assert!(done);
        assert!(r > 50.0);
        for c in flat_l(2) {
            assert_eq!(s.map.get(c), Some(CellValue::Object));
            assert_eq!(s.map.get(Pos3::new(c.x, c.y, 1)), Some(CellValue::Candidate));
            assert_eq!(s.map.get(Pos3::new(c.x, c.y, 4)), Some(CellValue::Empty));
        }
    }

    #[test]
    fn wrong_elevation_changes_observation() {
        let sim = PoseSim3D::new(Footprint::default(), RewardConfig::default(), CloudConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = SearchState3D::new(lifted(5), Pos::new(2, 3), flat_l(0));
        let mut b = SearchState3D::new(lifted(5), Pos::new(2, 3), flat_l(1));
        let (oa, _) = sim.observe_in_place(&mut a, &mut rng);
        let (ob, _) = sim.observe_in_place(&mut b, &mut rng);
        assert!(!sim.observations_match(&oa, &ob));
        let (oa2, _) = sim.observe_in_place(&mut a.clone(), &mut rng);
        assert!(sim.observations_match(&oa, &oa2));
    }

    #[test]
    fn blocked_columns_are_illegal() {
        let mut base = GridMap2D::filled(3, 3, CellValue::Empty);
        base.set(Pos::new(1, 0), CellValue::Blocked);
        let m = GridMap3D::lift(&base, 2);
        let legal = legal_actions_3d(&m, Pos::new(1, 1));
        assert!(!legal.contains(Action::North));
        assert_eq!(legal.len(), 3);
    }
}

use std::str::FromStr;

use rand::Rng;

use super::map::{CellValue, Footprint, GridMap2D, Pos};
use super::observe::{apply_observation, make_binary_observation, render_window, MapDelta, ObservationGrid2D};
use super::shape::Placement;
use crate::error::{AvsError, Result};
use crate::pomdp::{Action, ActionSet, Simulator};

/// POMDP state `(M, p_agent, P_object)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SearchState2D {
    pub map: GridMap2D,
    pub agent: Pos,
    /// Believed object cells, sorted.
    pub believed: Placement,
}

impl SearchState2D {
    pub fn new(map: GridMap2D, agent: Pos, mut believed: Placement) -> Self {
        believed.sort();
        Self { map, agent, believed }
    }
}

/// Reward constants. Penalties are `<= 0`, bonuses `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub action_penalty: f64,
    pub reobserve_penalty: f64,
    pub terminal: f64,
    pub exploration: f64,
    pub discovery: f64,
    pub refinement: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            action_penalty: -1.0,
            reobserve_penalty: -2.0,
            terminal: 100.0,
            exploration: 1.0,
            discovery: 10.0,
            refinement: 5.0,
        }
    }
}

impl RewardConfig {
    pub fn zero() -> Self {
        Self {
            action_penalty: 0.0,
            reobserve_penalty: 0.0,
            terminal: 0.0,
            exploration: 0.0,
            discovery: 0.0,
            refinement: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.action_penalty > 0.0 || self.reobserve_penalty > 0.0 {
            return Err(AvsError::Config("penalties must be <= 0".into()));
        }
        if [self.terminal, self.exploration, self.discovery, self.refinement]
            .iter()
            .any(|v| *v < 0.0)
        {
            return Err(AvsError::Config("bonus rewards must be >= 0".into()));
        }
        Ok(())
    }

    /// Shared `P_action + R_2 + R_3` part.
    pub(crate) fn base(&self, delta: &MapDelta, terminal: bool) -> f64 {
        let mut r = self.action_penalty;
        if !delta.changed {
            r += self.reobserve_penalty;
        }
        if terminal {
            r += self.terminal;
        }
        r
    }

    /// Search-stage reward from the map change of one step.
    pub fn search_reward(&self, delta: &MapDelta, terminal: bool) -> f64 {
        self.base(delta, terminal)
            + self.exploration * delta.resolved_candidates as f64
            + self.discovery * delta.new_objects as f64
    }
}

/// How camera images are turned into observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObservationModel {
    /// Discretized `w × h` grid of cell values.
    #[default]
    Grid,
    /// `object_found` / `¬object_found` only.
    Binary,
}

impl FromStr for ObservationModel {
    type Err = AvsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "grid" => Ok(Self::Grid),
            "binary" => Ok(Self::Binary),
            other => Err(AvsError::Config(format!("unknown observation model '{other}'"))),
        }
    }
}

impl ObservationModel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::Binary => "binary",
        }
    }
}

/// Observation produced by the 2D search stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Observation2D {
    Grid(ObservationGrid2D),
    Binary(bool),
}

/// Actions whose destination is on the map and not `Blocked`.
pub fn legal_actions(state: &SearchState2D) -> ActionSet {
    legal_moves(&state.map, state.agent)
}

/// Moves from `pos` that stay on `map` and avoid `Blocked` cells.
pub fn legal_moves(map: &GridMap2D, pos: Pos) -> ActionSet {
    Action::ALL
        .into_iter()
        .filter(|a| {
            let (dx, dy) = a.offset();
            matches!(map.get(pos.offset(dx, dy)), Some(v) if v != CellValue::Blocked)
        })
        .collect()
}

/// Every believed object cell is marked `Object` in the state's map.
pub fn is_terminal(state: &SearchState2D) -> bool {
    !state.believed.is_empty()
        && state
            .believed
            .iter()
            .all(|p| state.map.get(*p) == Some(CellValue::Object))
}

/// `R_2D` for a transition, computed from the two maps.
pub fn reward_2d(state: &SearchState2D, _action: Action, next: &SearchState2D, cfg: &RewardConfig) -> f64 {
    cfg.search_reward(&MapDelta::between(&state.map, &next.map), is_terminal(next))
}

/// Noise-free simulated camera view of `state` from `pose`.
pub fn render_observation(state: &SearchState2D, pose: Pos, fp: Footprint) -> ObservationGrid2D {
    render_window(&state.map, &state.believed, pose, fp)
}

/// Generative model `G_I(s, a)` for the search stage.
///
/// The observation is computed from the state's map and believed object
/// cells only.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSim2D {
    pub footprint: Footprint,
    pub rewards: RewardConfig,
    pub model: ObservationModel,
    pub object_size: usize,
}

impl SearchSim2D {
    pub fn new(footprint: Footprint, rewards: RewardConfig, model: ObservationModel, object_size: usize) -> Self {
        Self {
            footprint,
            rewards,
            model,
            object_size,
        }
    }

    /// Map update and observation for an agent already at `state.agent`.
    pub fn observe_in_place(&self, state: &mut SearchState2D) -> (Observation2D, MapDelta) {
        let grid = render_observation(state, state.agent, self.footprint);
        match self.model {
            ObservationModel::Grid => {
                let delta = apply_observation(&mut state.map, &grid, state.agent);
                (Observation2D::Grid(grid), delta)
            }
            ObservationModel::Binary => {
                let found = make_binary_observation(&grid, self.object_size);
                let delta = if found {
                    apply_observation(&mut state.map, &grid, state.agent)
                } else {
                    MapDelta::default()
                };
                (Observation2D::Binary(found), delta)
            }
        }
    }
}

impl Simulator for SearchSim2D {
    type State = SearchState2D;
    type Observation = Observation2D;

    fn legal_actions(&self, state: &SearchState2D) -> ActionSet {
        legal_actions(state)
    }

    fn step_mut<R: Rng + ?Sized>(
        &self,
        state: &mut SearchState2D,
        action: Action,
        _rng: &mut R,
    ) -> Result<(Observation2D, f64, bool)> {
        if !legal_actions(state).contains(action) {
            return Err(AvsError::IllegalAction { action });
        }
        let (dx, dy) = action.offset();
        state.agent = state.agent.offset(dx, dy);
        let (obs, delta) = self.observe_in_place(state);
        let terminal = is_terminal(state);
        Ok((obs, self.rewards.search_reward(&delta, terminal), terminal))
    }

    fn is_terminal(&self, state: &SearchState2D) -> bool {
        is_terminal(state)
    }

    fn observations_match(&self, a: &Observation2D, b: &Observation2D) -> bool {
        a == b
    }
}

//! Two-dimensional active visual search: the agent flies a camera over a
//! table grid and must see every cell of a letter-shaped object.

mod env;
mod map;
mod observe;
mod shape;
mod sim;

pub use env::{initial_belief, ConsistentSampler2D, GroundTruthEnv, MapFile, Scene2D};
pub use map::{CellValue, Footprint, GridMap2D, Pos};
pub use observe::{apply_observation, make_binary_observation, render_window, BorderNoise, MapDelta, ObservationGrid2D};
pub use shape::{
    candidate_placements, consistent_placements, place_object_simulation, placements_where, ObjectShape, Placement,
};
pub use sim::{
    is_terminal, legal_actions, legal_moves, render_observation, reward_2d, Observation2D, ObservationModel, RewardConfig,
    SearchSim2D, SearchState2D,
};

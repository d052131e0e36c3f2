//! Three-dimensional active pose estimation: after the search stage the
//! object's footprint is known, and the agent resolves its height from
//! top-down point clouds.

mod cloud;
mod lift;
mod map;
mod sim;
mod voxel;

pub use cloud::{render_occupancy, CloudConfig, CloudPoint, PointCloud};
pub use lift::{is_connected6, lift_belief, shapes_over_footprint, ConsistentSampler3D, GroundTruthEnv3D, Scene3D};
pub use map::{GridMap3D, Pos3};
pub use sim::{
    is_terminal_3d, legal_actions_3d, occupancy, render_pointcloud, reward_3d, PoseSim3D, SearchState3D, Shape3,
};
pub use voxel::{apply_observation_3d, classify_core, soft_equal, voxelize, window_origin, ObservationGrid3D};

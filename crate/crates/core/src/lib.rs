//! Active visual search and active pose estimation with POMCP.
//!
//! * [`pomdp`]: black-box POMDP contracts.
//! * [`pomcp`]: the planner and the particle-filter belief update.
//! * [`avs2d`]: the 2D search environment.
//! * [`ape3d`]: the 3D pose-estimation stage.
//! * [`harness`]: episode runner, baselines and CSV experiments.

pub mod ape3d;
pub mod avs2d;
pub mod error;
pub mod harness;
pub mod pomcp;
pub mod pomdp;

pub use error::{AvsError, Result};

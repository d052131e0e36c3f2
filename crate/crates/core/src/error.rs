use thiserror::Error;

use crate::pomdp::Action;

/// Errors raised by the planner, the environments and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AvsError {
    #[error("action {action:?} is not legal in the current state")]
    IllegalAction { action: Action },

    #[error("no legal action available: agent is blocked")]
    Blocked,

    #[error("no object placement is consistent with the observed map")]
    Unsatisfiable,

    #[error("cannot lift belief: particle {index} is not terminal")]
    StageOrder { index: usize },

    #[error("observation dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },

    #[error("empty belief")]
    EmptyBelief,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid map: {0}")]
    Map(String),

    #[error("malformed point cloud: {0}")]
    PointCloud(String),
}

pub type Result<T, E = AvsError> = std::result::Result<T, E>;

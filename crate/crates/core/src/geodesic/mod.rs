//! Geodesic distances on the configuration-space grid.
//!
//! The graph is the 8-connected grid of free cells; orthogonal edges cost one
//! resolution, diagonal edges `sqrt(2)` resolutions, and diagonals may not cut
//! obstacle corners. Points map to their containing cell.

mod field;
mod region;

pub use field::{for_each_edge, path_cost, shortest_path, DistanceField};
pub use region::{
    geodesic_distance, success_region, GoalFields, SuccessRegion, OBJECT_VISIBLE_RANGE,
};

use thiserror::Error;

use crate::gridworld::Cell;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error("distance field needs at least one source cell")]
    NoSources,
    #[error("source cell {0} is an obstacle")]
    SourceOnObstacle(Cell),
    #[error("source cell {0} lies outside the grid")]
    SourceOutOfBounds(Cell),
    #[error("unknown region {0:?}")]
    UnknownRegion(String),
    #[error("no instances of object category {0:?}")]
    UnknownCategory(String),
    #[error("goal point ({x}, {y}) is not in free space")]
    GoalNotFree { x: f64, y: f64 },
    #[error("success threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("success region for {0} is empty")]
    EmptyRegion(String),
}

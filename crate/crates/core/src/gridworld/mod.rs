//! Metric occupancy-grid worlds.
//!
//! All stored lengths are meters. Coordinates run x rightward and y downward
//! from the top-left corner of the map.

mod env;
mod generate;
mod grid;
mod inflate;
mod los;
mod mapfile;
mod world;

pub use env::{AgentSpec, Environment, ObjectInstance, Region};
pub use generate::{generate_environment, GenerateError, GenerateParams, ObjectRequest};
pub use grid::{Cell, Fnv64, OccupancyGrid, Point};
pub use inflate::inflate_obstacles;
pub use los::{line_of_sight, traverse_segment};
pub use mapfile::{parse_map, serialize_map, MapError, MapErrorKind};
pub use world::NavWorld;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("resolution must be positive and finite, got {0}")]
    Resolution(f64),
    #[error("grid must be at least 3x3, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("border cell {0} is free; the world must be closed")]
    OpenBorder(Cell),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("scene id must be a nonempty label, got {0:?}")]
    SceneId(String),
    #[error("region {0:?} has no cells")]
    EmptyRegion(String),
    #[error("duplicate region id {0:?}")]
    DuplicateRegion(String),
    #[error("invalid label {0:?}")]
    Label(String),
    #[error("region {id:?} cell {cell} is not a free cell")]
    RegionOnObstacle { id: String, cell: Cell },
    #[error("object {instance_id} ({category}) at ({x}, {y}) is not inside a free cell")]
    ObjectOnObstacle {
        instance_id: u32,
        category: String,
        x: f64,
        y: f64,
    },
    #[error("duplicate object instance id {0}")]
    DuplicateInstance(u32),
    #[error("invalid agent spec: {0}")]
    AgentSpec(String),
}

/// Counts connected components of free cells under the navigation graph's
/// adjacency. Diagonal steps need both orthogonal neighbours free, which makes
/// this plain 4-connectivity.
pub fn free_components(grid: &OccupancyGrid) -> usize {
    let mut seen = vec![false; grid.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in grid.free_cells() {
        if seen[grid.index(start)] {
            continue;
        }
        count += 1;
        seen[grid.index(start)] = true;
        stack.push(start);
        while let Some(c) = stack.pop() {
            let orthogonal = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .into_iter()
                .filter_map(|(dx, dy)| grid.offset(c, dx, dy));
            for n in orthogonal {
                let i = grid.index(n);
                if !seen[i] && grid.is_free(n) {
                    seen[i] = true;
                    stack.push(n);
                }
            }
        }
    }
    count
}

use super::env::{AgentSpec, Environment};
use super::grid::{OccupancyGrid, Point};
use super::inflate::inflate_obstacles;
use super::los::line_of_sight;
use super::EnvError;

/// An environment paired with an agent body and its configuration-space grid.
///
/// The inflated grid is what every geodesic computation and collision check
/// runs on; the raw grid is used for sensing (line of sight, local patches).
#[derive(Debug, Clone)]
pub struct NavWorld {
    env: Environment,
    spec: AgentSpec,
    inflated: OccupancyGrid,
}

impl NavWorld {
    pub fn new(env: Environment, spec: AgentSpec) -> Result<Self, EnvError> {
        spec.validate()?;
        spec.check_resolution(env.grid().resolution());
        let inflated = inflate_obstacles(env.grid(), spec.radius());
        Ok(Self {
            env,
            spec,
            inflated,
        })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    pub fn raw(&self) -> &OccupancyGrid {
        self.env.grid()
    }

    /// Configuration-space grid (obstacles inflated by the agent radius).
    pub fn cspace(&self) -> &OccupancyGrid {
        &self.inflated
    }

    pub fn scene_id(&self) -> &str {
        self.env.scene_id()
    }

    /// True when an agent centered at `p` is collision-free.
    pub fn is_pose_free(&self, p: Point) -> bool {
        self.inflated.is_free_point(p)
    }

    /// True when the agent can translate along `a -> b` without contact.
    pub fn segment_free(&self, a: Point, b: Point) -> bool {
        line_of_sight(&self.inflated, a, b)
    }

    /// Unobstructed view between two points on the raw grid.
    pub fn visible(&self, a: Point, b: Point) -> bool {
        line_of_sight(self.env.grid(), a, b)
    }
}

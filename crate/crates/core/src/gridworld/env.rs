use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use super::grid::{Cell, OccupancyGrid, Point};
use super::EnvError;
use crate::format::is_label;

/// A labeled area (e.g. "kitchen"). Cells are kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: String,
    /// Map-file glyph (`A`..=`Z`).
    pub glyph: char,
    pub cells: BTreeSet<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub category: String,
    pub position: Point,
    pub instance_id: u32,
}

/// The world an episode runs in. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    scene_id: String,
    grid: OccupancyGrid,
    regions: Vec<Region>,
    objects: Vec<ObjectInstance>,
    free_cell_count: usize,
}

impl Environment {
    pub fn new(
        scene_id: impl Into<String>,
        grid: OccupancyGrid,
        regions: Vec<Region>,
        objects: Vec<ObjectInstance>,
    ) -> Result<Self, EnvError> {
        let scene_id = scene_id.into();
        if !is_label(&scene_id) {
            return Err(EnvError::SceneId(scene_id));
        }
        let mut ids = BTreeSet::new();
        for r in &regions {
            if !is_label(&r.id) {
                return Err(EnvError::Label(r.id.clone()));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(EnvError::DuplicateRegion(r.id.clone()));
            }
            if r.cells.is_empty() {
                return Err(EnvError::EmptyRegion(r.id.clone()));
            }
            if let Some(&cell) = r
                .cells
                .iter()
                .find(|&&c| !grid.contains(c) || grid.is_obstacle(c))
            {
                return Err(EnvError::RegionOnObstacle {
                    id: r.id.clone(),
                    cell,
                });
            }
        }
        let mut instance_ids = BTreeSet::new();
        for o in &objects {
            if !is_label(&o.category) {
                return Err(EnvError::Label(o.category.clone()));
            }
            if !instance_ids.insert(o.instance_id) {
                return Err(EnvError::DuplicateInstance(o.instance_id));
            }
            if !grid.is_free_point(o.position) {
                return Err(EnvError::ObjectOnObstacle {
                    instance_id: o.instance_id,
                    category: o.category.clone(),
                    x: o.position.x,
                    y: o.position.y,
                });
            }
        }
        let free_cell_count = grid.free_count();
        Ok(Self {
            scene_id,
            grid,
            regions,
            objects,
            free_cell_count,
        })
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn free_cell_count(&self) -> usize {
        self.free_cell_count
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn objects_of<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a ObjectInstance> {
        self.objects.iter().filter(move |o| o.category == category)
    }

    /// Distinct object categories, sorted.
    pub fn categories(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.objects.iter().map(|o| o.category.as_str()).collect();
        set.into_iter().collect()
    }
}

/// Physical and sensing parameters of the agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSpec {
    /// Diameter of the disc agent, meters.
    pub body_width: f64,
    /// Translation per move action, meters.
    pub step_size: f64,
    /// Heading change per rotate action, radians.
    pub turn_angle: f64,
    /// Horizontal field of view, radians.
    pub fov: f64,
    /// Range used for exploration coverage, meters.
    pub sense_radius: f64,
}

impl Default for AgentSpec {
    fn default() -> Self {
        Self {
            body_width: 0.2,
            step_size: 0.25,
            turn_angle: PI / 6.0,
            fov: PI / 2.0,
            sense_radius: 2.0,
        }
    }
}

impl AgentSpec {
    /// Inflation radius used for navigation.
    pub fn radius(&self) -> f64 {
        self.body_width / 2.0
    }

    /// Default success threshold: twice the body width.
    pub fn default_tau(&self) -> f64 {
        2.0 * self.body_width
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |what: &str| Err(EnvError::AgentSpec(what.to_string()));
        if !(self.body_width.is_finite() && self.body_width > 0.0) {
            return bad("body_width must be > 0");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step_size must be > 0");
        }
        if !(self.turn_angle > 0.0 && self.turn_angle <= PI) {
            return bad("turn_angle must be in (0, pi]");
        }
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return bad("fov must be in (0, 2pi]");
        }
        if !(self.sense_radius.is_finite() && self.sense_radius >= 0.0) {
            return bad("sense_radius must be >= 0");
        }
        Ok(())
    }

    /// Warns when the agent radius is smaller than a grid cell; inflation
    /// then under-approximates the body.
    pub fn check_resolution(&self, resolution: f64) -> bool {
        let ok = self.radius() >= resolution;
        if !ok {
            log::warn!(
                "agent radius {} m is below grid resolution {} m",
                self.radius(),
                resolution
            );
        }
        ok
    }
}

use std::fmt;

use super::{Goal, Scenario, ScenarioConstraints};
use crate::geodesic::{success_region, DistanceField, GeodesicError};
use crate::gridworld::{Cell, NavWorld, OccupancyGrid, Point};
use crate::LENGTH_EPS;

/// Stored and recomputed optimal lengths must agree this closely, meters.
pub const LENGTH_CONSISTENCY_TOL: f64 = 1e-6;

/// True when every cell whose center lies within `radius` of `p` is free.
pub fn has_clearance(grid: &OccupancyGrid, p: Point, radius: f64) -> bool {
    let res = grid.resolution();
    let o = grid.origin();
    let lo_x = ((p.x - radius - o.x) / res - 0.5).floor().max(0.0) as usize;
    let lo_y = ((p.y - radius - o.y) / res - 0.5).floor().max(0.0) as usize;
    let hi_x = (((p.x + radius - o.x) / res - 0.5).ceil().max(0.0) as usize).min(grid.width() - 1);
    let hi_y = (((p.y + radius - o.y) / res - 0.5).ceil().max(0.0) as usize).min(grid.height() - 1);
    for y in lo_y..=hi_y {
        for x in lo_x..=hi_x {
            let c = Cell::new(x, y);
            if grid.is_obstacle(c) && grid.cell_center(c).distance(p) <= radius + LENGTH_EPS {
                return false;
            }
        }
    }
    true
}

/// Per-cell clearance at cell centers, computed by stamping each obstacle.
pub(crate) fn clearance_mask(grid: &OccupancyGrid, radius: f64) -> Vec<bool> {
    let res = grid.resolution();
    let reach = (radius / res).ceil() as isize + 1;
    let mut stencil = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if (dx as f64).hypot(dy as f64) * res <= radius + LENGTH_EPS {
                stencil.push((dx, dy));
            }
        }
    }
    let mut ok = vec![true; grid.len()];
    for (i, &obstacle) in grid.cells().iter().enumerate() {
        if !obstacle {
            continue;
        }
        let c = grid.cell_at(i);
        for &(dx, dy) in &stencil {
            if let Some(n) = grid.offset(c, dx, dy) {
                ok[grid.index(n)] = false;
            }
        }
    }
    ok
}

/// Clearance radius actually enforced on this world. Worlds whose free space
/// cannot host the requested disc anywhere fall back to two body widths.
pub fn effective_clearance(world: &NavWorld, requested: f64) -> (f64, Option<String>) {
    let mask = clearance_mask(world.raw(), requested);
    if world.cspace().free_cells().any(|c| mask[world.cspace().index(c)]) {
        return (requested, None);
    }
    let relaxed = requested.min(2.0 * world.spec().body_width);
    let warning = format!(
        "scene {}: no free point has {requested} m clearance; relaxed to {relaxed} m",
        world.scene_id()
    );
    log::warn!("{warning}");
    (relaxed, Some(warning))
}

/// Optimal path length from `start` to `goal`: the geodesic distance to the
/// goal cell for point goals, and to the success region otherwise.
/// `Ok(None)` means unreachable.
pub fn optimal_length(
    world: &NavWorld,
    goal: &Goal,
    tau: f64,
    start: Point,
) -> Result<Option<f64>, GeodesicError> {
    let cspace = world.cspace();
    let sources = match goal {
        Goal::Point(p) => {
            let cell = cspace
                .cell_of(*p)
                .filter(|&c| cspace.is_free(c))
                .ok_or(GeodesicError::GoalNotFree { x: p.x, y: p.y })?;
            vec![cell]
        }
        _ => success_region(world, goal, tau)?.cells().to_vec(),
    };
    if sources.is_empty() {
        return Ok(None);
    }
    Ok(DistanceField::compute(cspace, &sources)?.at_point(start))
}

/// Outcome of each scenario check.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub scene_match: bool,
    pub start_free: bool,
    pub clearance: bool,
    pub goal_exists: bool,
    pub navigable: bool,
    pub length_consistent: bool,
    pub min_separation: bool,
    /// Recomputed optimal length, when reachable.
    pub recomputed_length: Option<f64>,
    pub messages: Vec<String>,
}

impl Diagnostics {
    pub fn passed(&self) -> bool {
        self.scene_match
            && self.start_free
            && self.clearance
            && self.goal_exists
            && self.navigable
            && self.length_consistent
            && self.min_separation
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |b: bool| if b { "ok" } else { "FAIL" };
        write!(
            f,
            "scene={} start-free={} clearance={} goal-exists={} navigable={} length-consistent={} min-separation={}",
            mark(self.scene_match),
            mark(self.start_free),
            mark(self.clearance),
            mark(self.goal_exists),
            mark(self.navigable),
            mark(self.length_consistent),
            mark(self.min_separation),
        )?;
        for m in &self.messages {
            write!(f, "; {m}")?;
        }
        Ok(())
    }
}

/// Validates many scenarios against one world, reusing the clearance setup.
pub struct ScenarioChecker<'a> {
    world: &'a NavWorld,
    constraints: ScenarioConstraints,
    clearance: f64,
}

impl<'a> ScenarioChecker<'a> {
    pub fn new(world: &'a NavWorld, constraints: ScenarioConstraints) -> Self {
        let (clearance, _) = effective_clearance(world, constraints.clearance_radius);
        Self {
            world,
            constraints,
            clearance,
        }
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn check(&self, s: &Scenario) -> Diagnostics {
        let world = self.world;
        let c = &self.constraints;
        let mut messages = Vec::new();
        let start = Point::new(s.start.x, s.start.y);

        let scene_match = s.scene_id == world.scene_id();
        if !scene_match {
            messages.push(format!(
                "scenario scene {:?} does not match world {:?}",
                s.scene_id,
                world.scene_id()
            ));
        }
        let start_free = world.is_pose_free(start);
        if !start_free {
            messages.push("start is in collision".into());
        }
        let mut clearance = has_clearance(world.raw(), start, self.clearance);
        if let Goal::Point(p) = &s.goal {
            clearance &= has_clearance(world.raw(), *p, self.clearance);
        }
        if !clearance {
            messages.push(format!("less than {} m clearance", self.clearance));
        }

        let (goal_exists, recomputed) = match optimal_length(world, &s.goal, c.tau, start) {
            Ok(len) => (true, len),
            Err(e) => {
                messages.push(e.to_string());
                (false, None)
            }
        };
        let navigable = start_free && recomputed.is_some();
        if goal_exists && !navigable {
            messages.push("goal is not reachable from start".into());
        }
        let length_consistent = recomputed
            .is_some_and(|len| (len - s.geodesic_length).abs() <= LENGTH_CONSISTENCY_TOL);
        if let (Some(len), false) = (recomputed, length_consistent) {
            messages.push(format!(
                "stored geodesic {} differs from recomputed {len}",
                s.geodesic_length
            ));
        }
        let min_separation =
            s.geodesic_length.is_finite() && s.geodesic_length >= c.min_separation - LENGTH_EPS;
        if !min_separation {
            messages.push(format!(
                "geodesic {} below minimum separation {}",
                s.geodesic_length, c.min_separation
            ));
        }
        Diagnostics {
            scene_match,
            start_free,
            clearance,
            goal_exists,
            navigable,
            length_consistent,
            min_separation,
            recomputed_length: recomputed,
            messages,
        }
    }
}

pub fn validate_scenario(
    world: &NavWorld,
    scenario: &Scenario,
    constraints: &ScenarioConstraints,
) -> Diagnostics {
    ScenarioChecker::new(world, *constraints).check(scenario)
}

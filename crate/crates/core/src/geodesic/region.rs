use std::sync::OnceLock;

use super::{DistanceField, GeodesicError};
use crate::gridworld::{Cell, NavWorld, OccupancyGrid, Point};
use crate::scenario::Goal;
use crate::LENGTH_EPS;

/// Object instances count as visible within this range, meters.
pub const OBJECT_VISIBLE_RANGE: f64 = 1.0;

/// Free cells where the success predicate holds for an agent centered there.
///
/// For object goals the heading (field of view) condition is not part of the
/// region; it is checked when the episode is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessRegion {
    goal: Goal,
    tau: f64,
    cells: Vec<Cell>,
    mask: Vec<bool>,
    width: usize,
}

impl SuccessRegion {
    pub fn goal(&self) -> &Goal {
        &self.goal
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Sorted cell list.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && self.mask.get(cell.y * self.width + cell.x) == Some(&true)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }
}

fn check_tau(tau: f64) -> Result<(), GeodesicError> {
    if tau > 0.0 {
        Ok(())
    } else {
        Err(GeodesicError::BadThreshold(tau))
    }
}

/// Cell of a point goal, checked against the configuration space.
fn goal_cell(world: &NavWorld, p: Point) -> Result<Cell, GeodesicError> {
    world
        .cspace()
        .cell_of(p)
        .filter(|&c| world.cspace().is_free(c))
        .ok_or(GeodesicError::GoalNotFree { x: p.x, y: p.y })
}

/// Builds the success region of `goal` with proximity threshold `tau`.
///
/// - point goals: cells whose geodesic distance to the goal cell is strictly
///   below `tau`;
/// - area goals: the region's cells that are free in configuration space
///   (`tau` is ignored);
/// - object goals: cells within [`OBJECT_VISIBLE_RANGE`] of an instance of
///   the category with an unobstructed line of sight to it.
pub fn success_region(
    world: &NavWorld,
    goal: &Goal,
    tau: f64,
) -> Result<SuccessRegion, GeodesicError> {
    let cspace = world.cspace();
    let cells: Vec<Cell> = match goal {
        Goal::Point(p) => {
            check_tau(tau)?;
            let field = DistanceField::compute_within(cspace, &[goal_cell(world, *p)?], tau)?;
            field
                .reachable_cells()
                .filter(|&c| field.get(c).is_some_and(|d| d < tau - LENGTH_EPS))
                .collect()
        }
        Goal::Area(id) => {
            let region = world
                .env()
                .region(id)
                .ok_or_else(|| GeodesicError::UnknownRegion(id.clone()))?;
            region
                .cells
                .iter()
                .copied()
                .filter(|&c| cspace.is_free(c))
                .collect()
        }
        Goal::Object(category) => {
            let instances: Vec<Point> = world
                .env()
                .objects_of(category)
                .map(|o| o.position)
                .collect();
            if instances.is_empty() {
                return Err(GeodesicError::UnknownCategory(category.clone()));
            }
            let res = cspace.resolution();
            let reach = (OBJECT_VISIBLE_RANGE / res).ceil() as isize + 1;
            let mut cells = Vec::new();
            for pos in &instances {
                let Some(center) = cspace.cell_of(*pos) else {
                    continue;
                };
                for dy in -reach..=reach {
                    for dx in -reach..=reach {
                        let Some(c) = cspace.offset(center, dx, dy) else {
                            continue;
                        };
                        if cspace.is_obstacle(c) {
                            continue;
                        }
                        let cc = cspace.cell_center(c);
                        if cc.distance(*pos) <= OBJECT_VISIBLE_RANGE + LENGTH_EPS
                            && world.visible(cc, *pos)
                        {
                            cells.push(c);
                        }
                    }
                }
            }
            cells.sort();
            cells.dedup();
            cells
        }
    };
    let mut mask = vec![false; cspace.len()];
    for &c in &cells {
        mask[cspace.index(c)] = true;
    }
    Ok(SuccessRegion {
        goal: goal.clone(),
        tau,
        cells,
        mask,
        width: cspace.width(),
    })
}

/// Geodesic distance from `from` to the nearest cell of `region`, at cell
/// granularity. `None` when `from` is in collision or the region is
/// unreachable.
pub fn geodesic_distance(world: &NavWorld, from: Point, region: &SuccessRegion) -> Option<f64> {
    let cspace = world.cspace();
    let cell = cspace.cell_of(from)?;
    if cspace.is_obstacle(cell) || region.is_empty() {
        return None;
    }
    if region.contains(cell) {
        return Some(0.0);
    }
    DistanceField::compute(cspace, region.cells()).ok()?.get(cell)
}

/// Everything an episode needs to judge proximity to one goal.
#[derive(Debug, Clone)]
pub struct GoalFields {
    region: SuccessRegion,
    /// Toward the goal cell for point goals, the region otherwise.
    to_goal: DistanceField,
    /// Point goals build this only when asked.
    to_region: OnceLock<DistanceField>,
    cspace: OccupancyGrid,
}

impl GoalFields {
    pub fn build(world: &NavWorld, goal: &Goal, tau: f64) -> Result<Self, GeodesicError> {
        let region = success_region(world, goal, tau)?;
        if region.is_empty() {
            return Err(GeodesicError::EmptyRegion(goal.to_string()));
        }
        let cspace = world.cspace();
        let to_region = OnceLock::new();
        let to_goal = match goal {
            Goal::Point(p) => DistanceField::compute(cspace, &[goal_cell(world, *p)?])?,
            _ => {
                let field = DistanceField::compute(cspace, region.cells())?;
                let _ = to_region.set(field.clone());
                field
            }
        };
        Ok(Self {
            region,
            to_goal,
            to_region,
            cspace: cspace.clone(),
        })
    }

    pub fn region(&self) -> &SuccessRegion {
        &self.region
    }

    pub fn to_region(&self) -> &DistanceField {
        self.to_region.get_or_init(|| {
            DistanceField::compute(&self.cspace, self.region.cells()).expect("region is non-empty and free")
        })
    }

    /// Distance field toward "the goal": the goal cell for point goals, the
    /// success region otherwise.
    pub fn to_goal(&self) -> &DistanceField {
        &self.to_goal
    }

    /// Geodesic distance from `p` to the goal in the sense used for the
    /// optimal path length and the final-distance measure.
    pub fn goal_distance(&self, p: Point) -> Option<f64> {
        self.to_goal().at_point(p)
    }

    /// Distance to the success region (zero inside it).
    pub fn region_distance(&self, p: Point) -> Option<f64> {
        self.to_region().at_point(p)
    }
}

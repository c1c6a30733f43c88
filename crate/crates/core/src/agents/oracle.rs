use std::sync::Arc;

use super::steer::Steering;
use super::{EpisodeParams, Policy};
use crate::episode::{relative_bearing, Action, Observation, Pose};
use crate::geodesic::{success_region, DistanceField, OBJECT_VISIBLE_RANGE};
use crate::gridworld::{Cell, NavWorld, Point};
use crate::scenario::Goal;
use crate::LENGTH_EPS;

/// Fraction of the success threshold at which the oracle stops.
pub const STOP_FRACTION: f64 = 0.75;
/// Object goals: the oracle aims for cells this close to an instance so the
/// agent's true position is safely within visible range.
const OBJECT_APPROACH: f64 = 0.8;

enum Target {
    None,
    Point(DistanceField),
    Area(DistanceField),
    Object {
        field: DistanceField,
        instances: Vec<Point>,
    },
}

/// Shortest-path follower with full map access. With `may_finish` unset it
/// becomes the stumbler: same motion, but `Done` is replaced by a forward
/// move.
pub struct OracleAgent {
    steer: Steering,
    may_finish: bool,
    stop_distance: f64,
    half_fov: f64,
    target: Target,
}

impl OracleAgent {
    pub fn new(world: Arc<NavWorld>, may_finish: bool) -> Self {
        Self {
            steer: Steering::new(world),
            may_finish,
            stop_distance: 0.0,
            half_fov: 0.0,
            target: Target::None,
        }
    }

    fn world(&self) -> &NavWorld {
        self.steer.world()
    }

    fn build_target(&self, goal: &Goal, tau: f64) -> Target {
        let world = self.world();
        let cspace = world.cspace();
        match goal {
            Goal::Point(p) => match cspace.cell_of(*p).filter(|&c| cspace.is_free(c)) {
                Some(c) => Target::Point(DistanceField::compute(cspace, &[c]).expect("free cell")),
                None => Target::None,
            },
            Goal::Area(_) => match success_region(world, goal, tau) {
                Ok(r) if !r.is_empty() => Target::Area(
                    DistanceField::compute(cspace, r.cells()).expect("region cells are free"),
                ),
                _ => Target::None,
            },
            Goal::Object(category) => {
                let instances: Vec<Point> =
                    world.env().objects_of(category).map(|o| o.position).collect();
                let mut cells: Vec<Cell> = cspace
                    .free_cells()
                    .filter(|&c| {
                        let center = cspace.cell_center(c);
                        instances.iter().any(|&o| {
                            center.distance(o) <= OBJECT_APPROACH && world.visible(center, o)
                        })
                    })
                    .collect();
                if cells.is_empty() {
                    if let Ok(r) = success_region(world, goal, tau) {
                        cells = r.cells().to_vec();
                    }
                }
                if cells.is_empty() {
                    return Target::None;
                }
                Target::Object {
                    field: DistanceField::compute(cspace, &cells).expect("free cells"),
                    instances,
                }
            }
        }
    }
}

impl Policy for OracleAgent {
    fn reset(&mut self, goal: Option<&Goal>, params: &EpisodeParams) {
        self.steer.clear();
        self.stop_distance = STOP_FRACTION * params.tau;
        self.half_fov = 0.5 * params.spec.fov;
        self.target = match goal {
            Some(g) => self.build_target(g, params.tau),
            None => Target::None,
        };
    }

    fn act(&mut self, obs: &Observation) -> Action {
        let pose = obs.odometry;
        let p = pose.position();
        let finish = if self.may_finish {
            Action::Done
        } else {
            Action::MoveForward
        };
        let Self {
            steer,
            target,
            stop_distance,
            half_fov,
            ..
        } = self;
        match target {
            Target::None => finish,
            Target::Point(field) => {
                if steer.cell_value(field, p) < *stop_distance {
                    return finish;
                }
                steer.next_action(field, &pose)
            }
            Target::Area(field) => {
                if steer.cell_value(field, p) <= LENGTH_EPS {
                    return finish;
                }
                steer.next_action(field, &pose)
            }
            Target::Object { field, instances } => {
                if let Some(o) = object_in_view(steer.world(), &pose, instances) {
                    if relative_bearing(&pose, o).abs() <= *half_fov - 1e-6 {
                        return finish;
                    }
                    if let Some(turn) = steer.face(&pose, o) {
                        return turn;
                    }
                }
                steer.next_action(field, &pose)
            }
        }
    }
}

/// Nearest-in-bearing instance within visible range and unobstructed.
fn object_in_view(world: &NavWorld, pose: &Pose, instances: &[Point]) -> Option<Point> {
    let p = pose.position();
    instances
        .iter()
        .copied()
        .filter(|&o| p.distance(o) <= OBJECT_VISIBLE_RANGE - 1e-6 && world.visible(p, o))
        .min_by(|a, b| {
            relative_bearing(pose, *a)
                .abs()
                .total_cmp(&relative_bearing(pose, *b).abs())
        })
}

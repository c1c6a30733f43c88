use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::episode::{Action, Pose};
use crate::geodesic::DistanceField;
use crate::gridworld::{Cell, NavWorld, Point};

/// Cells around a query point that the cost-to-go estimate looks at.
const WINDOW: isize = 2;
/// Scores must beat the incumbent by this much to change the plan.
const MARGIN: f64 = 1e-6;
/// Recently visited positions avoided when no move makes progress.
const TABU_LEN: usize = 24;

/// Follows a distance field in continuous space with the discrete action set.
///
/// Each forward move that the current heading set allows is simulated and
/// scored by an any-angle cost-to-go estimate; the agent rotates toward the
/// best heading and then moves. Since the estimate strictly decreases on
/// every progressing move, the walk cannot cycle while it makes progress.
pub struct Steering {
    world: Arc<NavWorld>,
    tabu: VecDeque<(i64, i64)>,
}

impl Steering {
    pub fn new(world: Arc<NavWorld>) -> Self {
        Self {
            world,
            tabu: VecDeque::new(),
        }
    }

    pub fn world(&self) -> &Arc<NavWorld> {
        &self.world
    }

    pub fn clear(&mut self) {
        self.tabu.clear();
    }

    /// Field value at the cell containing `p`.
    pub fn cell_value(&self, field: &DistanceField, p: Point) -> f64 {
        field.at_point(p).unwrap_or(f64::INFINITY)
    }

    /// Estimated remaining path length from `p`: the best of
    /// `|p - c| + field(c)` over nearby cells `c` with a straight, free
    /// approach from `p`.
    pub fn cost_to_go(&self, field: &DistanceField, p: Point) -> f64 {
        let grid = self.world.cspace();
        let Some(here) = grid.cell_of(p) else {
            return f64::INFINITY;
        };
        let mut best = f64::INFINITY;
        for dy in -WINDOW..=WINDOW {
            for dx in -WINDOW..=WINDOW {
                let Some(c) = grid.offset(here, dx, dy) else {
                    continue;
                };
                let Some(v) = field.get(c) else {
                    continue;
                };
                let center = grid.cell_center(c);
                let total = v + p.distance(center);
                if total < best && (c == here || self.world.segment_free(p, center)) {
                    best = total;
                }
            }
        }
        best
    }

    fn landing(&self, pose: &Pose, heading: f64) -> Option<Point> {
        let step = self.world.spec().step_size;
        let to = Point::new(pose.x + step * heading.cos(), pose.y + step * heading.sin());
        self.world.segment_free(pose.position(), to).then_some(to)
    }

    fn key(p: Point) -> (i64, i64) {
        ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64)
    }

    /// Offsets (in turn increments) to consider, nearest first, left before
    /// right.
    fn offsets(&self) -> Vec<i32> {
        let turn = self.world.spec().turn_angle;
        let reach = (PI / turn).ceil() as i32;
        let mut out = vec![0];
        for k in 1..=reach {
            out.push(k);
            if (k as f64) * turn < PI - 1e-9 {
                out.push(-k);
            }
        }
        out
    }

    fn turn_toward(k: i32) -> Action {
        if k > 0 {
            Action::RotateLeft
        } else {
            Action::RotateRight
        }
    }

    /// The next action that descends `field` from `pose`.
    pub fn next_action(&mut self, field: &DistanceField, pose: &Pose) -> Action {
        let here = self.cost_to_go(field, pose.position());
        let turn = self.world.spec().turn_angle;
        let candidates: Vec<(i32, Option<Point>)> = self
            .offsets()
            .into_iter()
            .map(|k| (k, self.landing(pose, pose.heading + k as f64 * turn)))
            .collect();

        let mut best: Option<(i32, f64)> = None;
        for &(k, land) in &candidates {
            let Some(land) = land else { continue };
            let score = self.cost_to_go(field, land);
            if score < here - MARGIN && best.is_none_or(|(_, b)| score < b - MARGIN) {
                best = Some((k, score));
            }
        }
        if best.is_none() {
            // Stalled: take the least bad move that does not revisit.
            for &(k, land) in &candidates {
                let Some(land) = land else { continue };
                if self.tabu.contains(&Self::key(land)) {
                    continue;
                }
                let score = self.cost_to_go(field, land);
                if score.is_finite() && best.is_none_or(|(_, b)| score < b - MARGIN) {
                    best = Some((k, score));
                }
            }
        }
        match best {
            Some((0, _)) => {
                self.tabu.push_back(Self::key(pose.position()));
                if self.tabu.len() > TABU_LEN {
                    self.tabu.pop_front();
                }
                Action::MoveForward
            }
            Some((k, _)) => Self::turn_toward(k),
            None => Action::RotateLeft,
        }
    }

    /// Rotates until `target` lies within half a turn of the heading.
    pub fn face(&self, pose: &Pose, target: Point) -> Option<Action> {
        let bearing = crate::episode::relative_bearing(pose, target);
        let half = 0.5 * self.world.spec().turn_angle;
        if bearing > half {
            Some(Action::RotateLeft)
        } else if bearing < -half {
            Some(Action::RotateRight)
        } else {
            None
        }
    }

    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        self.world.cspace().cell_of(p)
    }
}

use std::sync::Arc;

use super::steer::Steering;
use super::{EpisodeParams, Policy};
use crate::episode::{Action, CoverageTracker, Observation};
use crate::geodesic::DistanceField;
use crate::gridworld::{Cell, NavWorld};

/// Gives up on a target it has not covered after this many actions.
const TARGET_PATIENCE: u32 = 200;
/// Travel distance over which a target's value decays by a factor e, meters.
/// Long enough that a large unsensed area beats a nearby sliver.
const DECAY_M: f64 = 4.0;
/// The steering field toward a target is only built this far past the
/// agent's own distance, meters.
const FIELD_SLACK: f64 = 2.0;
/// Candidates rescored with line of sight per target choice.
const SHORTLIST: usize = 32;

/// Coverage explorer using the same sensing rule as the coverage measure.
///
/// Targets are unsensed reachable cells ranked by the unsensed area around
/// them, discounted by travel distance. Emits `Done` once everything
/// reachable has been sensed.
pub struct FrontierAgent {
    steer: Steering,
    tracker: Option<CoverageTracker>,
    target: Option<(Cell, DistanceField)>,
    spent: u32,
    abandoned: Vec<bool>,
}

impl FrontierAgent {
    pub fn new(world: Arc<NavWorld>) -> Self {
        let cells = world.cspace().len();
        Self {
            steer: Steering::new(world),
            tracker: None,
            target: None,
            spent: 0,
            abandoned: vec![false; cells],
        }
    }

    /// Best target from `from` and its travel distance.
    fn pick_target(&self, tracker: &CoverageTracker, from: Cell) -> Option<(Cell, f64)> {
        let world = self.steer.world();
        let grid = world.cspace();
        let field = DistanceField::compute(grid, &[from]).ok()?;
        let d = field.as_slice();
        let (w, h) = (grid.width(), grid.height());
        let open = |i: usize| {
            let c = grid.cell_at(i);
            tracker.is_reachable(world, c) && !tracker.is_covered(world, c)
        };

        // Summed-area table of unsensed reachable cells.
        let mut sat = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0;
            for x in 0..w {
                row += open(y * w + x) as u32;
                sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
            }
        }
        let half = (world.spec().sense_radius / grid.resolution()).round() as usize;
        let gain = |c: Cell| {
            let (x0, y0) = (c.x.saturating_sub(half), c.y.saturating_sub(half));
            let (x1, y1) = ((c.x + half + 1).min(w), (c.y + half + 1).min(h));
            sat[y1 * (w + 1) + x1] + sat[y0 * (w + 1) + x0]
                - sat[y0 * (w + 1) + x1]
                - sat[y1 * (w + 1) + x0]
        };

        // Cheap window counts shortlist candidates; the shortlist is then
        // rescored by what is actually visible from each cell.
        let mut ranked: Vec<(f64, usize)> = (0..grid.len())
            .filter(|&i| d[i].is_finite() && !self.abandoned[i] && open(i))
            .map(|i| (util(gain(grid.cell_at(i)) as f64, d[i]), i))
            .collect();
        let k = SHORTLIST.min(ranked.len());
        if k == 0 {
            return None;
        }
        let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        ranked.select_nth_unstable_by(k - 1, order);
        ranked[..k].sort_unstable_by(order);
        let mut best: Option<(f64, f64, Cell)> = None;
        for &(bound, i) in &ranked[..k] {
            // What a cell can see is part of its window, so its window
            // score caps its rescored value.
            if best.is_some_and(|(s, _, _)| bound < s) {
                break;
            }
            let c = grid.cell_at(i);
            let score = util(visible_gain(world, tracker, c) as f64, d[i]);
            let better = best.is_none_or(|(s, bd, bc)| {
                score > s || (score == s && (d[i], c) < (bd, bc))
            });
            if better {
                best = Some((score, d[i], c));
            }
        }
        best.map(|(_, dist, c)| (c, dist))
    }
}

/// Unsensed reachable cells that a sweep from the center of `c` would cover.
fn visible_gain(world: &NavWorld, tracker: &CoverageTracker, c: Cell) -> usize {
    let grid = world.cspace();
    let p = grid.cell_center(c);
    let r = world.spec().sense_radius;
    let reach = (r / grid.resolution()).ceil() as isize;
    let mut n = 0;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let Some(q) = grid.offset(c, dx, dy) else {
                continue;
            };
            if !tracker.is_reachable(world, q) || tracker.is_covered(world, q) {
                continue;
            }
            let center = grid.cell_center(q);
            if center.distance(p) <= r && world.visible(p, center) {
                n += 1;
            }
        }
    }
    n
}

impl Policy for FrontierAgent {
    fn reset(&mut self, _goal: Option<&crate::scenario::Goal>, _params: &EpisodeParams) {
        self.steer.clear();
        self.tracker = None;
        self.target = None;
        self.spent = 0;
        self.abandoned.fill(false);
    }

    fn act(&mut self, obs: &Observation) -> Action {
        let pose = obs.odometry;
        let p = pose.position();
        let world = self.steer.world().clone();
        let tracker = self
            .tracker
            .get_or_insert_with(|| CoverageTracker::new(&world, p));
        tracker.observe(&world, p);

        let stale = match &self.target {
            Some((c, field)) => {
                tracker.is_covered(&world, *c)
                    || self.spent >= TARGET_PATIENCE
                    || !self.steer.cell_value(field, p).is_finite()
            }
            None => true,
        };
        if stale {
            if let Some((c, _)) = self.target.take() {
                if !tracker.is_covered(&world, c) {
                    self.abandoned[world.cspace().index(c)] = true;
                }
            }
            let Some(here) = world.cspace().cell_of(p) else {
                return Action::Done;
            };
            let tracker = self.tracker.as_ref().expect("set above");
            let Some((next, dist)) = self.pick_target(tracker, here) else {
                return Action::Done;
            };
            let field = DistanceField::compute_within(world.cspace(), &[next], dist + FIELD_SLACK)
                .expect("free target");
            self.target = Some((next, field));
            self.spent = 0;
            self.steer.clear();
        }
        self.spent += 1;
        let (_, field) = self.target.as_ref().expect("target chosen");
        self.steer.next_action(field, &pose)
    }
}

fn util(gain: f64, dist: f64) -> f64 {
    gain * (-dist / DECAY_M).exp()
}

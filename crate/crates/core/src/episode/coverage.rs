use std::collections::BTreeSet;

use crate::geodesic::DistanceField;
use crate::gridworld::{Cell, NavWorld, Point};
use crate::LENGTH_EPS;

/// Result of an exploration run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRecord {
    pub budget_m: f64,
    pub traveled_m: f64,
    pub covered_cells: BTreeSet<Cell>,
    /// Free cells reachable from the start (the denominator).
    pub reachable_cells: usize,
    pub coverage_fraction: f64,
}

/// Incremental coverage: a reachable cell is covered once some visited
/// position lies within the sense radius of its center with an unobstructed
/// line of sight to it.
#[derive(Debug, Clone)]
pub struct CoverageTracker {
    reachable: Vec<bool>,
    reachable_count: usize,
    covered: Vec<bool>,
    covered_count: usize,
    last: Option<Point>,
}

impl CoverageTracker {
    /// Reachability is measured from the cell containing `start`.
    pub fn new(world: &NavWorld, start: Point) -> Self {
        let cspace = world.cspace();
        let mut reachable = vec![false; cspace.len()];
        if let Some(cell) = cspace.cell_of(start).filter(|&c| cspace.is_free(c)) {
            let field = DistanceField::compute(cspace, &[cell]).expect("free start cell");
            for c in field.reachable_cells() {
                reachable[cspace.index(c)] = true;
            }
        }
        let reachable_count = reachable.iter().filter(|&&r| r).count();
        Self {
            covered: vec![false; reachable.len()],
            reachable,
            reachable_count,
            covered_count: 0,
            last: None,
        }
    }

    pub fn is_reachable(&self, world: &NavWorld, cell: Cell) -> bool {
        self.reachable[world.cspace().index(cell)]
    }

    pub fn is_covered(&self, world: &NavWorld, cell: Cell) -> bool {
        self.covered[world.cspace().index(cell)]
    }

    pub fn covered_count(&self) -> usize {
        self.covered_count
    }

    pub fn reachable_count(&self) -> usize {
        self.reachable_count
    }

    /// Marks cells sensed from `p`. Returns the number of newly covered cells.
    pub fn observe(&mut self, world: &NavWorld, p: Point) -> usize {
        if self.last == Some(p) {
            return 0;
        }
        self.last = Some(p);
        let grid = world.cspace();
        let r = world.spec().sense_radius;
        let res = grid.resolution();
        let o = grid.origin();
        let lo_x = ((p.x - r - o.x) / res).floor().max(0.0) as usize;
        let lo_y = ((p.y - r - o.y) / res).floor().max(0.0) as usize;
        let hi_x = (((p.x + r - o.x) / res).ceil() as usize).min(grid.width() - 1);
        let hi_y = (((p.y + r - o.y) / res).ceil() as usize).min(grid.height() - 1);
        let mut added = 0;
        for y in lo_y..=hi_y {
            for x in lo_x..=hi_x {
                let c = Cell::new(x, y);
                let i = grid.index(c);
                if !self.reachable[i] || self.covered[i] {
                    continue;
                }
                let center = grid.cell_center(c);
                if center.distance(p) <= r + LENGTH_EPS && world.visible(p, center) {
                    self.covered[i] = true;
                    added += 1;
                }
            }
        }
        self.covered_count += added;
        added
    }

    pub fn fraction(&self) -> f64 {
        if self.reachable_count == 0 {
            0.0
        } else {
            self.covered_count as f64 / self.reachable_count as f64
        }
    }

    pub fn record(&self, world: &NavWorld, budget_m: f64, traveled_m: f64) -> CoverageRecord {
        let grid = world.cspace();
        CoverageRecord {
            budget_m,
            traveled_m,
            covered_cells: (0..self.covered.len())
                .filter(|&i| self.covered[i])
                .map(|i| grid.cell_at(i))
                .collect(),
            reachable_cells: self.reachable_count,
            coverage_fraction: self.fraction(),
        }
    }
}

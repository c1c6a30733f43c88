use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use super::GeodesicError;
use crate::gridworld::{Cell, OccupancyGrid, Point};
use crate::LENGTH_EPS;

/// Neighbour offsets with their cost in cells.
const MOVES: [(isize, isize, f64); 8] = [
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT_2),
    (-1, 1, SQRT_2),
    (1, -1, SQRT_2),
    (-1, -1, SQRT_2),
];

/// Calls `f(neighbor, edge_cost_m)` for every edge of the 8-connected grid
/// graph leaving `cell`. Diagonal edges require both orthogonal cells free.
pub fn for_each_edge(grid: &OccupancyGrid, cell: Cell, mut f: impl FnMut(Cell, f64)) {
    let res = grid.resolution();
    for &(dx, dy, cost) in &MOVES {
        let Some(n) = grid.offset(cell, dx, dy) else {
            continue;
        };
        if grid.is_obstacle(n) {
            continue;
        }
        if dx != 0 && dy != 0 {
            let side_a = grid.offset(cell, dx, 0);
            let side_b = grid.offset(cell, 0, dy);
            let clear = |c: Option<Cell>| c.is_some_and(|c| grid.is_free(c));
            if !clear(side_a) || !clear(side_b) {
                continue;
            }
        }
        f(n, cost * res);
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    cost: f64,
    index: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then index for a deterministic pop order.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Geodesic distances (meters) from a set of source cells over the free
/// cells of a configuration-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    grid_key: u64,
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point,
    distances: Vec<f64>,
    sources: Vec<Cell>,
}

impl DistanceField {
    /// Multi-source Dijkstra. Unreachable and obstacle cells hold `None`.
    pub fn compute(cgrid: &OccupancyGrid, sources: &[Cell]) -> Result<Self, GeodesicError> {
        Self::compute_within(cgrid, sources, f64::INFINITY)
    }

    /// Like [`compute`](Self::compute), but cells farther than `limit`
    /// meters are left unreached. Values within the limit are exact.
    pub fn compute_within(
        cgrid: &OccupancyGrid,
        sources: &[Cell],
        limit: f64,
    ) -> Result<Self, GeodesicError> {
        if sources.is_empty() {
            return Err(GeodesicError::NoSources);
        }
        let mut distances = vec![f64::INFINITY; cgrid.len()];
        let mut heap = BinaryHeap::new();
        let mut srcs: Vec<Cell> = sources.to_vec();
        srcs.sort();
        srcs.dedup();
        for &s in &srcs {
            if !cgrid.contains(s) {
                return Err(GeodesicError::SourceOutOfBounds(s));
            }
            if cgrid.is_obstacle(s) {
                return Err(GeodesicError::SourceOnObstacle(s));
            }
            let i = cgrid.index(s);
            distances[i] = 0.0;
            heap.push(Entry { cost: 0.0, index: i });
        }
        // Same edges and order as `for_each_edge`, on raw indices.
        let blocked = cgrid.cells();
        let (w, h) = (cgrid.width() as isize, cgrid.height() as isize);
        let res = cgrid.resolution();
        let free = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && !blocked[(y * w + x) as usize];
        while let Some(Entry { cost, index }) = heap.pop() {
            if cost > distances[index] {
                continue;
            }
            let (x, y) = ((index as isize) % w, (index as isize) / w);
            for &(dx, dy, step) in &MOVES {
                let (nx, ny) = (x + dx, y + dy);
                if !free(nx, ny) || (dx != 0 && dy != 0 && !(free(nx, y) && free(x, ny))) {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                let nd = cost + step * res;
                if nd < distances[j] && nd <= limit {
                    distances[j] = nd;
                    heap.push(Entry { cost: nd, index: j });
                }
            }
        }
        Ok(Self {
            grid_key: cgrid.fingerprint(),
            width: cgrid.width(),
            height: cgrid.height(),
            resolution: cgrid.resolution(),
            origin: cgrid.origin(),
            distances,
            sources: srcs,
        })
    }

    /// Fingerprint of the grid this field was computed on.
    pub fn grid_key(&self) -> u64 {
        self.grid_key
    }

    pub fn sources(&self) -> &[Cell] {
        &self.sources
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, cell: Cell) -> Option<f64> {
        if cell.x >= self.width || cell.y >= self.height {
            return None;
        }
        let d = self.distances[cell.y * self.width + cell.x];
        d.is_finite().then_some(d)
    }

    /// Distance at the cell containing `p` (cell-center convention).
    pub fn at_point(&self, p: Point) -> Option<f64> {
        let gx = ((p.x - self.origin.x) / self.resolution).floor();
        let gy = ((p.y - self.origin.y) / self.resolution).floor();
        if gx < 0.0 || gy < 0.0 {
            return None;
        }
        self.get(Cell::new(gx as usize, gy as usize))
    }

    /// Row-major distances; `f64::INFINITY` marks unreachable cells.
    pub fn as_slice(&self) -> &[f64] {
        &self.distances
    }

    pub fn reachable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        self.distances
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_finite())
            .map(move |(i, _)| Cell::new(i % w, i / w))
    }

    /// Largest finite distance in the field.
    pub fn max_finite(&self) -> f64 {
        self.distances
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    /// Next cell along a shortest path from `cell` toward the sources, or
    /// `None` at a source or an unreachable cell.
    pub fn descend(&self, cgrid: &OccupancyGrid, cell: Cell) -> Option<Cell> {
        debug_assert_eq!(cgrid.fingerprint(), self.grid_key);
        let here = self.get(cell)?;
        if here == 0.0 {
            return None;
        }
        let mut best: Option<(f64, Cell)> = None;
        for_each_edge(cgrid, cell, |n, w| {
            if let Some(dn) = self.get(n) {
                if (dn + w - here).abs() <= LENGTH_EPS && best.is_none_or(|(b, _)| dn < b) {
                    best = Some((dn, n));
                }
            }
        });
        best.map(|(_, c)| c)
    }
}

/// Minimum-cost cell path from `start` to the nearest of `goals`.
///
/// Empty when `start` is blocked or no goal is reachable. The path cost
/// equals the distance field value at `start`.
pub fn shortest_path(cgrid: &OccupancyGrid, start: Cell, goals: &[Cell]) -> Vec<Cell> {
    if !cgrid.contains(start) || cgrid.is_obstacle(start) {
        return Vec::new();
    }
    let free_goals: Vec<Cell> = goals
        .iter()
        .copied()
        .filter(|&g| cgrid.contains(g) && cgrid.is_free(g))
        .collect();
    let Ok(field) = DistanceField::compute(cgrid, &free_goals) else {
        return Vec::new();
    };
    if field.get(start).is_none() {
        return Vec::new();
    }
    let mut path = vec![start];
    let mut cur = start;
    while let Some(next) = field.descend(cgrid, cur) {
        path.push(next);
        cur = next;
    }
    path
}

/// Sum of edge costs along a cell path, meters.
pub fn path_cost(resolution: f64, path: &[Cell]) -> f64 {
    path.windows(2)
        .map(|w| {
            let diagonal = w[0].x != w[1].x && w[0].y != w[1].y;
            if diagonal {
                SQRT_2 * resolution
            } else {
                resolution
            }
        })
        .sum()
}

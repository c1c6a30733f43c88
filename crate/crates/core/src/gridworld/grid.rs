use std::fmt;
use std::hash::{Hash, Hasher};

use super::GridError;

/// A grid cell addressed by column `x` (rightward) and row `y` (downward).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A point in world coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Metric occupancy grid. `true` cells are obstacles.
///
/// Cell `(i, j)` spans `[origin.x + i*res, origin.x + (i+1)*res)` by
/// `[origin.y + j*res, origin.y + (j+1)*res)`. The outermost ring of cells is
/// always obstacle, so nothing can leave the world.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: f64,
    width: usize,
    height: usize,
    origin: Point,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        cells: Vec<bool>,
    ) -> Result<Self, GridError> {
        Self::with_origin(width, height, resolution, Point::default(), cells)
    }

    pub fn with_origin(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point,
        cells: Vec<bool>,
    ) -> Result<Self, GridError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(GridError::Resolution(resolution));
        }
        if width < 3 || height < 3 {
            return Err(GridError::TooSmall { width, height });
        }
        if cells.len() != width * height {
            return Err(GridError::CellCount {
                expected: width * height,
                got: cells.len(),
            });
        }
        let grid = Self {
            resolution,
            width,
            height,
            origin,
            cells,
        };
        if let Some(cell) = grid.border_cells().find(|&c| !grid.is_obstacle(c)) {
            return Err(GridError::OpenBorder(cell));
        }
        Ok(grid)
    }

    /// A closed rectangular room: obstacle border around free interior.
    pub fn empty_room(width: usize, height: usize, resolution: f64) -> Result<Self, GridError> {
        let mut cells = vec![false; width * height];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x + 1 == width || y + 1 == height {
                    cells[y * width + x] = true;
                }
            }
        }
        Self::new(width, height, resolution, cells)
    }

    /// Builds a grid from a cell predicate; border cells are forced to obstacle.
    pub fn from_fn(
        width: usize,
        height: usize,
        resolution: f64,
        mut obstacle: impl FnMut(Cell) -> bool,
    ) -> Result<Self, GridError> {
        let mut cells = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
                cells.push(border || obstacle(Cell::new(x, y)));
            }
        }
        Self::new(width, height, resolution, cells)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// World extent in meters.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn is_obstacle(&self, cell: Cell) -> bool {
        self.cells[self.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_obstacle(cell)
    }

    /// Obstacle flags in row-major order.
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cells.len())
            .filter(|&i| !self.cells[i])
            .map(|i| self.cell_at(i))
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&o| !o).count()
    }

    fn border_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let (w, h) = (self.width, self.height);
        (0..w)
            .flat_map(move |x| [Cell::new(x, 0), Cell::new(x, h - 1)])
            .chain((0..h).flat_map(move |y| [Cell::new(0, y), Cell::new(w - 1, y)]))
    }

    /// World-space center of a cell.
    pub fn cell_center(&self, cell: Cell) -> Point {
        Point::new(
            self.origin.x + (cell.x as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.y as f64 + 0.5) * self.resolution,
        )
    }

    /// Containing cell of a world point, `None` outside the grid.
    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        let gx = ((p.x - self.origin.x) / self.resolution).floor();
        let gy = ((p.y - self.origin.y) / self.resolution).floor();
        if gx < 0.0 || gy < 0.0 || !gx.is_finite() || !gy.is_finite() {
            return None;
        }
        let cell = Cell::new(gx as usize, gy as usize);
        self.contains(cell).then_some(cell)
    }

    /// True when `p` lies in a free cell.
    pub fn is_free_point(&self, p: Point) -> bool {
        self.cell_of(p).is_some_and(|c| self.is_free(c))
    }

    /// 8-neighbours that lie inside the grid.
    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        const OFFSETS: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        OFFSETS.iter().filter_map(move |&(dx, dy)| self.offset(cell, dx, dy))
    }

    pub fn offset(&self, cell: Cell, dx: isize, dy: isize) -> Option<Cell> {
        let x = cell.x.checked_add_signed(dx)?;
        let y = cell.y.checked_add_signed(dy)?;
        let c = Cell::new(x, y);
        self.contains(c).then_some(c)
    }

    /// Stable 64-bit fingerprint of geometry and occupancy, used to tie
    /// derived data (distance fields) to the grid they were computed on.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv64::default();
        self.width.hash(&mut h);
        self.height.hash(&mut h);
        self.resolution.to_bits().hash(&mut h);
        self.origin.x.to_bits().hash(&mut h);
        self.origin.y.to_bits().hash(&mut h);
        for chunk in self.cells.chunks(64) {
            let mut word = 0u64;
            for (i, &o) in chunk.iter().enumerate() {
                word |= (o as u64) << i;
            }
            word.hash(&mut h);
        }
        h.finish()
    }

    /// Returns a copy with the given cells marked obstacle.
    #[cfg(test)]
    pub(crate) fn with_obstacles(&self, cells: impl IntoIterator<Item = Cell>) -> Self {
        let mut out = self.clone();
        for c in cells {
            let i = out.index(c);
            out.cells[i] = true;
        }
        out
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point,
        cells: Vec<bool>,
    ) -> Self {
        Self {
            resolution,
            width,
            height,
            origin,
            cells,
        }
    }
}

/// FNV-1a; stable across platforms and toolchains, unlike `DefaultHasher`.
#[derive(Debug, Clone)]
pub struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for Fnv64 {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

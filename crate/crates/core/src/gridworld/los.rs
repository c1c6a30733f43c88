use super::grid::{Cell, OccupancyGrid, Point};

/// Visits every cell touched by the segment `a -> b` (supercover traversal).
///
/// Endpoints belong to their containing (half-open) cell. Where the segment
/// passes exactly through a cell corner, both side cells are visited as well,
/// so a ray never slips between diagonally touching obstacles. The visit
/// order is canonical (endpoints are sorted first), which makes the visited
/// set independent of direction. Returns `false` as soon as `visit` does.
pub fn traverse_segment(
    grid: &OccupancyGrid,
    a: Point,
    b: Point,
    mut visit: impl FnMut(Cell) -> bool,
) -> bool {
    let (a, b) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
    let res = grid.resolution();
    let o = grid.origin();
    let (ax, ay) = ((a.x - o.x) / res, (a.y - o.y) / res);
    let (bx, by) = ((b.x - o.x) / res, (b.y - o.y) / res);

    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let to_cell = |x: i64, y: i64| -> Option<Cell> {
        (x >= 0 && y >= 0 && x < w && y < h).then(|| Cell::new(x as usize, y as usize))
    };
    // Out-of-grid cells behave like obstacles: report them as a failed visit.
    let mut check = |x: i64, y: i64| -> bool { to_cell(x, y).is_some_and(&mut visit) };

    let (mut cx, mut cy) = (ax.floor() as i64, ay.floor() as i64);
    let (ex, ey) = (bx.floor() as i64, by.floor() as i64);
    if !check(cx, cy) {
        return false;
    }
    if (cx, cy) == (ex, ey) {
        return true;
    }

    let (dx, dy) = (bx - ax, by - ay);
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
    let mut t_max_x = if dx > 0.0 {
        ((cx + 1) as f64 - ax) / dx
    } else if dx < 0.0 {
        (cx as f64 - ax) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        ((cy + 1) as f64 - ay) / dy
    } else if dy < 0.0 {
        (cy as f64 - ay) / dy
    } else {
        f64::INFINITY
    };

    let budget = (ex - cx).abs() + (ey - cy).abs() + 2;
    for _ in 0..budget {
        if (cx, cy) == (ex, ey) {
            break;
        }
        let tie = (t_max_x - t_max_y).abs() <= 1e-12 * t_max_x.abs().max(1.0);
        if tie {
            if !check(cx + step_x, cy) || !check(cx, cy + step_y) {
                return false;
            }
            cx += step_x;
            cy += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            cx += step_x;
            t_max_x += t_delta_x;
        } else {
            cy += step_y;
            t_max_y += t_delta_y;
        }
        if !check(cx, cy) {
            return false;
        }
    }
    // Rounding can leave the walk one cell short of the end cell.
    check(ex, ey)
}

/// True iff the segment `a -> b` crosses no obstacle cell. Symmetric in its
/// endpoints.
pub fn line_of_sight(grid: &OccupancyGrid, a: Point, b: Point) -> bool {
    traverse_segment(grid, a, b, |c| grid.is_free(c))
}

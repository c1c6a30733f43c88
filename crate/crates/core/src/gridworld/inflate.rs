use super::grid::OccupancyGrid;
use crate::LENGTH_EPS;

/// Distance in meters from the center of a cell to the closed square of a
/// cell displaced by `(dx, dy)` cells.
pub(crate) fn center_to_cell_boundary(dx: isize, dy: isize, resolution: f64) -> f64 {
    let ax = (dx.unsigned_abs() as f64 - 0.5).max(0.0);
    let ay = (dy.unsigned_abs() as f64 - 0.5).max(0.0);
    ax.hypot(ay) * resolution
}

/// Dilates obstacles by `radius` meters (configuration-space inflation for a
/// disc agent).
///
/// A cell stays free iff its center is farther than `radius` from every
/// obstacle cell's square. Distances within [`LENGTH_EPS`] of the radius
/// count as contact.
pub fn inflate_obstacles(grid: &OccupancyGrid, radius: f64) -> OccupancyGrid {
    let radius = radius.max(0.0);
    if radius == 0.0 {
        return grid.clone();
    }
    let res = grid.resolution();
    let reach = (radius / res).ceil() as isize + 1;
    let mut stencil = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if center_to_cell_boundary(dx, dy, res) <= radius + LENGTH_EPS {
                stencil.push((dx, dy));
            }
        }
    }

    let (w, h) = (grid.width() as isize, grid.height() as isize);
    let src = grid.cells();
    let mut out = src.to_vec();
    for (i, &obstacle) in src.iter().enumerate() {
        if !obstacle {
            continue;
        }
        let (ox, oy) = ((i as isize) % w, (i as isize) / w);
        for &(dx, dy) in &stencil {
            let (x, y) = (ox + dx, oy + dy);
            if x >= 0 && y >= 0 && x < w && y < h {
                out[(y * w + x) as usize] = true;
            }
        }
    }
    OccupancyGrid::from_parts_unchecked(
        grid.width(),
        grid.height(),
        res,
        grid.origin(),
        out,
    )
}

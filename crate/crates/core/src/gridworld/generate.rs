//! Procedural indoor worlds: recursive room partitioning with doorways, plus
//! free-standing clutter blocks, labeled rooms and object instances.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::env::{Environment, ObjectInstance, Region};
use super::grid::{Cell, OccupancyGrid};
use super::inflate::inflate_obstacles;
use super::{free_components, EnvError};
use crate::format::is_label;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRequest {
    pub category: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateParams {
    pub scene_id: String,
    pub width_m: f64,
    pub height_m: f64,
    pub resolution: f64,
    pub room_count: usize,
    /// Target fraction of room floor covered by clutter blocks, in `[0, 0.4]`.
    /// Blocks keep a walkable margin around them, so dense targets may be
    /// met only partially.
    pub clutter_fraction: f64,
    /// One label per room, assigned in room order. May be shorter than the
    /// room count.
    pub region_labels: Vec<String>,
    pub objects: Vec<ObjectRequest>,
    pub door_width_m: f64,
    /// Agent radius the connectivity check is run for.
    pub agent_radius: f64,
    pub max_attempts: usize,
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self {
            scene_id: "scene".into(),
            width_m: 20.0,
            height_m: 20.0,
            resolution: 0.1,
            room_count: 4,
            clutter_fraction: 0.1,
            region_labels: Vec::new(),
            objects: Vec::new(),
            door_width_m: 1.0,
            agent_radius: 0.1,
            max_attempts: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("no connected free space after {attempts} attempts")]
    Failed { attempts: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Rect {
    fn w(&self) -> usize {
        self.x1 - self.x0
    }
    fn h(&self) -> usize {
        self.y1 - self.y0
    }
    fn area(&self) -> usize {
        self.w() * self.h()
    }
}

/// Doorway in a wall line. `vertical` walls sit at column `line` and the
/// opening spans rows `start..end`; horizontal walls are the transpose.
#[derive(Debug, Clone, Copy)]
struct Door {
    vertical: bool,
    line: usize,
    start: usize,
    end: usize,
}

fn cells_for(meters: f64, res: f64) -> usize {
    (meters / res).round().max(0.0) as usize
}

pub fn generate_environment(
    params: &GenerateParams,
    seed: u64,
) -> Result<Environment, GenerateError> {
    let p = params;
    let invalid = |s: String| Err(GenerateError::InvalidParams(s));
    if !(p.resolution.is_finite() && p.resolution > 0.0) {
        return invalid(format!("resolution {}", p.resolution));
    }
    let (w, h) = (cells_for(p.width_m, p.resolution), cells_for(p.height_m, p.resolution));
    if w < 3 || h < 3 {
        return invalid(format!("extent must be at least 3 cells, got {w}x{h}"));
    }
    if !(0.0..=0.4).contains(&p.clutter_fraction) {
        return invalid(format!("clutter_fraction {} outside [0, 0.4]", p.clutter_fraction));
    }
    if p.room_count == 0 {
        return invalid("room_count must be at least 1".into());
    }
    if p.region_labels.len() > p.room_count || p.region_labels.len() > 26 {
        return invalid("more region labels than rooms".into());
    }
    if let Some(bad) = p
        .region_labels
        .iter()
        .chain(p.objects.iter().map(|o| &o.category))
        .find(|l| !is_label(l))
    {
        return invalid(format!("bad label {bad:?}"));
    }
    if !is_label(&p.scene_id) {
        return invalid(format!("bad scene id {:?}", p.scene_id));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempts = p.max_attempts.max(1);
    for attempt in 1..=attempts {
        let Some(layout) = build_layout(p, w, h, &mut rng)? else {
            log::debug!("generation attempt {attempt} rejected");
            continue;
        };
        return finish(p, layout, &mut rng);
    }
    Err(GenerateError::Failed { attempts })
}

struct Layout {
    grid: OccupancyGrid,
    inflated: OccupancyGrid,
    rooms: Vec<Rect>,
}

fn build_layout(
    p: &GenerateParams,
    w: usize,
    h: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Layout>, GenerateError> {
    let res = p.resolution;
    let mut cells = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                cells[y * w + x] = true;
            }
        }
    }

    let min_room = cells_for(2.0, res).max(3);
    let door_cells = cells_for(p.door_width_m, res).max(1);
    let door_margin = cells_for(p.agent_radius, res) + 1;
    let mut rooms = vec![Rect {
        x0: 1,
        y0: 1,
        x1: w - 1,
        y1: h - 1,
    }];
    let mut doors: Vec<Door> = Vec::new();

    while rooms.len() < p.room_count {
        let mut order: Vec<usize> = (0..rooms.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(rooms[i].area()));
        let mut split = None;
        'rooms: for &ri in &order {
            let r = rooms[ri];
            let mut axes = Vec::new();
            if r.w() >= r.h() {
                axes.extend([true, false]);
            } else {
                axes.extend([false, true]);
            }
            for vertical in axes {
                let (lo, hi, span) = if vertical {
                    (r.x0, r.x1, r.h())
                } else {
                    (r.y0, r.y1, r.w())
                };
                if hi - lo < 2 * min_room + 1 || span < door_cells + 2 {
                    continue;
                }
                let candidates: Vec<usize> = (lo + min_room..hi - min_room)
                    .filter(|&pos| {
                        !doors.iter().any(|d| {
                            d.vertical != vertical
                                && (if vertical {
                                    d.line + 1 == r.y0 || d.line == r.y1
                                } else {
                                    d.line + 1 == r.x0 || d.line == r.x1
                                })
                                && pos + door_margin >= d.start
                                && pos < d.end + door_margin
                        })
                    })
                    .collect();
                if let Some(&pos) = candidates.choose(rng) {
                    split = Some((ri, vertical, pos));
                    break 'rooms;
                }
            }
        }
        let Some((ri, vertical, pos)) = split else {
            return Err(GenerateError::InvalidParams(format!(
                "cannot fit {} rooms into {w}x{h} cells",
                p.room_count
            )));
        };
        let r = rooms[ri];
        let (a0, a1) = if vertical { (r.y0, r.y1) } else { (r.x0, r.x1) };
        let door_start = rng.gen_range(a0 + 1..=a1 - door_cells - 1);
        let door = Door {
            vertical,
            line: pos,
            start: door_start,
            end: door_start + door_cells,
        };
        for t in a0..a1 {
            if t >= door.start && t < door.end {
                continue;
            }
            let (x, y) = if vertical { (pos, t) } else { (t, pos) };
            cells[y * w + x] = true;
        }
        doors.push(door);
        let (first, second) = if vertical {
            (Rect { x1: pos, ..r }, Rect { x0: pos + 1, ..r })
        } else {
            (Rect { y1: pos, ..r }, Rect { y0: pos + 1, ..r })
        };
        rooms[ri] = first;
        rooms.push(second);
    }

    if p.clutter_fraction > 0.0 {
        place_clutter(p, w, &mut cells, &rooms, rng);
    }

    let grid = OccupancyGrid::new(w, h, res, cells).map_err(EnvError::from)?;
    let inflated = inflate_obstacles(&grid, p.agent_radius);
    if free_components(&grid) != 1 || free_components(&inflated) != 1 {
        return Ok(None);
    }
    Ok(Some(Layout {
        grid,
        inflated,
        rooms,
    }))
}

fn place_clutter(
    p: &GenerateParams,
    w: usize,
    cells: &mut [bool],
    rooms: &[Rect],
    rng: &mut ChaCha8Rng,
) {
    let res = p.resolution;
    let floor: usize = rooms.iter().map(Rect::area).sum();
    let target = (p.clutter_fraction * floor as f64).round() as usize;
    let (min_side, max_side) = (cells_for(0.3, res).max(1), cells_for(1.0, res).max(1));
    let margin = cells_for(0.6, res).max(1);
    let mut placed = 0;
    let max_tries = 200 + 20 * target / (min_side * min_side);
    for _ in 0..max_tries {
        if placed >= target {
            break;
        }
        let room = rooms[rng.gen_range(0..rooms.len())];
        let sw = rng.gen_range(min_side..=max_side);
        let sh = rng.gen_range(min_side..=max_side);
        if room.w() < sw + 2 * margin || room.h() < sh + 2 * margin {
            continue;
        }
        let x = rng.gen_range(room.x0 + margin..=room.x1 - margin - sw);
        let y = rng.gen_range(room.y0 + margin..=room.y1 - margin - sh);
        let blocked = (y - margin..y + sh + margin)
            .any(|yy| (x - margin..x + sw + margin).any(|xx| cells[yy * w + xx]));
        if blocked {
            continue;
        }
        for yy in y..y + sh {
            for xx in x..x + sw {
                cells[yy * w + xx] = true;
            }
        }
        placed += sw * sh;
    }
}

fn finish(
    p: &GenerateParams,
    layout: Layout,
    rng: &mut ChaCha8Rng,
) -> Result<Environment, GenerateError> {
    let Layout {
        grid,
        inflated,
        rooms,
    } = layout;
    let mut regions = Vec::new();
    for (k, label) in p.region_labels.iter().enumerate() {
        let r = rooms[k];
        let cells: BTreeSet<Cell> = (r.y0..r.y1)
            .flat_map(|y| (r.x0..r.x1).map(move |x| Cell::new(x, y)))
            .filter(|&c| grid.is_free(c))
            .collect();
        regions.push(Region {
            id: label.clone(),
            glyph: (b'A' + k as u8) as char,
            cells,
        });
    }

    let mut spots: Vec<Cell> = inflated.free_cells().collect();
    let mut objects = Vec::new();
    for req in &p.objects {
        for _ in 0..req.count {
            if spots.is_empty() {
                return Err(GenerateError::InvalidParams(
                    "not enough free cells for objects".into(),
                ));
            }
            let cell = spots.swap_remove(rng.gen_range(0..spots.len()));
            objects.push(ObjectInstance {
                category: req.category.clone(),
                position: grid.cell_center(cell),
                instance_id: objects.len() as u32,
            });
        }
    }
    Ok(Environment::new(p.scene_id.clone(), grid, regions, objects)?)
}

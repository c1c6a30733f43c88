//! `NAVMAP v1` map files.
//!
//! ```text
//! NAVMAP v1 <width> <height> <resolution_m>
//! <height rows of <width> glyphs: '#' obstacle, '.' free, 'A'-'Z' free region cell>
//! region <glyph> <id>
//! object <category> <x_m> <y_m>
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::env::{Environment, ObjectInstance, Region};
use super::grid::{Cell, OccupancyGrid, Point};
use super::EnvError;
use crate::format::{fmt_num, is_label, parse_finite};

pub const MAP_MAGIC: &str = "NAVMAP";
pub const MAP_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct MapError {
    pub line: usize,
    pub column: usize,
    pub kind: MapErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapErrorKind {
    MalformedHeader(String),
    NonRectangular { expected: usize, got: usize },
    MissingRows { expected: usize, got: usize },
    UnknownGlyph(char),
    OpenBorder,
    MalformedRecord(String),
    UndeclaredRegion(char),
    UnusedRegion(char),
    DuplicateRegion(String),
    ObjectOnObstacle(String),
    Invalid(String),
}

impl fmt::Display for MapErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MalformedHeader(s) => write!(f, "malformed header: {s}"),
            Self::NonRectangular { expected, got } => {
                write!(f, "non-rectangular row: expected {expected} glyphs, got {got}")
            }
            Self::MissingRows { expected, got } => {
                write!(f, "expected {expected} grid rows, got {got}")
            }
            Self::UnknownGlyph(c) => write!(f, "unknown cell glyph {c:?}"),
            Self::OpenBorder => write!(f, "open border: border cells must be '#'"),
            Self::MalformedRecord(s) => write!(f, "malformed record: {s}"),
            Self::UndeclaredRegion(c) => write!(f, "region glyph {c:?} has no region record"),
            Self::UnusedRegion(c) => write!(f, "region glyph {c:?} marks no cells"),
            Self::DuplicateRegion(s) => write!(f, "duplicate region {s}"),
            Self::ObjectOnObstacle(s) => write!(f, "object {s} is not on a free cell"),
            Self::Invalid(s) => write!(f, "{s}"),
        }
    }
}

fn err(line: usize, column: usize, kind: MapErrorKind) -> MapError {
    MapError { line, column, kind }
}

/// Parses a map file. The scene id is not part of the file; callers
/// usually pass the file stem.
pub fn parse_map(scene_id: &str, text: &str) -> Result<Environment, MapError> {
    let lines: Vec<&str> = text.lines().collect();
    let header = lines
        .first()
        .ok_or_else(|| err(1, 1, MapErrorKind::MalformedHeader("empty file".into())))?;
    let (width, height, resolution) = parse_header(header)?;

    let mut cells = Vec::with_capacity(width * height);
    let mut glyph_cells: BTreeMap<char, BTreeSet<Cell>> = BTreeMap::new();
    let mut first_use: BTreeMap<char, (usize, usize)> = BTreeMap::new();
    for y in 0..height {
        let line_no = y + 2;
        let row = lines.get(y + 1).ok_or_else(|| {
            err(
                line_no,
                1,
                MapErrorKind::MissingRows {
                    expected: height,
                    got: y,
                },
            )
        })?;
        let glyphs: Vec<char> = row.chars().collect();
        if glyphs.len() != width {
            return Err(err(
                line_no,
                glyphs.len().min(width) + 1,
                MapErrorKind::NonRectangular {
                    expected: width,
                    got: glyphs.len(),
                },
            ));
        }
        for (x, &g) in glyphs.iter().enumerate() {
            let obstacle = match g {
                '#' => true,
                '.' => false,
                'A'..='Z' => {
                    glyph_cells.entry(g).or_default().insert(Cell::new(x, y));
                    first_use.entry(g).or_insert((line_no, x + 1));
                    false
                }
                other => return Err(err(line_no, x + 1, MapErrorKind::UnknownGlyph(other))),
            };
            let border = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
            if border && !obstacle {
                return Err(err(line_no, x + 1, MapErrorKind::OpenBorder));
            }
            cells.push(obstacle);
        }
    }
    let grid = OccupancyGrid::new(width, height, resolution, cells)
        .map_err(|e| err(1, 1, MapErrorKind::Invalid(e.to_string())))?;

    let mut regions: Vec<Region> = Vec::new();
    let mut objects = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(height + 1) {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["region", glyph, id] => {
                let mut chars = glyph.chars();
                let g = match (chars.next(), chars.next()) {
                    (Some(g @ 'A'..='Z'), None) => g,
                    _ => {
                        return Err(err(
                            line_no,
                            8,
                            MapErrorKind::MalformedRecord(format!("bad region glyph {glyph:?}")),
                        ))
                    }
                };
                if !is_label(id) {
                    return Err(err(
                        line_no,
                        10,
                        MapErrorKind::MalformedRecord(format!("bad region id {id:?}")),
                    ));
                }
                if regions.iter().any(|r| r.glyph == g || r.id == *id) {
                    return Err(err(line_no, 1, MapErrorKind::DuplicateRegion(id.to_string())));
                }
                let cells = glyph_cells
                    .get(&g)
                    .cloned()
                    .ok_or_else(|| err(line_no, 8, MapErrorKind::UnusedRegion(g)))?;
                regions.push(Region {
                    id: id.to_string(),
                    glyph: g,
                    cells,
                });
            }
            ["object", category, x, y] => {
                if !is_label(category) {
                    return Err(err(
                        line_no,
                        8,
                        MapErrorKind::MalformedRecord(format!("bad category {category:?}")),
                    ));
                }
                let (Some(px), Some(py)) = (parse_finite(x), parse_finite(y)) else {
                    return Err(err(
                        line_no,
                        9 + category.len(),
                        MapErrorKind::MalformedRecord("bad object coordinates".into()),
                    ));
                };
                let position = Point::new(px, py);
                if !grid.is_free_point(position) {
                    return Err(err(
                        line_no,
                        1,
                        MapErrorKind::ObjectOnObstacle(category.to_string()),
                    ));
                }
                objects.push(ObjectInstance {
                    category: category.to_string(),
                    position,
                    instance_id: objects.len() as u32,
                });
            }
            _ => {
                return Err(err(
                    line_no,
                    1,
                    MapErrorKind::MalformedRecord(format!("unrecognized record {line:?}")),
                ))
            }
        }
    }
    if let Some((&g, &(line, col))) = first_use
        .iter()
        .find(|(g, _)| !regions.iter().any(|r| r.glyph == **g))
    {
        return Err(err(line, col, MapErrorKind::UndeclaredRegion(g)));
    }

    Environment::new(scene_id, grid, regions, objects).map_err(|e| {
        let kind = match e {
            EnvError::ObjectOnObstacle { category, .. } => MapErrorKind::ObjectOnObstacle(category),
            other => MapErrorKind::Invalid(other.to_string()),
        };
        err(1, 1, kind)
    })
}

fn parse_header(line: &str) -> Result<(usize, usize, f64), MapError> {
    let bad = |s: &str| err(1, 1, MapErrorKind::MalformedHeader(s.to_string()));
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [magic, version, w, h, res] = fields.as_slice() else {
        return Err(bad("expected `NAVMAP v1 <width> <height> <resolution_m>`"));
    };
    if *magic != MAP_MAGIC {
        return Err(bad("missing NAVMAP magic"));
    }
    if *version != MAP_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let width: usize = w.parse().map_err(|_| bad("bad width"))?;
    let height: usize = h.parse().map_err(|_| bad("bad height"))?;
    let resolution = parse_finite(res)
        .filter(|r| *r > 0.0)
        .ok_or_else(|| bad("bad resolution"))?;
    if width < 3 || height < 3 {
        return Err(bad("width and height must be at least 3"));
    }
    Ok((width, height, resolution))
}

/// Writes an environment in map-file form. Objects are written in
/// instance-id order, which is the order `parse_map` assigns ids.
pub fn serialize_map(env: &Environment) -> String {
    let grid = env.grid();
    let mut out = format!(
        "{MAP_MAGIC} {MAP_VERSION} {} {} {}\n",
        grid.width(),
        grid.height(),
        fmt_num(grid.resolution())
    );
    let mut glyphs: Vec<char> = grid
        .cells()
        .iter()
        .map(|&o| if o { '#' } else { '.' })
        .collect();
    for r in env.regions() {
        for &c in &r.cells {
            glyphs[grid.index(c)] = r.glyph;
        }
    }
    for row in glyphs.chunks(grid.width()) {
        out.extend(row.iter());
        out.push('\n');
    }
    for r in env.regions() {
        out.push_str(&format!("region {} {}\n", r.glyph, r.id));
    }
    let mut objects: Vec<&ObjectInstance> = env.objects().iter().collect();
    objects.sort_by_key(|o| o.instance_id);
    for o in objects {
        out.push_str(&format!(
            "object {} {} {}\n",
            o.category,
            fmt_num(o.position.x),
            fmt_num(o.position.y)
        ));
    }
    out
}

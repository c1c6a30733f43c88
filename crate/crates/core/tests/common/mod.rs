//! Independent reference implementations and hand-built fixtures shared by
//! the integration tests. Nothing here calls into the code it checks, except
//! for plain accessors.

#![allow(dead_code)]

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use navbench::episode::{Pose, Termination};
use navbench::gridworld::{parse_map, AgentSpec, Cell, NavWorld, OccupancyGrid, Point};
use navbench::metrics::{EpisodeSummary, ProfileRow};
use navbench::scenario::{Goal, GoalKind, Scenario, ScenarioConstraints, Split};
use rand::Rng;

/// Random obstacle grid with the given obstacle density.
pub fn random_grid(rng: &mut impl Rng, w: usize, h: usize, density: f64) -> OccupancyGrid {
    OccupancyGrid::from_fn(w, h, 0.1, |_| rng.gen_bool(density)).unwrap()
}

/// Multi-source shortest distances by repeated full edge relaxation until
/// nothing changes. Sweeps alternate direction so long corridors settle in
/// few passes. Diagonal moves need both orthogonal neighbours free.
pub fn bellman_ford(grid: &OccupancyGrid, sources: &[Cell]) -> Vec<f64> {
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    let res = grid.resolution();
    let free = |x: isize, y: isize| {
        x >= 0 && y >= 0 && x < w && y < h && !grid.cells()[(y * w + x) as usize]
    };
    let mut d = vec![f64::INFINITY; grid.len()];
    for s in sources {
        if free(s.x as isize, s.y as isize) {
            d[s.y * grid.width() + s.x] = 0.0;
        }
    }
    for pass in 0.. {
        let mut changed = false;
        for k in 0..w * h {
            let k = if pass % 2 == 0 { k } else { w * h - 1 - k };
            let (x, y) = (k % w, k / w);
            if !free(x, y) {
                continue;
            }
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy) == (0, 0) || !free(x + dx, y + dy) {
                        continue;
                    }
                    if dx != 0 && dy != 0 && !(free(x + dx, y) && free(x, y + dy)) {
                        continue;
                    }
                    let step = if dx != 0 && dy != 0 { SQRT_2 } else { 1.0 } * res;
                    let from = d[((y + dy) * w + x + dx) as usize] + step;
                    let here = &mut d[(y * w + x) as usize];
                    if from < *here {
                        *here = from;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Distance from point `p` to the closed axis-aligned square of cell `c`.
fn point_to_square(grid: &OccupancyGrid, p: Point, c: Cell) -> f64 {
    let res = grid.resolution();
    let (x0, y0) = (c.x as f64 * res, c.y as f64 * res);
    let dx = (x0 - p.x).max(p.x - (x0 + res)).max(0.0);
    let dy = (y0 - p.y).max(p.y - (y0 + res)).max(0.0);
    dx.hypot(dy)
}

/// Obstacle mask after dilating by `radius`, by checking every cell against
/// every obstacle square.
pub fn brute_inflate(grid: &OccupancyGrid, radius: f64) -> Vec<bool> {
    let obstacles: Vec<Cell> = (0..grid.len())
        .map(|i| grid.cell_at(i))
        .filter(|&c| grid.is_obstacle(c))
        .collect();
    (0..grid.len())
        .map(|i| {
            let c = grid.cell_at(i);
            let p = grid.cell_center(c);
            obstacles
                .iter()
                .any(|&o| point_to_square(grid, p, o) <= radius + 1e-9)
        })
        .collect()
}

/// True when some of `samples` evenly spaced points on `a`-`b` falls in an
/// obstacle cell.
pub fn sampled_blocked(grid: &OccupancyGrid, a: Point, b: Point, samples: usize) -> bool {
    (0..=samples).any(|k| {
        let t = k as f64 / samples as f64;
        let p = Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
        grid.cell_of(p).is_some_and(|c| grid.is_obstacle(c))
    })
}

/// Closed-form shortest 8-connected distance on an empty grid.
pub fn octile(a: Cell, b: Cell, res: f64) -> f64 {
    let dx = a.x.abs_diff(b.x) as f64;
    let dy = a.y.abs_diff(b.y) as f64;
    (dx.max(dy) - dx.min(dy) + SQRT_2 * dx.min(dy)) * res
}

/// Cells seen from any of `positions`: reachable, within `radius` of a
/// sensing position and visible from it. Checks every cell of the map.
pub fn brute_coverage(
    world: &NavWorld,
    reachable: &[bool],
    positions: &[Point],
    radius: f64,
) -> Vec<bool> {
    let grid = world.cspace();
    let mut seen = vec![false; grid.len()];
    for &p in positions {
        for (i, s) in seen.iter_mut().enumerate() {
            if *s || !reachable[i] {
                continue;
            }
            let center = grid.cell_center(grid.cell_at(i));
            if center.distance(p) <= radius + 1e-9 && world.visible(p, center) {
                *s = true;
            }
        }
    }
    seen
}

/// Rows not dominated by any other row, compared on budget (lower is
/// better) and SPL, success rate and coverage (higher is better).
pub fn brute_pareto(rows: &[ProfileRow]) -> Vec<bool> {
    rows.iter()
        .map(|r| {
            !rows.iter().any(|q| {
                let ge = [
                    q.budget_m <= r.budget_m,
                    q.spl >= r.spl,
                    q.success_rate >= r.success_rate,
                    q.coverage >= r.coverage,
                ];
                let gt = [
                    q.budget_m < r.budget_m,
                    q.spl > r.spl,
                    q.success_rate > r.success_rate,
                    q.coverage > r.coverage,
                ];
                ge.iter().all(|&b| b) && gt.iter().any(|&b| b)
            })
        })
        .collect()
}

pub fn world_from(scene: &str, text: &str) -> Arc<NavWorld> {
    let env = parse_map(scene, text).unwrap();
    Arc::new(NavWorld::new(env, AgentSpec::default()).unwrap())
}

fn map_text(w: usize, h: usize, glyph: impl Fn(usize, usize) -> char, footer: &[&str]) -> String {
    let mut s = format!("NAVMAP v1 {w} {h} 0.1\n");
    for y in 0..h {
        s.extend((0..w).map(|x| glyph(x, y)));
        s.push('\n');
    }
    for f in footer {
        s.push_str(f);
        s.push('\n');
    }
    s
}

fn border(w: usize, h: usize, x: usize, y: usize) -> bool {
    x == 0 || y == 0 || x + 1 == w || y + 1 == h
}

/// 6 m x 4 m room split by a wall at x = 3.0..3.1 m that only leaves a gap
/// along the bottom.
pub fn wall_map() -> String {
    map_text(
        60,
        40,
        |x, y| {
            if border(60, 40, x, y) || (x == 30 && y <= 34) {
                '#'
            } else {
                '.'
            }
        },
        &[],
    )
}

/// Two points either side of the wall, 0.37 m apart in a straight line.
pub const WALL_NEAR: Point = Point::new(2.89, 0.55);
pub const WALL_FAR: Point = Point::new(3.26, 0.55);

pub fn wall_scenario(world: &NavWorld) -> Scenario {
    let start = Pose::new(1.5, 0.6, 0.0);
    let goal = Point::new(4.5, 0.6);
    let length = navbench::scenario::optimal_length(world, &Goal::Point(goal), 0.4, start.position())
        .unwrap()
        .unwrap();
    Scenario {
        scene_id: world.scene_id().to_string(),
        episode_id: 0,
        start,
        goal: Goal::Point(goal),
        geodesic_length: length,
        split: Split::Test,
    }
}

/// Constraints the wall scenario satisfies: the room is too narrow for the
/// default 1 m clearance near the wall.
pub fn wall_constraints() -> ScenarioConstraints {
    ScenarioConstraints {
        clearance_radius: 0.3,
        ..ScenarioConstraints::default()
    }
}

/// 5 m x 4 m room with a 2 m x 1.5 m kitchen in the top-right corner.
pub fn kitchen_map() -> String {
    map_text(
        50,
        40,
        |x, y| {
            if border(50, 40, x, y) {
                '#'
            } else if (30..49).contains(&x) && (1..16).contains(&y) {
                'K'
            } else {
                '.'
            }
        },
        &["region K kitchen"],
    )
}

/// 5 m x 4 m room with a mug on the far side of a wall that reaches down
/// from the top to y = 3.0 m.
pub fn mug_map() -> String {
    map_text(
        50,
        40,
        |x, y| {
            if border(50, 40, x, y) || (x == 25 && y < 30) {
                '#'
            } else {
                '.'
            }
        },
        &["object mug 2.8 1.0"],
    )
}

fn row(
    ep: u64,
    length: f64,
    path: f64,
    dist: f64,
    termination: Termination,
) -> EpisodeSummary {
    EpisodeSummary {
        scene_id: "fixture".into(),
        episode_id: ep,
        goal_kind: GoalKind::Point,
        success: termination == Termination::DoneSignal && dist < 0.4,
        path_length: path,
        geodesic_length: length,
        final_distance: dist,
        steps: 10,
        rotations: 0,
        infractions: 0,
        termination,
        coverage: None,
    }
}

/// Ten point-goal rows and their hand-computed (SPL, success rate) at
/// thresholds 0.2, 0.4 and 0.8.
pub fn tau_fixture() -> (Vec<EpisodeSummary>, [(f64, f64, f64); 3]) {
    use Termination::*;
    let rows = vec![
        row(0, 5.0, 5.0, 0.1, DoneSignal),   // 1.0 everywhere
        row(1, 4.0, 8.0, 0.15, DoneSignal),  // 0.5 everywhere
        row(2, 10.0, 10.0, 0.3, DoneSignal), // 1.0 from 0.4
        row(3, 2.0, 4.0, 0.35, DoneSignal),  // 0.5 from 0.4
        row(4, 3.0, 12.0, 0.5, DoneSignal),  // 0.25 at 0.8
        row(5, 6.0, 3.0, 0.79, DoneSignal),  // 1.0 at 0.8
        row(6, 5.0, 10.0, 0.2, DoneSignal),  // boundary at 0.2; 0.5 from 0.4
        row(7, 5.0, 5.0, 0.05, StepLimit),   // never
        row(8, 8.0, 16.0, 1.0, DoneSignal),  // never
        row(9, 4.0, 5.0, 0.4, DoneSignal),   // boundary at 0.4; 0.8 at 0.8
    ];
    let expected = [(0.2, 0.15, 0.2), (0.4, 0.35, 0.5), (0.8, 0.555, 0.8)];
    (rows, expected)
}

/// Finite float spread over many magnitudes, including exact zero.
fn any_float(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..6) {
        0 => 0.0,
        1 => rng.gen_range(0.0..1.0),
        2 => rng.gen_range(0.0..100.0),
        3 => rng.gen::<f64>() * 10f64.powi(rng.gen_range(-12..12)),
        4 => f64::from_bits(rng.gen_range(1..0x7fe0_0000_0000_0000)),
        _ => f64::MIN_POSITIVE,
    }
}

fn signed_float(rng: &mut impl Rng) -> f64 {
    let x = any_float(rng);
    if rng.gen() {
        -x
    } else {
        x
    }
}

/// Uniform-ish value in `(lo, hi]` or `[lo, hi)`, nudged away from the open end.
fn in_range(rng: &mut impl Rng, lo: f64, hi: f64, open_lo: bool) -> f64 {
    let x = rng.gen_range(lo..hi);
    if open_lo && x == lo {
        hi
    } else {
        x
    }
}

fn label(rng: &mut impl Rng) -> String {
    const HEAD: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    const TAIL: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789_-.";
    let n = rng.gen_range(0..12);
    let mut s = String::new();
    s.push(HEAD[rng.gen_range(0..HEAD.len())] as char);
    for _ in 0..n {
        s.push(TAIL[rng.gen_range(0..TAIL.len())] as char);
    }
    s
}

fn text(rng: &mut impl Rng) -> String {
    const POOL: &[char] = &[
        'a', 'Z', '0', ' ', '%', '=', '-', '\n', '\r', '\t', '"', '\\', 'é', '漢', '🙂', '\u{0}',
    ];
    let n = rng.gen_range(0..16);
    (0..n).map(|_| POOL[rng.gen_range(0..POOL.len())]).collect()
}

fn goal(rng: &mut impl Rng) -> Goal {
    match rng.gen_range(0..3) {
        0 => Goal::Point(Point::new(signed_float(rng), signed_float(rng))),
        1 => Goal::Object(label(rng)),
        _ => Goal::Area(label(rng)),
    }
}

fn sensors(rng: &mut impl Rng) -> navbench::episode::Sensors {
    navbench::episode::Sensors {
        goal_vector: rng.gen(),
        patch: rng.gen::<bool>().then(|| 2 * rng.gen_range(0..51) + 1),
    }
}

fn termination(rng: &mut impl Rng) -> Termination {
    use Termination::*;
    [DoneSignal, StepLimit, Timeout, ProtocolError, BudgetExhausted][rng.gen_range(0..5)]
}

/// Random well-formed protocol message of any kind.
pub fn random_message(rng: &mut impl Rng) -> navbench::harness::protocol::ProtocolMessage {
    use navbench::episode::{Action, GoalVector, LocalPatch, Observation};
    use navbench::harness::protocol::{EpisodeEnd, EpisodeSetup, ProtocolMessage};
    use std::f64::consts::{PI, TAU};
    match rng.gen_range(0..6) {
        0 => ProtocolMessage::Hello {
            agent_name: text(rng),
            sensors: sensors(rng),
        },
        1 => ProtocolMessage::Config(EpisodeSetup {
            scene_id: label(rng),
            episode_id: rng.gen(),
            goal: goal(rng),
            sensors: sensors(rng),
            step_size: any_float(rng).max(1e-9),
            turn_angle: in_range(rng, 0.0, PI, true),
            fov: in_range(rng, 0.0, TAU, true),
            tau: any_float(rng).max(1e-9),
            max_steps: rng.gen(),
        }),
        2 => {
            let patch = rng.gen::<bool>().then(|| {
                let size = 2 * rng.gen_range(0..8) + 1;
                LocalPatch {
                    size,
                    cells: (0..size * size).map(|_| rng.gen()).collect(),
                }
            });
            ProtocolMessage::Obs(Observation {
                steps: rng.gen(),
                odometry: Pose::new(signed_float(rng), signed_float(rng), rng.gen_range(0.0..TAU)),
                goal: rng.gen::<bool>().then(|| goal(rng)),
                goal_vector: rng.gen::<bool>().then(|| GoalVector {
                    distance: any_float(rng),
                    bearing: in_range(rng, -PI, PI, true),
                }),
                local_patch: patch,
                last_collision: rng.gen(),
            })
        }
        3 => ProtocolMessage::Act(Action::ALL[rng.gen_range(0..Action::ALL.len())]),
        4 => ProtocolMessage::End(EpisodeEnd {
            scene_id: label(rng),
            episode_id: rng.gen(),
            success: rng.gen(),
            path_length: any_float(rng),
            steps: rng.gen(),
            termination: termination(rng),
        }),
        _ => ProtocolMessage::Err {
            code: label(rng),
            text: text(rng),
        },
    }
}

/// Serves `scenarios` to whatever `client` does with its end of a loopback
/// connection.
pub fn serve_to<C>(
    work: &navbench::harness::Workload,
    scenarios: &[Scenario],
    config: &navbench::harness::remote::ServeConfig,
    client: C,
) -> navbench::harness::remote::SessionResult
where
    C: FnOnce(std::net::TcpStream) + Send + 'static,
{
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let agent = std::thread::spawn(move || client(std::net::TcpStream::connect(addr).unwrap()));
    let result = navbench::harness::remote::serve_remote(&listener, work, scenarios, config).unwrap();
    agent.join().unwrap();
    result
}

/// Reference client running the oracle on the worlds of `work`.
pub fn oracle_client(
    work: &navbench::harness::Workload,
) -> impl FnOnce(std::net::TcpStream) + Send + 'static {
    use navbench::agents::{make_agent, AgentKind, Policy};
    let worlds = work.worlds.clone();
    move |stream| {
        let sensors = navbench::episode::Sensors {
            goal_vector: true,
            patch: None,
        };
        navbench::harness::remote::run_client(stream, "oracle", sensors, |setup| {
            let world = worlds[&setup.scene_id].clone();
            Box::new(make_agent(AgentKind::Oracle, 0, Some(world)).unwrap()) as Box<dyn Policy>
        })
        .unwrap();
    }
}

/// Shortest distance from `from` to the nearest of `targets` by a plain
/// heap Dijkstra that stops at the first target settled.
pub fn dijkstra_to(grid: &OccupancyGrid, from: Cell, targets: &[Cell]) -> f64 {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    let free = |x: isize, y: isize| {
        x >= 0 && y >= 0 && x < w && y < h && !grid.cells()[(y * w + x) as usize]
    };
    let mut target = vec![false; grid.len()];
    for t in targets {
        target[t.y * grid.width() + t.x] = true;
    }
    let mut d = vec![f64::INFINITY; grid.len()];
    let mut heap = BinaryHeap::new();
    let start = from.y * grid.width() + from.x;
    if !free(from.x as isize, from.y as isize) {
        return f64::INFINITY;
    }
    d[start] = 0.0;
    // Distances are non-negative so their bit patterns order like the values.
    heap.push(Reverse((0f64.to_bits(), start)));
    while let Some(Reverse((bits, k))) = heap.pop() {
        let dk = f64::from_bits(bits);
        if dk > d[k] {
            continue;
        }
        if target[k] {
            return dk;
        }
        let (x, y) = ((k as isize) % w, (k as isize) / w);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy) == (0, 0) || !free(x + dx, y + dy) {
                    continue;
                }
                if dx != 0 && dy != 0 && !(free(x + dx, y) && free(x, y + dy)) {
                    continue;
                }
                let step = if dx != 0 && dy != 0 { SQRT_2 } else { 1.0 } * grid.resolution();
                let j = ((y + dy) * w + x + dx) as usize;
                if dk + step < d[j] {
                    d[j] = dk + step;
                    heap.push(Reverse(((dk + step).to_bits(), j)));
                }
            }
        }
    }
    f64::INFINITY
}

/// Raw obstacle cell centers within `r` of `p`, scanning a bounding window.
pub fn crowded(world: &NavWorld, p: Point, r: f64) -> bool {
    let raw = world.raw();
    let res = raw.resolution();
    let o = raw.origin();
    let span = |v: f64, lo: f64, n: usize| {
        let a = (((v - r - lo) / res).floor() - 1.0).max(0.0) as usize;
        let b = ((((v + r - lo) / res).ceil() + 1.0).max(0.0) as usize).min(n - 1);
        a..=b
    };
    span(p.y, o.y, raw.height()).any(|y| {
        span(p.x, o.x, raw.width()).any(|x| {
            let c = Cell::new(x, y);
            raw.is_obstacle(c) && raw.cell_center(c).distance(p) <= r + 1e-9
        })
    })
}

//! End-to-end acceptance run. Prints one PASS or FAIL line per criterion
//! and exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use navbench::agents::{make_agent, AgentKind};
use navbench::episode::{
    decode_log, encode_log, run_episode, run_exploration, CoverageTracker,
    EpisodeConfig, ExplorationConfig, Termination,
};
use navbench::geodesic::{path_cost, shortest_path, success_region, DistanceField, GoalFields};
use navbench::gridworld::{Cell, OccupancyGrid};
use navbench::harness::protocol::{decode_message, encode_message};
use navbench::harness::remote::ServeConfig;
use navbench::harness::report::emit_csv;
use navbench::harness::suite::{desk_scale_suite, SuiteSpec};
use navbench::harness::{report_context, run_batch, AgentSelection, BatchResult, RunConfig, Workload};
use navbench::metrics::{spl, EpisodeSummary, MetricsReport};
use navbench::scenario::{effective_clearance, split_assign, Goal, Split, SplitRatios};
use navbench::GoalKind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

fn batch(kind: AgentKind, parallelism: usize, work: &Workload) -> (RunConfig, BatchResult) {
    let config = RunConfig {
        agent: AgentSelection::Builtin { kind, seed: 0 },
        parallelism,
        ..RunConfig::default()
    };
    let result = run_batch(&config, work).unwrap();
    (config, result)
}

fn csv(config: &RunConfig, r: &BatchResult) -> String {
    emit_csv(&r.report, &report_context(config, r.privileged, false))
}

fn summary(success: bool, l: f64, p: f64) -> EpisodeSummary {
    EpisodeSummary {
        scene_id: "x".into(),
        episode_id: 0,
        goal_kind: GoalKind::Point,
        success,
        path_length: p,
        geodesic_length: l,
        final_distance: 0.0,
        steps: 1,
        rotations: 0,
        infractions: 0,
        termination: Termination::DoneSignal,
        coverage: None,
    }
}

fn spl_examples() -> Outcome {
    let cases = [
        (vec![summary(true, 10.0, 10.0), summary(false, 8.0, 3.0)], 0.5),
        (vec![summary(true, 4.0, 8.0), summary(true, 10.0, 20.0)], 0.5),
        (vec![summary(true, 6.0, 12.0), summary(false, 6.0, 12.0)], 0.25),
    ];
    let got: Vec<f64> = cases.iter().map(|(rows, _)| spl(rows).unwrap()).collect();
    for (g, (_, want)) in got.iter().zip(&cases) {
        ensure((g - want).abs() <= 1e-12, || format!("got {got:?}"))?;
    }
    Ok(format!("{got:?}"))
}

fn stumbler(report: &MetricsReport) -> Outcome {
    ensure(report.n_episodes >= 500, || format!("{} episodes", report.n_episodes))?;
    ensure(report.spl == 0.0 && report.success_rate == 0.0, || {
        format!("SPL {} success {}", report.spl, report.success_rate)
    })?;
    ensure(report.rows.iter().all(|r| !r.success && r.termination != Termination::DoneSignal), || {
        "an episode ended in Done".into()
    })?;
    let close = report.rows.iter().filter(|r| r.final_distance < 0.4).count();
    Ok(format!("{} episodes, {close} ended within tau, all scored 0", report.n_episodes))
}

fn wall_fixture() -> Outcome {
    let world = common::world_from("wall", &common::wall_map());
    let (near, far) = (common::WALL_NEAR, common::WALL_FAR);
    let tau = world.spec().default_tau();
    let fields = GoalFields::build(&world, &Goal::Point(far), tau).unwrap();
    let g = fields.goal_distance(near).unwrap();
    ensure(near.distance(far) < tau && g > 10.0 * tau, || format!("geodesic {g}"))?;
    ensure(!fields.region().contains(world.cspace().cell_of(near).unwrap()), || {
        "near point inside success region".into()
    })?;
    let s = common::wall_scenario(&world);
    let cfg = EpisodeConfig {
        validation: common::wall_constraints(),
        ..EpisodeConfig::default()
    };
    let run = |kind| {
        let mut agent = make_agent(kind, 0, Some(world.clone())).unwrap();
        run_episode(world.clone(), &s, &cfg, &mut agent).unwrap()
    };
    let greedy = run(AgentKind::Greedy);
    let oracle = run(AgentKind::Oracle);
    ensure(!greedy.success || greedy.path_length_m >= 3.0 * s.geodesic_length, || {
        format!("greedy succeeded with p = {:.2}", greedy.path_length_m)
    })?;
    ensure(oracle.success, || "oracle failed".into())?;
    Ok(format!(
        "euclidean {:.2} m, geodesic {g:.2} m; greedy success={} p={:.1}; oracle p={:.1} l={:.1}",
        near.distance(far),
        greedy.success,
        greedy.path_length_m,
        oracle.path_length_m,
        s.geodesic_length
    ))
}

fn field_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut paths = 0;
    for round in 0..100 {
        let (w, h) = (rng.gen_range(3..=20), rng.gen_range(3..=20));
        let density = rng.gen_range(0.0..0.35);
        let grid = common::random_grid(&mut rng, w, h, density);
        let free: Vec<Cell> = grid.free_cells().collect();
        if free.len() < 2 {
            continue;
        }
        let sources: Vec<Cell> = free.choose_multiple(&mut rng, 1 + round % 3).copied().collect();
        let field = DistanceField::compute(&grid, &sources).unwrap();
        for (a, b) in field.as_slice().iter().zip(common::bellman_ford(&grid, &sources)) {
            if a.is_finite() != b.is_finite() {
                return Err(format!("round {round}: reachability differs"));
            }
            if a.is_finite() {
                worst = worst.max((a - b).abs());
            }
        }
        let start = *free.choose(&mut rng).unwrap();
        let path = shortest_path(&grid, start, &sources);
        match field.get(start) {
            Some(d) => {
                let c = path_cost(grid.resolution(), &path);
                ensure((c - d).abs() <= 1e-9, || format!("round {round}: path {c} field {d}"))?;
                paths += 1;
            }
            None => ensure(path.is_empty(), || format!("round {round}: path to nowhere"))?,
        }
    }
    ensure(worst <= 1e-9, || format!("max difference {worst:e}"))?;
    Ok(format!("max difference {worst:e}, {paths} path costs equal"))
}

fn octile_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut lo, mut hi) = (f64::INFINITY, 0f64);
    let mut pairs = 0;
    for (w, h) in [(60, 40), (100, 100), (30, 90), (120, 20)] {
        let grid = OccupancyGrid::empty_room(w, h, 0.1).unwrap();
        let res = grid.resolution();
        let free: Vec<Cell> = grid.free_cells().collect();
        for _ in 0..50 {
            let a = *free.choose(&mut rng).unwrap();
            let field = DistanceField::compute(&grid, &[a]).unwrap();
            for _ in 0..50 {
                let b = *free.choose(&mut rng).unwrap();
                if a == b {
                    continue;
                }
                let g = field.get(b).unwrap();
                let e = grid.cell_center(a).distance(grid.cell_center(b));
                ensure(g >= e - 2.0 * res && g <= 1.0824 * e + 2.0 * res, || {
                    format!("{a:?}-{b:?}: geodesic {g} euclidean {e}")
                })?;
                lo = lo.min(g / e);
                hi = hi.max(g / e);
                pairs += 1;
            }
        }
    }
    ensure(pairs >= 9_900, || format!("only {pairs} pairs"))?;
    Ok(format!("{pairs} pairs, ratio {lo:.4}..{hi:.4}"))
}

fn generator(work: &Workload) -> Outcome {
    let constraints = RunConfig::default().validation;
    let mut spans = Vec::new();
    for (scene, world) in &work.worlds {
        let list: Vec<_> = work.scenarios.iter().filter(|s| &s.scene_id == scene).collect();
        ensure(list.len() == 100, || format!("{scene}: {} scenarios", list.len()))?;
        let cspace = world.cspace();
        let (radius, _) = effective_clearance(world, constraints.clearance_radius);
        let (mut lo, mut hi) = (f64::INFINITY, 0f64);
        for s in list {
            let from = cspace.cell_of(s.start.position()).unwrap();
            let targets: Vec<Cell> = match &s.goal {
                Goal::Point(p) => vec![cspace.cell_of(*p).unwrap()],
                g => success_region(world, g, constraints.tau).unwrap().cells().to_vec(),
            };
            let l = common::dijkstra_to(cspace, from, &targets);
            let tag = || format!("{scene}/{}", s.episode_id);
            ensure(l.is_finite(), || format!("{}: unreachable", tag()))?;
            ensure((l - s.geodesic_length).abs() <= 1e-9, || format!("{}: {l} vs {}", tag(), s.geodesic_length))?;
            ensure(l >= constraints.min_separation - 1e-9, || format!("{}: length {l}", tag()))?;
            ensure(!common::crowded(world, s.start.position(), radius), || format!("{}: start crowded", tag()))?;
            if let Goal::Point(g) = s.goal {
                ensure(!common::crowded(world, g, radius), || format!("{}: goal crowded", tag()))?;
            }
            lo = lo.min(l);
            hi = hi.max(l);
        }
        ensure(hi - lo >= 5.0, || format!("{scene}: lengths {lo:.2}..{hi:.2}"))?;
        spans.push(hi - lo);
    }
    let ids: Vec<String> = (0..20).map(|i| format!("scene_{i:02}")).collect();
    let split = split_assign(&ids, &SplitRatios::default(), 0).unwrap();
    let count = |sp| split.values().filter(|&&v| v == sp).count();
    let counts = (count(Split::Train), count(Split::Val), count(Split::Test));
    ensure(counts == (14, 3, 3), || format!("split {counts:?}"))?;
    let min_span = spans.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!(
        "{} scenes x 100 rechecked, min length span {min_span:.1} m, split {counts:?}",
        spans.len()
    ))
}

fn oracle(report: &MetricsReport) -> Outcome {
    let worst = report.rows.iter().map(|r| r.efficiency()).fold(1.0, f64::min);
    ensure(report.success_rate == 1.0, || format!("success {}", report.success_rate))?;
    ensure(report.spl >= 0.95, || format!("SPL {}", report.spl))?;
    ensure(worst >= 0.9, || format!("worst efficiency {worst}"))?;
    Ok(format!(
        "{} episodes, SPL {:.4}, worst efficiency {worst:.4}",
        report.n_episodes, report.spl
    ))
}

fn report_properties(reports: &[&MetricsReport]) -> Outcome {
    for r in reports {
        ensure(r.spl <= r.success_rate + 1e-12, || format!("SPL {} > success {}", r.spl, r.success_rate))?;
        for w in r.tau_sweep.points.windows(2) {
            ensure(w[0].spl <= w[1].spl + 1e-12 && w[0].success_rate <= w[1].success_rate, || {
                format!("sweep not monotone at tau {}", w[1].tau)
            })?;
        }
        for p in &r.tau_sweep.points {
            ensure(p.spl <= p.success_rate + 1e-12, || format!("tau {}: SPL above success", p.tau))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..2000 {
        let n = rng.gen_range(1..50);
        let mut rows: Vec<EpisodeSummary> = (0..n)
            .map(|_| summary(rng.gen_bool(0.6), rng.gen_range(0.1..30.0), rng.gen_range(0.0..80.0)))
            .collect();
        let base = spl(&rows).unwrap();
        let c = rng.gen_range(0.01..100.0);
        let scaled: Vec<_> = rows
            .iter()
            .map(|r| EpisodeSummary {
                path_length: r.path_length * c,
                geodesic_length: r.geodesic_length * c,
                ..r.clone()
            })
            .collect();
        ensure((spl(&scaled).unwrap() - base).abs() <= 1e-12, || format!("scale {c} changed SPL"))?;
        rows.shuffle(&mut rng);
        ensure((spl(&rows).unwrap() - base).abs() <= 1e-12, || "shuffle changed SPL".into())?;
    }
    Ok(format!("{} reports, 2000 randomized scale and shuffle cases", reports.len()))
}

fn exploration(work: &Workload) -> Outcome {
    const BUDGETS: [f64; 5] = [0.0, 25.0, 50.0, 100.0, 200.0];
    let mut finals = Vec::new();
    let mut seen = BTreeSet::new();
    for s in &work.scenarios {
        if !seen.insert(&s.scene_id) {
            continue;
        }
        let world = work.worlds[&s.scene_id].clone();
        let mut last = -1.0;
        for budget in BUDGETS {
            let mut agent = make_agent(AgentKind::Frontier, 0, Some(world.clone())).unwrap();
            let cfg = ExplorationConfig::new(budget, world.spec().step_size);
            let (live, rec) = run_exploration(world.clone(), s.start, &cfg, &mut agent).unwrap();
            let tag = || format!("{} at {budget} m", s.scene_id);
            ensure(live.coverage_fraction >= last, || format!("{}: coverage fell", tag()))?;
            last = live.coverage_fraction;
            // Recompute from the serialized log alone.
            let rec = decode_log(&encode_log(&rec)).unwrap();
            let mut tracker = CoverageTracker::new(&world, rec.start.position());
            tracker.observe(&world, rec.start.position());
            for e in &rec.entries {
                tracker.observe(&world, e.pose.position());
            }
            let traveled = rec.entries.last().map_or(0.0, |e| e.path_length);
            let again = tracker.record(&world, budget, traveled);
            ensure(again == live, || format!("{}: log coverage differs", tag()))?;
        }
        finals.push(last);
    }
    let min = finals.iter().copied().fold(1.0, f64::min);
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    ensure(min >= 0.9, || format!("coverage at 200 m: {finals:.3?}"))?;
    Ok(format!("{} scenes, coverage at 200 m min {min:.3} mean {mean:.3}", finals.len()))
}

fn protocol(work: &Workload, local: &BatchResult) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..100_000 {
        let m = common::random_message(&mut rng);
        let line = encode_message(&m);
        ensure(decode_message(&line).as_ref() == Ok(&m), || format!("case {i}: {line}"))?;
    }
    // Two scenes over the wire against the in-process records.
    let mut scenarios = work.scenarios.clone();
    scenarios.sort_by(|a, b| (&a.scene_id, a.episode_id).cmp(&(&b.scene_id, b.episode_id)));
    scenarios.truncate(200);
    let session = common::serve_to(work, &scenarios, &ServeConfig::default(), common::oracle_client(work));
    ensure(session.records.len() == scenarios.len(), || "episode count differs".into())?;
    for r in &session.records {
        let l = local
            .records
            .iter()
            .find(|l| l.scenario == r.scenario)
            .ok_or("remote episode missing locally")?;
        ensure(r.success == l.success && (r.path_length_m - l.path_length_m).abs() <= 1e-9, || {
            format!("{}/{} differs", r.scenario.scene_id, r.scenario.episode_id)
        })?;
    }
    let slow = ServeConfig {
        step_timeout: Duration::from_millis(200),
        ..ServeConfig::default()
    };
    let timed = common::serve_to(work, &scenarios[..1], &slow, |mut stream| {
        use std::io::{BufRead, BufReader, Write};
        writeln!(stream, "HELLO v1 name=sleepy sensors=gv").unwrap();
        let mut input = BufReader::new(stream);
        let mut line = String::new();
        while input.read_line(&mut line).map(|n| n > 0).unwrap_or(false) {
            line.clear();
        }
    });
    let t = &timed.records[0];
    ensure(t.termination == Termination::Timeout && !t.success, || format!("{:?}", t.termination))?;
    Ok(format!(
        "100000 round trips, {} remote episodes identical, timeout scored 0",
        session.records.len()
    ))
}

fn determinism(one: (&RunConfig, &BatchResult), eight: (&RunConfig, &BatchResult)) -> Outcome {
    let a = csv(one.0, one.1);
    let b = csv(eight.0, eight.1);
    ensure(a == b, || "CSV differs between parallelism 1 and 8".into())?;
    Ok(format!("{} bytes identical", a.len()))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut failed = 0;
    let mut lap = Instant::now();
    let mut report = |n: u32, name: &str, outcome: Outcome| {
        let took = lap.elapsed().as_secs_f64();
        lap = Instant::now();
        match &outcome {
            Ok(detail) => println!("PASS {n:>2}. {name}: {detail} [{took:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2}. {name}: {why} [{took:.1} s]");
            }
        }
    };
    let work = desk_scale_suite(&SuiteSpec::default()).unwrap();

    report(1, "SPL worked examples", spl_examples());
    let (_, stumbled) = batch(AgentKind::Stumbler, 1, &work);
    report(2, "Done is required for success", stumbler(&stumbled.report));
    report(3, "geodesic success on the wall fixture", wall_fixture());
    report(4, "distance field equals Bellman-Ford", field_equivalence());
    report(5, "octile bound on empty rooms", octile_bound());
    report(6, "scenario generator and splits", generator(&work));
    let (oracle_config, oracle_run) = batch(AgentKind::Oracle, 1, &work);
    report(7, "oracle performance", oracle(&oracle_run.report));
    let (wide_config, wide_run) = batch(AgentKind::Oracle, 8, &work);
    report(
        8,
        "tau sweep and SPL invariants",
        report_properties(&[&stumbled.report, &oracle_run.report, &wide_run.report]),
    );
    report(9, "frontier exploration coverage", exploration(&work));
    report(10, "protocol round trip, remote agent, timeout", protocol(&work, &oracle_run));
    report(
        11,
        "CSV independent of parallelism",
        determinism((&oracle_config, &oracle_run), (&wide_config, &wide_run)),
    );
    let elapsed = started.elapsed();
    report(
        12,
        "runtime",
        if elapsed < Duration::from_secs(180) {
            Ok(format!("{:.1} s", elapsed.as_secs_f64()))
        } else {
            Err(format!("{:.1} s", elapsed.as_secs_f64()))
        },
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use navbench::agents::{make_agent, AgentKind};
use navbench::episode::{
    begin_episode, decode_log, encode_log, replay_trajectory, run_episode, run_exploration,
    Action, EpisodeConfig, EpisodeError, ExplorationConfig, Pose, Sensors, StepOutcome,
    Termination,
};
use navbench::gridworld::{generate_environment, AgentSpec, NavWorld, Point};
use navbench::harness::suite::scene_params;
use navbench::scenario::{sample_scenarios, GoalKind, Scenario, ScenarioConstraints};
use navbench::EpisodeRecord;

fn scene(seed: u64) -> (Arc<NavWorld>, Vec<Scenario>) {
    let env = generate_environment(&scene_params("ep", 12.0), seed).unwrap();
    let world = Arc::new(NavWorld::new(env, AgentSpec::default()).unwrap());
    let c = ScenarioConstraints {
        clearance_radius: 0.5,
        ..ScenarioConstraints::default()
    };
    let s = sample_scenarios(&world, GoalKind::Point, 6, &c, seed).unwrap().scenarios;
    (world, s)
}

fn config() -> EpisodeConfig {
    EpisodeConfig {
        validation: ScenarioConstraints {
            clearance_radius: 0.5,
            ..ScenarioConstraints::default()
        },
        ..EpisodeConfig::default()
    }
}

fn run(world: &Arc<NavWorld>, s: &Scenario, kind: AgentKind, seed: u64) -> EpisodeRecord {
    let mut agent = make_agent(kind, seed, Some(world.clone())).unwrap();
    run_episode(world.clone(), s, &config(), &mut agent).unwrap()
}

fn check_record(world: &NavWorld, r: &EpisodeRecord) {
    // Path length is the sum of logged displacements.
    let mut prev = r.scenario.start.position();
    let mut total = 0.0;
    for e in &r.trajectory {
        let p = e.pose.position();
        total += prev.distance(p);
        prev = p;
        assert!((e.path_length - total).abs() <= 1e-9);
        assert!(world.is_pose_free(p), "pose {p:?} in collision");
    }
    assert!((r.path_length_m - total).abs() <= 1e-9);
    assert!(r.steps <= config().max_steps);
    assert!(r.final_geodesic_to_goal_m >= 0.0);
    if r.success {
        assert_eq!(r.termination, Termination::DoneSignal);
    }
}

#[test]
fn records_satisfy_invariants_for_every_agent() {
    for seed in 0..2 {
        let (world, scenarios) = scene(seed);
        for s in &scenarios {
            for kind in [
                AgentKind::Random,
                AgentKind::Greedy,
                AgentKind::Oracle,
                AgentKind::Stumbler,
            ] {
                for agent_seed in 0..2 {
                    check_record(&world, &run(&world, s, kind, agent_seed));
                }
            }
        }
    }
}

#[test]
fn episodes_are_deterministic() {
    let (world, scenarios) = scene(3);
    for s in &scenarios {
        for kind in [AgentKind::Random, AgentKind::Oracle] {
            let a = run(&world, s, kind, 9);
            let b = run(&world, s, kind, 9);
            assert_eq!(format!("{a:?}"), format!("{b:?}"));
        }
    }
}

#[test]
fn rotations_do_not_add_length() {
    let (world, scenarios) = scene(0);
    let mut state = begin_episode(world, &scenarios[0], &config()).unwrap();
    for _ in 0..5 {
        state.step(Action::RotateLeft).unwrap();
        state.step(Action::RotateRight).unwrap();
    }
    assert_eq!(state.path_length(), 0.0);
    assert_eq!(state.rotations(), 10);
}

#[test]
fn walking_into_a_wall_stops_at_contact() {
    let world = common::world_from("wall", &common::wall_map());
    let s = common::wall_scenario(&world);
    let cfg = EpisodeConfig {
        validation: common::wall_constraints(),
        ..EpisodeConfig::default()
    };
    let mut state = begin_episode(world.clone(), &s, &cfg).unwrap();
    // Facing +x from x = 1.5; the wall face is at x = 3.0.
    let mut hits = 0;
    for _ in 0..12 {
        if let StepOutcome::Continue(obs) = state.step(Action::MoveForward).unwrap() {
            hits += obs.last_collision as u32;
        }
    }
    let x = state.pose().x;
    assert!(hits >= 1);
    assert_eq!(state.infractions(), hits);
    assert!(world.is_pose_free(state.pose().position()));
    // Contact is found to within 1e-4 of the inflated boundary at 2.9 m.
    assert!(x < 2.9 && x > 2.9 - 0.1 - 1e-3, "x = {x}");
}

#[test]
fn done_is_terminal() {
    let (world, scenarios) = scene(1);
    let mut state = begin_episode(world, &scenarios[0], &config()).unwrap();
    assert!(matches!(
        state.step(Action::Done).unwrap(),
        StepOutcome::Terminated(Termination::DoneSignal)
    ));
    assert!(matches!(
        state.step(Action::MoveForward),
        Err(EpisodeError::AfterTermination(_))
    ));
    let r = state.evaluate().unwrap();
    assert!(!r.success);
}

#[test]
fn step_limit_ends_without_success() {
    let (world, scenarios) = scene(1);
    let cfg = EpisodeConfig {
        max_steps: 3,
        ..config()
    };
    let mut stumbler = make_agent(AgentKind::Stumbler, 0, Some(world.clone())).unwrap();
    let r = run_episode(world, &scenarios[0], &cfg, &mut stumbler).unwrap();
    assert_eq!(r.termination, Termination::StepLimit);
    assert_eq!(r.steps, 3);
    assert!(!r.success);
}

#[test]
fn only_granted_sensors_are_populated() {
    let (world, scenarios) = scene(2);
    let blind = EpisodeConfig {
        sensors: Sensors {
            goal_vector: false,
            patch: Some(7),
        },
        ..config()
    };
    let state = begin_episode(world.clone(), &scenarios[0], &blind).unwrap();
    let obs = state.observation();
    assert!(obs.goal_vector.is_none());
    let patch = obs.local_patch.unwrap();
    assert_eq!((patch.size, patch.cells.len()), (7, 49));
    let state = begin_episode(world, &scenarios[0], &config()).unwrap();
    let obs = state.observation();
    assert!(obs.goal_vector.is_some() && obs.local_patch.is_none());
}

#[test]
fn patch_outside_world_reads_obstacle() {
    let world = common::world_from("wall", &common::wall_map());
    let mut s = common::wall_scenario(&world);
    s.start = Pose::new(0.25, 0.25, 0.0);
    s.geodesic_length = navbench::scenario::optimal_length(&world, &s.goal, 0.4, s.start.position())
        .unwrap()
        .unwrap();
    let cfg = EpisodeConfig {
        sensors: Sensors {
            goal_vector: false,
            patch: Some(11),
        },
        validation: ScenarioConstraints {
            clearance_radius: 0.1,
            ..ScenarioConstraints::default()
        },
        ..EpisodeConfig::default()
    };
    let state = begin_episode(world, &s, &cfg).unwrap();
    let patch = state.observation().local_patch.unwrap();
    // The agent sits in cell (2, 2); columns and rows 0..=2 of the patch
    // fall outside the map.
    for k in 0..3 {
        for j in 0..11 {
            assert!(patch.cells[k * 11 + j] && patch.cells[j * 11 + k]);
        }
    }
}

#[test]
fn logs_round_trip_and_replay() {
    let (world, scenarios) = scene(4);
    for s in &scenarios {
        let r = run(&world, s, AgentKind::Random, 5);
        let mut state = begin_episode(world.clone(), s, &config()).unwrap();
        for e in &r.trajectory {
            state.step(e.action).unwrap();
        }
        let rec = state.recording();
        let text = encode_log(&rec);
        assert_eq!(decode_log(&text).unwrap(), rec);
        let replay = replay_trajectory(world.clone(), &rec, &config()).unwrap();
        assert!(replay.divergences.is_empty());
        assert!((replay.path_length - r.path_length_m).abs() <= 1e-9);
    }
}

#[test]
fn exploration_coverage_matches_brute_force_and_grows() {
    let (world, scenarios) = scene(5);
    let start = scenarios[0].start;
    let cspace = world.cspace();
    let from = cspace.cell_of(start.position()).unwrap();
    let reachable: Vec<bool> = common::bellman_ford(cspace, &[from])
        .iter()
        .map(|d| d.is_finite())
        .collect();
    let mut last = -1.0;
    for budget in [0.0, 5.0, 15.0, 40.0] {
        let mut agent = make_agent(AgentKind::Frontier, 0, Some(world.clone())).unwrap();
        let cfg = ExplorationConfig::new(budget, world.spec().step_size);
        let (cov, rec) = run_exploration(world.clone(), start, &cfg, &mut agent).unwrap();
        assert!(cov.traveled_m <= budget + 1e-9);
        assert!(cov.coverage_fraction >= last);
        last = cov.coverage_fraction;
        let positions: Vec<Point> = std::iter::once(start.position())
            .chain(rec.entries.iter().map(|e| e.pose.position()))
            .collect();
        let seen = common::brute_coverage(&world, &reachable, &positions, world.spec().sense_radius);
        let brute: BTreeSet<_> = (0..seen.len())
            .filter(|&i| seen[i])
            .map(|i| cspace.cell_at(i))
            .collect();
        assert_eq!(brute, cov.covered_cells);
        assert_eq!(cov.reachable_cells, reachable.iter().filter(|&&r| r).count());
        if budget > 0.0 {
            assert_eq!(rec.entries.last().unwrap().path_length, cov.traveled_m);
        }
    }
}

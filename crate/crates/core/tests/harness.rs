mod common;

use std::io::{BufRead, BufReader, Write};
use std::time::Duration;

use navbench::agents::AgentKind;
use navbench::episode::{EpisodeConfig, Termination};
use navbench::harness::protocol::{decode_message, encode_message, ProtocolMessage};
use navbench::harness::remote::ServeConfig;
use navbench::harness::report::{emit_csv, emit_table, read_csv_report, ReportContext};
use navbench::harness::suite::{desk_scale_suite, SuiteSpec};
use navbench::harness::{
    episode_seed, report_context, run_batch, AgentSelection, PriorExposure, RunConfig, Workload,
};
use navbench::metrics::aux_report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_suite() -> Workload {
    desk_scale_suite(&SuiteSpec {
        scenes: 3,
        scenarios_per_scene: 8,
        master_seed: 5,
        ..SuiteSpec::default()
    })
    .unwrap()
}

fn sorted(work: &Workload) -> Vec<navbench::Scenario> {
    let mut s = work.scenarios.clone();
    s.sort_by(|a, b| (&a.scene_id, a.episode_id).cmp(&(&b.scene_id, b.episode_id)));
    s
}

fn config(kind: AgentKind) -> RunConfig {
    RunConfig {
        agent: AgentSelection::Builtin { kind, seed: 3 },
        ..RunConfig::default()
    }
}

#[test]
fn messages_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20_000 {
        let m = common::random_message(&mut rng);
        let line = encode_message(&m);
        assert!(!line.contains('\n'), "{line}");
        assert_eq!(decode_message(&line).unwrap(), m, "{line}");
    }
}

#[test]
fn damaged_messages_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2_000 {
        let line = encode_message(&common::random_message(&mut rng));
        let fields: Vec<&str> = line.split(' ').collect();
        let k = rng.gen_range(2..fields.len());
        // Repeat one field, or drop one.
        let mut dup = fields.clone();
        dup.push(fields[k]);
        assert!(decode_message(&dup.join(" ")).is_err(), "{line}");
        let mut cut = fields.clone();
        cut.remove(k);
        assert!(decode_message(&cut.join(" ")).is_err(), "{line}");
        let unknown = format!("{line} extra=1");
        assert!(decode_message(&unknown).is_err());
    }
}

#[test]
fn remote_oracle_matches_in_process() {
    let work = small_suite();
    let local = run_batch(&config(AgentKind::Oracle), &work).unwrap();
    let session = common::serve_to(
        &work,
        &sorted(&work),
        &ServeConfig::default(),
        common::oracle_client(&work),
    );
    assert_eq!(session.agent_name, "oracle");
    assert_eq!(session.records.len(), local.records.len());
    for (r, l) in session.records.iter().zip(&local.records) {
        assert_eq!(r.scenario, l.scenario);
        assert_eq!(r.success, l.success);
        assert!((r.path_length_m - l.path_length_m).abs() <= 1e-9);
    }
}

#[test]
fn silent_agent_times_out() {
    let work = small_suite();
    let scenarios: Vec<_> = sorted(&work).into_iter().take(2).collect();
    let cfg = ServeConfig {
        step_timeout: Duration::from_millis(150),
        ..ServeConfig::default()
    };
    let session = common::serve_to(&work, &scenarios, &cfg, |mut stream| {
        writeln!(stream, "HELLO v1 name=sleepy sensors=gv").unwrap();
        // Read everything but never answer.
        let mut input = BufReader::new(stream);
        let mut line = String::new();
        while input.read_line(&mut line).map(|n| n > 0).unwrap_or(false) {
            line.clear();
        }
    });
    for r in &session.records {
        assert_eq!(r.termination, Termination::Timeout);
        assert!(!r.success);
    }
}

#[test]
fn bad_action_ends_episode() {
    let work = small_suite();
    let scenarios: Vec<_> = sorted(&work).into_iter().take(1).collect();
    let session = common::serve_to(&work, &scenarios, &ServeConfig::default(), |mut stream| {
        writeln!(stream, "HELLO v1 name=rude sensors=gv").unwrap();
        let mut input = BufReader::new(stream.try_clone().unwrap());
        let mut line = String::new();
        let mut errors = Vec::new();
        while input.read_line(&mut line).map(|n| n > 0).unwrap_or(false) {
            match decode_message(&line).unwrap() {
                ProtocolMessage::Obs(_) => writeln!(stream, "ACT v1 a=JUMP").unwrap(),
                ProtocolMessage::Err { code, .. } => errors.push(code),
                _ => {}
            }
            line.clear();
        }
        assert_eq!(errors, ["bad-action"]);
    });
    assert_eq!(session.records[0].termination, Termination::ProtocolError);
    assert!(!session.records[0].success);
}

#[test]
fn granted_sensors_are_the_intersection() {
    let work = small_suite();
    let scenarios: Vec<_> = sorted(&work).into_iter().take(1).collect();
    let cfg = ServeConfig {
        episode: EpisodeConfig::default(),
        ..ServeConfig::default()
    };
    let session = common::serve_to(&work, &scenarios, &cfg, |mut stream| {
        writeln!(stream, "HELLO v1 name=greedy-eyes sensors=gv,patch5").unwrap();
        let mut input = BufReader::new(stream.try_clone().unwrap());
        let mut line = String::new();
        while input.read_line(&mut line).map(|n| n > 0).unwrap_or(false) {
            if let ProtocolMessage::Obs(obs) = decode_message(&line).unwrap() {
                assert!(obs.local_patch.is_none());
                writeln!(stream, "ACT v1 a=DONE").unwrap();
            }
            line.clear();
        }
    });
    assert!(session.granted.goal_vector && session.granted.patch.is_none());
}

#[test]
fn csv_is_independent_of_parallelism_and_order() {
    let work = small_suite();
    let csv_for = |parallelism: usize, work: &Workload| {
        let cfg = RunConfig {
            parallelism,
            ..config(AgentKind::Random)
        };
        let r = run_batch(&cfg, work).unwrap();
        emit_csv(&r.report, &report_context(&cfg, r.privileged, false))
    };
    let one = csv_for(1, &work);
    assert_eq!(one, csv_for(4, &work));
    let mut reversed = work.clone();
    reversed.scenarios.reverse();
    assert_eq!(one, csv_for(2, &reversed));
}

#[test]
fn csv_reads_back() {
    let work = small_suite();
    let cfg = config(AgentKind::Greedy);
    let r = run_batch(&cfg, &work).unwrap();
    let ctx = report_context(&cfg, r.privileged, false);
    let text = emit_csv(&r.report, &ctx);
    let (rows, back) = read_csv_report(&text).unwrap();
    assert_eq!(rows.len(), work.scenarios.len());
    assert_eq!(rows, r.report.rows);
    assert_eq!(back, ctx);
}

#[test]
fn reports_embed_config_and_prior() {
    let cfg = RunConfig {
        prior_exposure: PriorExposure::Prerecorded,
        ..config(AgentKind::Oracle)
    };
    let (rows, _) = common::tau_fixture();
    let report = aux_report(&rows, &[0.4]).unwrap();
    let table = emit_table(&report, &report_context(&cfg, true, true));
    for (k, v) in cfg.full_echo() {
        assert!(table.lines().any(|l| l.trim_start().starts_with(k) && l.trim_end().ends_with(&v)), "{k}");
    }
    assert!(table.contains("prerecorded"));
    assert!(table.contains("yes (full map)"));
    assert!(table.lines().nth(1).unwrap().starts_with("SPL"));
    let csv = emit_csv(&report, &report_context(&cfg, true, false));
    assert!(csv.contains("# config prior=prerecorded"));
    assert!(!csv.contains("parallelism"));
}

#[test]
fn golden_report() {
    let (rows, _) = common::tau_fixture();
    let report = aux_report(&rows, &[0.1, 0.2, 0.4, 0.8, 1.6]).unwrap();
    let ctx = ReportContext {
        agent: "fixture".into(),
        privileged: false,
        settings: vec![("tau".into(), "0.4".into()), ("prior".into(), "no-prior".into())],
    };
    let got = format!("{}\n{}", emit_table(&report, &ctx), emit_csv(&report, &ctx));
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/fixture_report.txt");
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(path, &got).unwrap();
    }
    let want = std::fs::read_to_string(path).unwrap();
    assert_eq!(got, want);
}

#[test]
fn invalid_configs_are_rejected() {
    let work = small_suite();
    for cfg in [
        RunConfig { tau: 0.0, ..RunConfig::default() },
        RunConfig { parallelism: 0, ..RunConfig::default() },
        RunConfig { max_steps: 0, ..RunConfig::default() },
        RunConfig {
            budgets: vec![10.0, 5.0],
            prior_exposure: PriorExposure::BudgetLimited,
            ..RunConfig::default()
        },
        RunConfig { budgets: vec![10.0], ..RunConfig::default() },
    ] {
        assert!(run_batch(&cfg, &work).is_err());
    }
}

#[test]
fn episode_seeds_depend_on_every_input() {
    let base = episode_seed(1, "scene_00", 7);
    assert_eq!(base, episode_seed(1, "scene_00", 7));
    assert_ne!(base, episode_seed(2, "scene_00", 7));
    assert_ne!(base, episode_seed(1, "scene_01", 7));
    assert_ne!(base, episode_seed(1, "scene_00", 8));
}

//! `NAVLOG v1` trajectory recordings and deterministic replay.
//!
//! ```text
//! NAVLOG v1 scene=<id> x=<m> y=<m> th=<rad> [budget=<m>]
//! t=<int> act=<MF|MB|RL|RR|DONE> x=<m> y=<m> th=<rad> p=<m> coll=<0|1>
//! ```

use std::sync::Arc;

use thiserror::Error;

use super::coverage::CoverageRecord;
use super::state::{begin_exploration, EpisodeState, Phase};
use super::{Action, EpisodeConfig, EpisodeError, Pose};
use crate::format::{fmt_num, is_label, parse_finite};
use crate::geodesic::GoalFields;
use crate::gridworld::NavWorld;
use crate::scenario::Scenario;

pub const LOG_HEADER: &str = "NAVLOG v1";

/// Pose and length agreement required for a replayed step to match.
pub const REPLAY_TOLERANCE: f64 = 1e-9;

/// State after one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    /// 1-based action index.
    pub t: u32,
    pub action: Action,
    pub pose: Pose,
    /// Cumulative path length after this action.
    pub path_length: f64,
    pub collision: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub scene_id: String,
    pub start: Pose,
    /// Path-length budget for exploration runs.
    pub budget: Option<f64>,
    pub entries: Vec<LogEntry>,
}

impl Recording {
    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        self.entries.iter().map(|e| e.action)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogError {
    #[error("unsupported log header {0:?}")]
    Version(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

pub fn encode_log(rec: &Recording) -> String {
    let mut out = format!(
        "{LOG_HEADER} scene={} x={} y={} th={}",
        rec.scene_id,
        fmt_num(rec.start.x),
        fmt_num(rec.start.y),
        fmt_num(rec.start.heading)
    );
    if let Some(b) = rec.budget {
        out.push_str(&format!(" budget={}", fmt_num(b)));
    }
    out.push('\n');
    for e in &rec.entries {
        out.push_str(&format!(
            "t={} act={} x={} y={} th={} p={} coll={}\n",
            e.t,
            e.action,
            fmt_num(e.pose.x),
            fmt_num(e.pose.y),
            fmt_num(e.pose.heading),
            fmt_num(e.path_length),
            e.collision as u8
        ));
    }
    out
}

/// Splits `key=value` tokens, requiring exactly `keys` (in any order) plus
/// any of `optional`.
fn fields<'a>(
    tokens: impl Iterator<Item = &'a str>,
    keys: &[&str],
    optional: &[&str],
) -> Result<Vec<Option<&'a str>>, String> {
    let all: Vec<&str> = keys.iter().chain(optional).copied().collect();
    let mut out = vec![None; all.len()];
    for token in tokens {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {token:?}"))?;
        let i = all
            .iter()
            .position(|&a| a == k)
            .ok_or_else(|| format!("unknown field {k:?}"))?;
        if out[i].replace(v).is_some() {
            return Err(format!("duplicate field {k}"));
        }
    }
    for (i, k) in keys.iter().enumerate() {
        if out[i].is_none() {
            return Err(format!("missing field {k}"));
        }
    }
    Ok(out)
}

fn num(v: Option<&str>, key: &str) -> Result<f64, String> {
    v.and_then(parse_finite)
        .ok_or_else(|| format!("bad number for {key}"))
}

pub fn decode_log(text: &str) -> Result<Recording, LogError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let rest = header
        .strip_prefix(LOG_HEADER)
        .filter(|r| r.is_empty() || r.starts_with(' '))
        .ok_or_else(|| LogError::Version(header.to_string()))?;
    let malformed = |line: usize| move |reason: String| LogError::Malformed { line, reason };
    let f = fields(
        rest.split_whitespace(),
        &["scene", "x", "y", "th"],
        &["budget"],
    )
    .map_err(malformed(1))?;
    let scene_id = f[0].unwrap().to_string();
    if !is_label(&scene_id) {
        return Err(malformed(1)(format!("bad scene id {scene_id:?}")));
    }
    let start = Pose::new(
        num(f[1], "x").map_err(malformed(1))?,
        num(f[2], "y").map_err(malformed(1))?,
        num(f[3], "th").map_err(malformed(1))?,
    );
    let budget = match f[4] {
        Some(_) => Some(num(f[4], "budget").map_err(malformed(1))?),
        None => None,
    };

    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let entry = (|| {
            let f = fields(
                line.split_whitespace(),
                &["t", "act", "x", "y", "th", "p", "coll"],
                &[],
            )?;
            let t: u32 = f[0]
                .unwrap()
                .parse()
                .map_err(|_| "bad step index".to_string())?;
            if t as usize != entries.len() + 1 {
                return Err(format!("expected t={}, got t={t}", entries.len() + 1));
            }
            let action: Action = f[1].unwrap().parse()?;
            let collision = match f[6].unwrap() {
                "0" => false,
                "1" => true,
                other => return Err(format!("bad collision flag {other:?}")),
            };
            Ok(LogEntry {
                t,
                action,
                pose: Pose::new(num(f[2], "x")?, num(f[3], "y")?, num(f[4], "th")?),
                path_length: num(f[5], "p")?,
                collision,
            })
        })()
        .map_err(malformed(line_no))?;
        entries.push(entry);
    }
    Ok(Recording {
        scene_id,
        start,
        budget,
        entries,
    })
}

impl EpisodeState {
    pub fn recording(&self) -> Recording {
        Recording {
            scene_id: self.world().scene_id().to_string(),
            start: self.start(),
            budget: self.budget(),
            entries: self.trajectory().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayResult {
    pub final_pose: Pose,
    pub path_length: f64,
    pub termination: Option<super::Termination>,
    /// Coverage of the replayed motion (budget is the recording's, or the
    /// traveled length when it has none).
    pub coverage: CoverageRecord,
    /// Indices of entries whose logged state disagrees with the replay.
    pub divergences: Vec<usize>,
}

impl ReplayResult {
    pub fn matches(&self) -> bool {
        self.divergences.is_empty()
    }
}

/// Re-executes the recorded actions from the recorded start and compares
/// every resulting state with the log.
pub fn replay_trajectory(
    world: Arc<NavWorld>,
    rec: &Recording,
    config: &EpisodeConfig,
) -> Result<ReplayResult, EpisodeError> {
    if rec.scene_id != world.scene_id() {
        return Err(EpisodeError::SceneMismatch {
            scenario: rec.scene_id.clone(),
            world: world.scene_id().to_string(),
        });
    }
    let mut config = config.clone();
    config.max_steps = config.max_steps.max(rec.entries.len() as u32);
    let mut state = match rec.budget {
        Some(b) => begin_exploration(world.clone(), rec.start, b, &config)?,
        None => {
            // A goal-free run with unlimited budget: goals do not influence
            // motion.
            let mut s = begin_exploration(world.clone(), rec.start, f64::INFINITY, &config)?;
            s.clear_budget();
            s
        }
    };
    let mut divergences = Vec::new();
    for (index, entry) in rec.entries.iter().enumerate() {
        if let Phase::Terminated(t) = state.phase() {
            return Err(EpisodeError::Replay {
                index,
                reason: format!("action {} after termination ({t})", entry.action),
            });
        }
        state.step(entry.action)?;
        let got = state.trajectory().last().expect("just stepped");
        let close = |a: f64, b: f64| (a - b).abs() <= REPLAY_TOLERANCE;
        let heading_close = {
            let d = super::wrap_angle(got.pose.heading - entry.pose.heading);
            d.abs() <= REPLAY_TOLERANCE
        };
        if !(close(got.pose.x, entry.pose.x)
            && close(got.pose.y, entry.pose.y)
            && heading_close
            && close(got.path_length, entry.path_length)
            && got.collision == entry.collision)
        {
            divergences.push(index);
        }
    }
    let traveled = state.path_length();
    let budget = rec.budget.unwrap_or(traveled);
    let coverage = state
        .coverage()
        .expect("replay tracks coverage")
        .record(&world, budget, traveled);
    Ok(ReplayResult {
        final_pose: state.pose(),
        path_length: traveled,
        termination: state.termination(),
        coverage,
        divergences,
    })
}

/// Replays a goal episode's actions and scores it again.
pub fn replay_episode(
    world: Arc<NavWorld>,
    scenario: &Scenario,
    actions: impl IntoIterator<Item = Action>,
    config: &EpisodeConfig,
) -> Result<super::EpisodeRecord, EpisodeError> {
    let fields = Arc::new(GoalFields::build(&world, &scenario.goal, config.tau)?);
    let mut state = EpisodeState::with_goal(world, scenario, fields, config)?;
    for (index, action) in actions.into_iter().enumerate() {
        if state.phase() != Phase::Running {
            return Err(EpisodeError::Replay {
                index,
                reason: "action after termination".into(),
            });
        }
        state.step(action)?;
    }
    state.evaluate()
}

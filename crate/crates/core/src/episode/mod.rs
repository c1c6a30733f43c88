//! The episode protocol.
//!
//! An episode starts at the scenario's start pose and advances one action at
//! a time. Motion is continuous: translations move `step_size` meters along
//! the heading and stop at the first contact with configuration-space
//! obstacles; rotations change the heading by `turn_angle`. Success is
//! decided only from the configuration at the moment the agent emits
//! [`Action::Done`]; episodes that end any other way are failures.

mod coverage;
mod log;
mod run;
mod state;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use self::log::{
    decode_log, encode_log, replay_episode, replay_trajectory, LogEntry, LogError, Recording,
    ReplayResult, LOG_HEADER,
};
pub use coverage::{CoverageRecord, CoverageTracker};
pub use run::{drive, reset_policy, run_episode, run_exploration, ExplorationConfig};
pub use state::{
    begin_episode, begin_exploration, EpisodeState, Phase, StepOutcome, CONTACT_TOLERANCE,
};

use crate::gridworld::Point;
use crate::scenario::{Diagnostics, Goal, Scenario, ScenarioConstraints};

/// Agent pose: position in meters, heading in radians within `[0, 2pi)`
/// measured from the +x axis toward +y.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_heading(heading),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn normalize_heading(h: f64) -> f64 {
    let r = h.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = normalize_heading(a);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Bearing of `target` as seen from `pose`, relative to its heading.
pub fn relative_bearing(pose: &Pose, target: Point) -> f64 {
    let abs = (target.y - pose.y).atan2(target.x - pose.x);
    wrap_angle(abs - pose.heading)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    MoveForward,
    MoveBackward,
    /// Heading += turn_angle.
    RotateLeft,
    /// Heading -= turn_angle.
    RotateRight,
    /// Terminal: the agent declares it has reached the goal.
    Done,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::MoveForward,
        Action::MoveBackward,
        Action::RotateLeft,
        Action::RotateRight,
        Action::Done,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Action::MoveForward => "MF",
            Action::MoveBackward => "MB",
            Action::RotateLeft => "RL",
            Action::RotateRight => "RR",
            Action::Done => "DONE",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.token() == s)
            .ok_or_else(|| format!("unknown action {s:?}"))
    }
}

/// Sensors granted to the agent beyond perfect odometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Sensors {
    /// Polar vector (Euclidean distance, relative bearing) to a point goal.
    pub goal_vector: bool,
    /// Side length of a square occupancy window centered on the agent.
    pub patch: Option<usize>,
}

impl Sensors {
    pub const DEFAULT_PATCH: usize = 11;

    pub fn none() -> Self {
        Self::default()
    }

    /// Sensors present in both sets.
    pub fn intersect(&self, other: &Sensors) -> Sensors {
        Sensors {
            goal_vector: self.goal_vector && other.goal_vector,
            patch: match (self.patch, other.patch) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            },
        }
    }
}

impl fmt::Display for Sensors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.goal_vector {
            parts.push("gv".to_string());
        }
        if let Some(k) = self.patch {
            parts.push(format!("patch{k}"));
        }
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

impl FromStr for Sensors {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Sensors::none();
        if s == "none" {
            return Ok(out);
        }
        for part in s.split(',') {
            if part == "gv" && !out.goal_vector {
                out.goal_vector = true;
            } else if let (Some(k), None) = (part.strip_prefix("patch"), out.patch) {
                let k: usize = k.parse().map_err(|_| format!("bad patch size in {part:?}"))?;
                if k == 0 || k.is_multiple_of(2) || k > 101 {
                    return Err(format!("patch size must be odd and in 1..=101, got {k}"));
                }
                out.patch = Some(k);
            } else {
                return Err(format!("unknown or repeated sensor {part:?}"));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalVector {
    pub distance: f64,
    pub bearing: f64,
}

/// Square occupancy window, row-major from its top-left cell. `true` is
/// obstacle; cells outside the world read as obstacle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalPatch {
    pub size: usize,
    pub cells: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Actions taken so far.
    pub steps: u32,
    pub odometry: Pose,
    /// Echo of the goal; `None` during goal-free exploration.
    pub goal: Option<Goal>,
    pub goal_vector: Option<GoalVector>,
    pub local_patch: Option<LocalPatch>,
    pub last_collision: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    DoneSignal,
    StepLimit,
    /// A remote agent failed to answer in time or disconnected.
    Timeout,
    /// A remote agent sent something that is not a valid action.
    ProtocolError,
    /// Exploration only: the path-length budget was used up.
    BudgetExhausted,
}

impl Termination {
    pub fn token(self) -> &'static str {
        match self {
            Termination::DoneSignal => "done",
            Termination::StepLimit => "step_limit",
            Termination::Timeout => "timeout",
            Termination::ProtocolError => "protocol_error",
            Termination::BudgetExhausted => "budget",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Termination::DoneSignal,
            Termination::StepLimit,
            Termination::Timeout,
            Termination::ProtocolError,
            Termination::BudgetExhausted,
        ]
        .into_iter()
        .find(|t| t.token() == s)
        .ok_or_else(|| format!("unknown termination {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub max_steps: u32,
    pub tau: f64,
    pub sensors: Sensors,
    /// Constraints the scenario is validated against before it may run.
    pub validation: ScenarioConstraints,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_steps: 500,
            tau: 0.4,
            sensors: Sensors {
                goal_vector: true,
                patch: None,
            },
            validation: ScenarioConstraints::default(),
        }
    }
}

/// One evaluated run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub scenario: Scenario,
    pub tau: f64,
    pub success: bool,
    pub path_length_m: f64,
    pub geodesic_length_m: f64,
    /// Geodesic distance from the final pose to the goal (goal cell for point
    /// goals, success region otherwise).
    pub final_geodesic_to_goal_m: f64,
    pub steps: u32,
    pub rotations: u32,
    pub infractions: u32,
    pub termination: Termination,
    pub trajectory: Vec<LogEntry>,
}

impl EpisodeRecord {
    /// `l / max(p, l)`.
    pub fn efficiency(&self) -> f64 {
        self.geodesic_length_m / self.path_length_m.max(self.geodesic_length_m)
    }

    pub fn final_pose(&self) -> Pose {
        self.trajectory
            .last()
            .map(|e| e.pose)
            .unwrap_or(self.scenario.start)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpisodeError {
    #[error("scenario rejected: {0}")]
    InvalidScenario(Box<Diagnostics>),
    #[error("scenario is for scene {scenario:?} but the world is {world:?}")]
    SceneMismatch { scenario: String, world: String },
    #[error("goal setup failed: {0}")]
    Goal(#[from] crate::geodesic::GeodesicError),
    #[error("action after the episode terminated ({0})")]
    AfterTermination(Termination),
    #[error("episode has not terminated yet")]
    NotTerminated,
    #[error("exploration episodes have no goal to evaluate")]
    NoGoal,
    #[error("start pose is in collision")]
    StartInCollision,
    #[error("recording action {index} violates the protocol: {reason}")]
    Replay { index: usize, reason: String },
}

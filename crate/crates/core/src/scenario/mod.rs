//! Benchmark scenarios: goal definitions, sampling, validation, dataset
//! splits and the `NAVSCN v1` scenario file.

mod file;
mod sample;
mod split;
mod validate;

use std::fmt;
use std::str::FromStr;

pub use file::{decode_scenarios, encode_scenarios, ScenarioFileError};
pub use sample::{sample_scenarios, SampleError, Sampled};
pub use split::{split_assign, SplitError, SplitRatios};
pub use validate::{
    effective_clearance, has_clearance, optimal_length, validate_scenario, Diagnostics,
    ScenarioChecker,
};

use crate::episode::Pose;
use crate::format::{fmt_num, is_label, parse_finite};
use crate::gridworld::Point;

/// What the agent is asked to reach.
#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    /// Navigate to a location (meters).
    Point(Point),
    /// Navigate to any instance of an object category.
    Object(String),
    /// Navigate into a labeled region.
    Area(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GoalKind {
    Point,
    Object,
    Area,
}

impl Goal {
    pub fn kind(&self) -> GoalKind {
        match self {
            Goal::Point(_) => GoalKind::Point,
            Goal::Object(_) => GoalKind::Object,
            Goal::Area(_) => GoalKind::Area,
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Point(p) => write!(f, "point:{},{}", fmt_num(p.x), fmt_num(p.y)),
            Goal::Object(c) => write!(f, "object:{c}"),
            Goal::Area(r) => write!(f, "area:{r}"),
        }
    }
}

impl FromStr for Goal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("goal {s:?} lacks a kind prefix"))?;
        match kind {
            "point" => {
                let (x, y) = rest
                    .split_once(',')
                    .ok_or_else(|| format!("point goal {rest:?} needs x,y"))?;
                match (parse_finite(x), parse_finite(y)) {
                    (Some(x), Some(y)) => Ok(Goal::Point(Point::new(x, y))),
                    _ => Err(format!("bad point goal coordinates {rest:?}")),
                }
            }
            "object" if is_label(rest) => Ok(Goal::Object(rest.to_string())),
            "area" if is_label(rest) => Ok(Goal::Area(rest.to_string())),
            "object" | "area" => Err(format!("bad goal label {rest:?}")),
            other => Err(format!("unknown goal kind {other:?}")),
        }
    }
}

impl fmt::Display for GoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GoalKind::Point => "point",
            GoalKind::Object => "object",
            GoalKind::Area => "area",
        })
    }
}

impl FromStr for GoalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "point" => Ok(GoalKind::Point),
            "object" => Ok(GoalKind::Object),
            "area" => Ok(GoalKind::Area),
            other => Err(format!("unknown goal kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// One benchmark episode definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scene_id: String,
    pub episode_id: u64,
    pub start: Pose,
    pub goal: Goal,
    /// Shortest-path length from the start to the goal, meters.
    pub geodesic_length: f64,
    pub split: Split,
}

impl Scenario {
    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }
}

/// Sampling and validation constraints, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConstraints {
    pub min_separation: f64,
    pub clearance_radius: f64,
    pub tau: f64,
}

impl Default for ScenarioConstraints {
    fn default() -> Self {
        Self {
            min_separation: 1.0,
            clearance_radius: 1.0,
            tau: 0.4,
        }
    }
}

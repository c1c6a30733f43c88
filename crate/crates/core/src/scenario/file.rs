//! `NAVSCN v1` scenario files: a header line, then one record per line:
//!
//! ```text
//! scene=<id> ep=<int> start=<x>,<y>,<heading> goal=<goal> geodesic=<m> split=<split>
//! ```

use std::collections::HashSet;
use std::f64::consts::TAU;

use thiserror::Error;

use super::{Goal, Scenario, Split};
use crate::episode::Pose;
use crate::format::{fmt_num, is_label, parse_finite};

pub const SCENARIO_HEADER: &str = "NAVSCN v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioFileError {
    #[error("unsupported scenario file header {0:?}")]
    Version(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate episode {scene_id}/{episode_id}")]
    Duplicate {
        line: usize,
        scene_id: String,
        episode_id: u64,
    },
}

pub fn encode_scenarios(scenarios: &[Scenario]) -> String {
    let mut out = String::from(SCENARIO_HEADER);
    out.push('\n');
    for s in scenarios {
        out.push_str(&format!(
            "scene={} ep={} start={},{},{} goal={} geodesic={} split={}\n",
            s.scene_id,
            s.episode_id,
            fmt_num(s.start.x),
            fmt_num(s.start.y),
            fmt_num(s.start.heading),
            s.goal,
            fmt_num(s.geodesic_length),
            s.split
        ));
    }
    out
}

pub fn decode_scenarios(text: &str) -> Result<Vec<Scenario>, ScenarioFileError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim_end() != SCENARIO_HEADER {
        return Err(ScenarioFileError::Version(header.to_string()));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let s = parse_record(line).map_err(|reason| ScenarioFileError::Malformed {
            line: line_no,
            reason,
        })?;
        if !seen.insert((s.scene_id.clone(), s.episode_id)) {
            return Err(ScenarioFileError::Duplicate {
                line: line_no,
                scene_id: s.scene_id,
                episode_id: s.episode_id,
            });
        }
        out.push(s);
    }
    Ok(out)
}

fn parse_record(line: &str) -> Result<Scenario, String> {
    let mut scene = None;
    let mut ep = None;
    let mut start = None;
    let mut goal = None;
    let mut geodesic = None;
    let mut split = None;
    fn set<T>(slot: &mut Option<T>, key: &str, v: T) -> Result<(), String> {
        if slot.replace(v).is_some() {
            return Err(format!("duplicate field {key}"));
        }
        Ok(())
    }
    for token in line.split(' ') {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {token:?}"))?;
        match key {
            "scene" => {
                if !is_label(value) {
                    return Err(format!("bad scene id {value:?}"));
                }
                set(&mut scene, key, value.to_string())?
            }
            "ep" => set(
                &mut ep,
                key,
                value.parse::<u64>().map_err(|_| format!("bad episode id {value:?}"))?,
            )?,
            "start" => {
                let parts: Vec<&str> = value.split(',').collect();
                let nums: Vec<f64> = parts.iter().filter_map(|p| parse_finite(p)).collect();
                if parts.len() != 3 || nums.len() != 3 {
                    return Err(format!("bad start {value:?}"));
                }
                if !(0.0..TAU).contains(&nums[2]) {
                    return Err(format!("heading {} outside [0, 2pi)", nums[2]));
                }
                set(&mut start, key, Pose::new(nums[0], nums[1], nums[2]))?
            }
            "goal" => set(&mut goal, key, value.parse::<Goal>()?)?,
            "geodesic" => {
                let g = parse_finite(value)
                    .filter(|g| *g > 0.0)
                    .ok_or_else(|| format!("geodesic length must be positive, got {value:?}"))?;
                set(&mut geodesic, key, g)?
            }
            "split" => set(&mut split, key, value.parse::<Split>()?)?,
            other => return Err(format!("unknown field {other:?}")),
        }
    }
    let missing = |k: &str| format!("missing field {k}");
    Ok(Scenario {
        scene_id: scene.ok_or_else(|| missing("scene"))?,
        episode_id: ep.ok_or_else(|| missing("ep"))?,
        start: start.ok_or_else(|| missing("start"))?,
        goal: goal.ok_or_else(|| missing("goal"))?,
        geodesic_length: geodesic.ok_or_else(|| missing("geodesic"))?,
        split: split.ok_or_else(|| missing("split"))?,
    })
}

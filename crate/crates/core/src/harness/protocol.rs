//! Line protocol between the evaluation server and a remote agent.
//!
//! Every message is one line: `<TAG> v1` followed by space-separated
//! `key=value` fields. Each message kind has a fixed key set; every key must
//! appear exactly once and unknown keys are rejected. Absent optional values
//! are written `-`. Free text is percent-escaped.
//!
//! ```text
//! HELLO v1 name=<text> sensors=<sensors>
//! CONFIG v1 scene=<id> ep=<n> goal=<goal> sensors=<sensors> step=<m> turn=<rad> fov=<rad> tau=<m> max_steps=<n>
//! OBS v1 t=<n> x=<m> y=<m> th=<rad> coll=<0|1> goal=<goal|-> gd=<m|-> gb=<rad|-> patch=<k>:<bits>|-
//! ACT v1 a=<MF|MB|RL|RR|DONE>
//! END v1 scene=<id> ep=<n> success=<0|1> p=<m> steps=<n> term=<termination>
//! ERR v1 code=<label> text=<text>
//! ```

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use thiserror::Error;

use crate::episode::{
    Action, GoalVector, LocalPatch, Observation, Pose, Sensors, Termination,
};
use crate::format::{fmt_num, is_label, parse_finite};
use crate::scenario::Goal;

pub const PROTOCOL_VERSION: &str = "v1";
const MAX_PATCH: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSetup {
    pub scene_id: String,
    pub episode_id: u64,
    pub goal: Goal,
    pub sensors: Sensors,
    pub step_size: f64,
    pub turn_angle: f64,
    pub fov: f64,
    pub tau: f64,
    pub max_steps: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeEnd {
    pub scene_id: String,
    pub episode_id: u64,
    pub success: bool,
    pub path_length: f64,
    pub steps: u32,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolMessage {
    Hello { agent_name: String, sensors: Sensors },
    Config(EpisodeSetup),
    Obs(Observation),
    Act(Action),
    End(EpisodeEnd),
    Err { code: String, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("malformed message at byte {offset}: {reason}")]
    MalformedMessage { reason: String, offset: usize },
    #[error("unsupported protocol version {found:?}")]
    VersionMismatch { found: String },
}

impl ProtocolMessage {
    pub fn tag(&self) -> &'static str {
        match self {
            ProtocolMessage::Hello { .. } => "HELLO",
            ProtocolMessage::Config(_) => "CONFIG",
            ProtocolMessage::Obs(_) => "OBS",
            ProtocolMessage::Act(_) => "ACT",
            ProtocolMessage::End(_) => "END",
            ProtocolMessage::Err { .. } => "ERR",
        }
    }
}

/// Escapes everything outside a conservative printable set. The empty
/// string is written `-` (and a literal `-` is escaped).
pub fn escape_text(s: &str) -> String {
    if s.is_empty() {
        return "-".to_string();
    }
    if s == "-" {
        return "%2D".to_string();
    }
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_graphic() && b != b'%' && b != b'=' {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

pub fn unescape_text(s: &str) -> Result<String, String> {
    if s == "-" {
        return Ok(String::new());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'%' => {
                let hex = s
                    .get(i + 1..i + 3)
                    .filter(|h| h.bytes().all(|c| c.is_ascii_hexdigit()))
                    .ok_or_else(|| "bad percent escape".to_string())?;
                out.push(u8::from_str_radix(hex, 16).expect("hex digits"));
                i += 3;
            }
            b if b.is_ascii_graphic() && b != b'=' => {
                out.push(b);
                i += 1;
            }
            _ => return Err("unescaped character in text".into()),
        }
    }
    String::from_utf8(out).map_err(|_| "text is not UTF-8".into())
}

fn opt<T>(v: Option<T>, f: impl FnOnce(T) -> String) -> String {
    v.map_or_else(|| "-".to_string(), f)
}

fn patch_text(p: &LocalPatch) -> String {
    let mut s = format!("{}:", p.size);
    s.extend(p.cells.iter().map(|&c| if c { '1' } else { '0' }));
    s
}

fn bool_text(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// One line, without the trailing newline.
pub fn encode_message(m: &ProtocolMessage) -> String {
    let fields: Vec<(&str, String)> = match m {
        ProtocolMessage::Hello {
            agent_name,
            sensors,
        } => vec![
            ("name", escape_text(agent_name)),
            ("sensors", sensors.to_string()),
        ],
        ProtocolMessage::Config(c) => vec![
            ("scene", c.scene_id.clone()),
            ("ep", c.episode_id.to_string()),
            ("goal", c.goal.to_string()),
            ("sensors", c.sensors.to_string()),
            ("step", fmt_num(c.step_size)),
            ("turn", fmt_num(c.turn_angle)),
            ("fov", fmt_num(c.fov)),
            ("tau", fmt_num(c.tau)),
            ("max_steps", c.max_steps.to_string()),
        ],
        ProtocolMessage::Obs(o) => vec![
            ("t", o.steps.to_string()),
            ("x", fmt_num(o.odometry.x)),
            ("y", fmt_num(o.odometry.y)),
            ("th", fmt_num(o.odometry.heading)),
            ("coll", bool_text(o.last_collision).to_string()),
            ("goal", opt(o.goal.as_ref(), |g| g.to_string())),
            ("gd", opt(o.goal_vector, |v| fmt_num(v.distance))),
            ("gb", opt(o.goal_vector, |v| fmt_num(v.bearing))),
            ("patch", opt(o.local_patch.as_ref(), patch_text)),
        ],
        ProtocolMessage::Act(a) => vec![("a", a.token().to_string())],
        ProtocolMessage::End(e) => vec![
            ("scene", e.scene_id.clone()),
            ("ep", e.episode_id.to_string()),
            ("success", bool_text(e.success).to_string()),
            ("p", fmt_num(e.path_length)),
            ("steps", e.steps.to_string()),
            ("term", e.termination.to_string()),
        ],
        ProtocolMessage::Err { code, text } => {
            vec![("code", code.clone()), ("text", escape_text(text))]
        }
    };
    let mut line = format!("{} {PROTOCOL_VERSION}", m.tag());
    for (k, v) in fields {
        let _ = write!(line, " {k}={v}");
    }
    line
}

struct Fields<'a> {
    keys: &'static [&'static str],
    values: Vec<Option<(&'a str, usize)>>,
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> (&'a str, usize) {
        let i = self.keys.iter().position(|k| *k == key).expect("known key");
        self.values[i].expect("presence checked")
    }
}

fn with_offset<T, E: std::fmt::Display>(r: Result<T, E>, offset: usize) -> Result<T, ProtocolError> {
    r.map_err(|e| malformed(e.to_string(), offset))
}

fn malformed(reason: impl Into<String>, offset: usize) -> ProtocolError {
    ProtocolError::MalformedMessage {
        reason: reason.into(),
        offset,
    }
}

fn keys_for(tag: &str) -> Option<&'static [&'static str]> {
    Some(match tag {
        "HELLO" => &["name", "sensors"],
        "CONFIG" => &[
            "scene",
            "ep",
            "goal",
            "sensors",
            "step",
            "turn",
            "fov",
            "tau",
            "max_steps",
        ],
        "OBS" => &["t", "x", "y", "th", "coll", "goal", "gd", "gb", "patch"],
        "ACT" => &["a"],
        "END" => &["scene", "ep", "success", "p", "steps", "term"],
        "ERR" => &["code", "text"],
        _ => return None,
    })
}

fn split_fields<'a>(
    line: &'a str,
    start: usize,
    keys: &'static [&'static str],
) -> Result<Fields<'a>, ProtocolError> {
    let mut values = vec![None; keys.len()];
    let mut offset = start;
    for token in line[start..].split(' ') {
        let here = offset;
        offset += token.len() + 1;
        if token.is_empty() {
            return Err(malformed("empty field (extra space)", here));
        }
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| malformed(format!("expected key=value, got {token:?}"), here))?;
        let i = keys
            .iter()
            .position(|key| *key == k)
            .ok_or_else(|| malformed(format!("unknown key {k:?}"), here))?;
        if values[i].is_some() {
            return Err(malformed(format!("duplicate key {k:?}"), here));
        }
        if v.is_empty() {
            return Err(malformed(format!("empty value for {k:?}"), here + k.len() + 1));
        }
        values[i] = Some((v, here + k.len() + 1));
    }
    if let Some(i) = values.iter().position(|v| v.is_none()) {
        return Err(malformed(format!("missing key {:?}", keys[i]), line.len()));
    }
    Ok(Fields { keys, values })
}

/// Decodes one line. A single trailing `\n` or `\r\n` is allowed.
pub fn decode_message(line: &str) -> Result<ProtocolMessage, ProtocolError> {
    let line = line
        .strip_suffix('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .unwrap_or(line);
    if let Some(i) = line.find(['\n', '\r']) {
        return Err(malformed("embedded line break", i));
    }
    let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
    let keys = keys_for(tag).ok_or_else(|| malformed(format!("unknown message tag {tag:?}"), 0))?;
    let (version, _) = rest.split_once(' ').unwrap_or((rest, ""));
    if version != PROTOCOL_VERSION {
        return Err(ProtocolError::VersionMismatch {
            found: version.to_string(),
        });
    }
    let body_start = tag.len() + 1 + version.len() + 1;
    if body_start > line.len() {
        return Err(malformed("message has no fields", line.len()));
    }
    let f = split_fields(line, body_start, keys)?;

    let num = |key: &str| -> Result<f64, ProtocolError> {
        let (v, at) = f.get(key);
        parse_finite(v).ok_or_else(|| malformed(format!("bad number for {key}"), at))
    };
    let ranged = |key: &str, ok: &dyn Fn(f64) -> bool| -> Result<f64, ProtocolError> {
        let x = num(key)?;
        if ok(x) {
            Ok(x)
        } else {
            Err(malformed(format!("{key}={x} out of range"), f.get(key).1))
        }
    };
    let int = |key: &str| -> Result<u64, ProtocolError> {
        let (v, at) = f.get(key);
        if v.starts_with('+') {
            return Err(malformed(format!("bad integer for {key}"), at));
        }
        v.parse::<u64>()
            .map_err(|_| malformed(format!("bad integer for {key}"), at))
    };
    let u32_field = |key: &str| -> Result<u32, ProtocolError> {
        u32::try_from(int(key)?).map_err(|_| malformed(format!("{key} out of range"), f.get(key).1))
    };
    let flag = |key: &str| -> Result<bool, ProtocolError> {
        match f.get(key) {
            ("0", _) => Ok(false),
            ("1", _) => Ok(true),
            (_, at) => Err(malformed(format!("{key} must be 0 or 1"), at)),
        }
    };
    macro_rules! parsed {
        ($key:expr, $r:expr) => {
            with_offset($r, f.get($key).1)
        };
    }
    let label = |key: &str| -> Result<String, ProtocolError> {
        let (v, at) = f.get(key);
        if is_label(v) {
            Ok(v.to_string())
        } else {
            Err(malformed(format!("bad label for {key}"), at))
        }
    };
    let absent = |key: &str| f.get(key).0 == "-";

    Ok(match tag {
        "HELLO" => ProtocolMessage::Hello {
            agent_name: parsed!("name", unescape_text(f.get("name").0))?,
            sensors: parsed!("sensors", f.get("sensors").0.parse())?,
        },
        "CONFIG" => ProtocolMessage::Config(EpisodeSetup {
            scene_id: label("scene")?,
            episode_id: int("ep")?,
            goal: parsed!("goal", f.get("goal").0.parse())?,
            sensors: parsed!("sensors", f.get("sensors").0.parse())?,
            step_size: ranged("step", &|x| x > 0.0)?,
            turn_angle: ranged("turn", &|x| x > 0.0 && x <= PI)?,
            fov: ranged("fov", &|x| x > 0.0 && x <= TAU)?,
            tau: ranged("tau", &|x| x > 0.0)?,
            max_steps: u32_field("max_steps")?,
        }),
        "OBS" => {
            let goal = if absent("goal") {
                None
            } else {
                Some(parsed!("goal", f.get("goal").0.parse())?)
            };
            let goal_vector = match (absent("gd"), absent("gb")) {
                (true, true) => None,
                (false, false) => Some(GoalVector {
                    distance: ranged("gd", &|x| x >= 0.0)?,
                    bearing: ranged("gb", &|x| x > -PI && x <= PI)?,
                }),
                _ => return Err(malformed("gd and gb must be both present or both absent", f.get("gd").1)),
            };
            let local_patch = if absent("patch") {
                None
            } else {
                Some(decode_patch(f.get("patch"))?)
            };
            ProtocolMessage::Obs(Observation {
                steps: u32_field("t")?,
                odometry: Pose {
                    x: num("x")?,
                    y: num("y")?,
                    heading: ranged("th", &|x| (0.0..TAU).contains(&x))?,
                },
                goal,
                goal_vector,
                local_patch,
                last_collision: flag("coll")?,
            })
        }
        "ACT" => ProtocolMessage::Act(parsed!("a", f.get("a").0.parse())?),
        "END" => ProtocolMessage::End(EpisodeEnd {
            scene_id: label("scene")?,
            episode_id: int("ep")?,
            success: flag("success")?,
            path_length: ranged("p", &|x| x >= 0.0)?,
            steps: u32_field("steps")?,
            termination: parsed!("term", f.get("term").0.parse())?,
        }),
        "ERR" => ProtocolMessage::Err {
            code: label("code")?,
            text: parsed!("text", unescape_text(f.get("text").0))?,
        },
        _ => unreachable!("tag checked above"),
    })
}

fn decode_patch((v, at): (&str, usize)) -> Result<LocalPatch, ProtocolError> {
    let (k, bits) = v
        .split_once(':')
        .ok_or_else(|| malformed("patch must be <k>:<bits>", at))?;
    let size: usize = k
        .parse()
        .ok()
        .filter(|k| *k >= 1 && *k <= MAX_PATCH && k % 2 == 1)
        .ok_or_else(|| malformed("patch size must be odd and at most 101", at))?;
    if bits.len() != size * size {
        return Err(malformed(
            format!("patch needs {} cells, got {}", size * size, bits.len()),
            at + k.len() + 1,
        ));
    }
    let mut cells = Vec::with_capacity(bits.len());
    for (i, b) in bits.bytes().enumerate() {
        cells.push(match b {
            b'0' => false,
            b'1' => true,
            _ => return Err(malformed("patch cells must be 0 or 1", at + k.len() + 1 + i)),
        });
    }
    Ok(LocalPatch { size, cells })
}

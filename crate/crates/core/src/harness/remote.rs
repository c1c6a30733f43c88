//! TCP sessions with out-of-process agents.
//!
//! The server drives the same [`EpisodeState`] as in-process runs; the only
//! difference is that actions arrive over the wire. A connection serves a
//! whole batch: `HELLO` from the agent, then for every episode `CONFIG`,
//! alternating `OBS`/`ACT` until termination, and `END`. The server closes
//! the connection after the last `END`.

use std::io::{self, BufRead, BufReader, ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::protocol::{
    decode_message, encode_message, EpisodeEnd, EpisodeSetup, ProtocolError, ProtocolMessage,
};
use super::{HarnessError, Workload};
use crate::agents::{EpisodeParams, Policy};
use crate::episode::{
    EpisodeConfig, EpisodeRecord, EpisodeState, Sensors, StepOutcome, Termination,
};
use crate::geodesic::GoalFields;
use crate::gridworld::AgentSpec;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct ServeConfig {
    pub episode: EpisodeConfig,
    pub step_timeout: Duration,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            episode: EpisodeConfig::default(),
            step_timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionResult {
    pub agent_name: String,
    pub granted: Sensors,
    pub records: Vec<EpisodeRecord>,
}

enum ReadOutcome {
    Line(String),
    TimedOut,
    Closed,
}

/// Line reader that keeps partial input across timeouts.
struct LineReader {
    stream: TcpStream,
    pending: Vec<u8>,
}

impl LineReader {
    fn read_line(&mut self, deadline: Option<Instant>) -> io::Result<ReadOutcome> {
        loop {
            if let Some(i) = self.pending.iter().position(|&b| b == b'\n') {
                let line: Vec<u8> = self.pending.drain(..=i).collect();
                return Ok(ReadOutcome::Line(String::from_utf8_lossy(&line).into_owned()));
            }
            let timeout = match deadline {
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return Ok(ReadOutcome::TimedOut);
                    }
                    Some(d - now)
                }
                None => None,
            };
            self.stream.set_read_timeout(timeout)?;
            let mut buf = [0u8; 4096];
            match self.stream.read(&mut buf) {
                Ok(0) => return Ok(ReadOutcome::Closed),
                Ok(n) => self.pending.extend_from_slice(&buf[..n]),
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                    return Ok(ReadOutcome::TimedOut)
                }
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) if is_disconnect(&e) => return Ok(ReadOutcome::Closed),
                Err(e) => return Err(e),
            }
        }
    }
}

fn is_disconnect(e: &io::Error) -> bool {
    matches!(
        e.kind(),
        ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted | ErrorKind::BrokenPipe
    )
}

fn send(stream: &mut TcpStream, m: &ProtocolMessage) -> io::Result<()> {
    let mut line = encode_message(m);
    line.push('\n');
    stream.write_all(line.as_bytes())
}

fn err_msg(code: &str, text: impl Into<String>) -> ProtocolMessage {
    ProtocolMessage::Err {
        code: code.into(),
        text: text.into(),
    }
}

fn end_msg(r: &EpisodeRecord) -> ProtocolMessage {
    ProtocolMessage::End(EpisodeEnd {
        scene_id: r.scenario.scene_id.clone(),
        episode_id: r.scenario.episode_id,
        success: r.success,
        path_length: r.path_length_m,
        steps: r.steps,
        termination: r.termination,
    })
}

/// Accepts one connection on `listener` and runs `scenarios` (in the given
/// order) with the agent on the other end.
pub fn serve_remote(
    listener: &TcpListener,
    work: &Workload,
    scenarios: &[Scenario],
    config: &ServeConfig,
) -> Result<SessionResult, HarnessError> {
    let (stream, peer) = listener.accept()?;
    debug!("remote agent connected from {peer}");
    serve_connection(stream, work, scenarios, config)
}

/// Runs a session over an accepted connection.
pub fn serve_connection(
    stream: TcpStream,
    work: &Workload,
    scenarios: &[Scenario],
    config: &ServeConfig,
) -> Result<SessionResult, HarnessError> {
    stream.set_nodelay(true)?;
    let mut out = stream.try_clone()?;
    let mut input = LineReader {
        stream,
        pending: Vec::new(),
    };
    let remote = |e: String| HarnessError::Remote(e);

    let hello_deadline = Some(Instant::now() + config.step_timeout);
    let (agent_name, requested) = match input.read_line(hello_deadline)? {
        ReadOutcome::Line(l) => match decode_message(&l) {
            Ok(ProtocolMessage::Hello {
                agent_name,
                sensors,
            }) => (agent_name, sensors),
            Ok(other) => {
                let _ = send(&mut out, &err_msg("handshake", format!("expected HELLO, got {}", other.tag())));
                return Err(remote(format!("handshake: expected HELLO, got {}", other.tag())));
            }
            Err(e) => {
                let code = match e {
                    ProtocolError::VersionMismatch { .. } => "version",
                    _ => "handshake",
                };
                let _ = send(&mut out, &err_msg(code, e.to_string()));
                return Err(remote(format!("handshake: {e}")));
            }
        },
        ReadOutcome::TimedOut => {
            let _ = send(&mut out, &err_msg("timeout", "no HELLO received"));
            return Err(remote("handshake timed out".into()));
        }
        ReadOutcome::Closed => return Err(remote("agent closed before HELLO".into())),
    };
    let granted = requested.intersect(&config.episode.sensors);
    let mut episode_config = config.episode.clone();
    episode_config.sensors = granted;

    let mut records = Vec::with_capacity(scenarios.len());
    let mut connected = true;
    // Replies owed for observations whose answer did not arrive in time.
    let mut stale = 0usize;
    for s in scenarios {
        let world = work
            .worlds
            .get(&s.scene_id)
            .ok_or_else(|| remote(format!("no map for scene {}", s.scene_id)))?
            .clone();
        let fields = Arc::new(GoalFields::build(&world, &s.goal, episode_config.tau)?);
        let mut state = EpisodeState::with_goal(world.clone(), s, fields, &episode_config)?;
        if !connected {
            state.abort(Termination::Timeout);
            records.push(state.evaluate()?);
            continue;
        }
        let spec = world.spec();
        let setup = ProtocolMessage::Config(EpisodeSetup {
            scene_id: s.scene_id.clone(),
            episode_id: s.episode_id,
            goal: s.goal.clone(),
            sensors: granted,
            step_size: spec.step_size,
            turn_angle: spec.turn_angle,
            fov: spec.fov,
            tau: episode_config.tau,
            max_steps: episode_config.max_steps,
        });
        let sent = send(&mut out, &setup);
        let mut obs = state.observation();
        while sent.is_ok() && state.termination().is_none() {
            if send(&mut out, &ProtocolMessage::Obs(obs.clone())).is_err() {
                break;
            }
            let deadline = Instant::now() + config.step_timeout;
            let reply = loop {
                match input.read_line(Some(deadline))? {
                    ReadOutcome::Line(_) if stale > 0 => stale -= 1,
                    other => break other,
                }
            };
            let action = match reply {
                ReadOutcome::Line(l) => match decode_message(&l) {
                    Ok(ProtocolMessage::Act(a)) => a,
                    Ok(other) => {
                        let _ = send(&mut out, &err_msg("unexpected", format!("expected ACT, got {}", other.tag())));
                        state.abort(Termination::ProtocolError);
                        break;
                    }
                    Err(e) => {
                        let _ = send(&mut out, &err_msg("bad-action", e.to_string()));
                        state.abort(Termination::ProtocolError);
                        break;
                    }
                },
                ReadOutcome::TimedOut => {
                    warn!("{}/{}: agent timed out", s.scene_id, s.episode_id);
                    stale += 1;
                    state.abort(Termination::Timeout);
                    break;
                }
                ReadOutcome::Closed => {
                    connected = false;
                    state.abort(Termination::Timeout);
                    break;
                }
            };
            match state.step(action)? {
                StepOutcome::Continue(next) => obs = next,
                StepOutcome::Terminated(_) => {}
            }
        }
        if state.termination().is_none() {
            // The write side failed: the agent is gone.
            connected = false;
            state.abort(Termination::Timeout);
        }
        let record = state.evaluate()?;
        if connected && send(&mut out, &end_msg(&record)).is_err() {
            connected = false;
        }
        records.push(record);
    }
    let _ = out.shutdown(std::net::Shutdown::Both);
    Ok(SessionResult {
        agent_name,
        granted,
        records,
    })
}

/// What the reference client saw at the end of each episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientSummary {
    pub ends: Vec<EpisodeEnd>,
    pub errors: Vec<(String, String)>,
}

/// Reference agent-side loop: announces itself, then answers every
/// observation with `policy_for(setup)`'s action until the server closes.
pub fn run_client(
    stream: TcpStream,
    name: &str,
    sensors: Sensors,
    mut policy_for: impl FnMut(&EpisodeSetup) -> Box<dyn Policy>,
) -> io::Result<ClientSummary> {
    stream.set_nodelay(true)?;
    let mut out = stream.try_clone()?;
    let mut input = BufReader::new(stream);
    send(
        &mut out,
        &ProtocolMessage::Hello {
            agent_name: name.to_string(),
            sensors,
        },
    )?;
    let mut policy: Option<Box<dyn Policy>> = None;
    let mut summary = ClientSummary {
        ends: Vec::new(),
        errors: Vec::new(),
    };
    let mut line = String::new();
    loop {
        line.clear();
        match input.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) if is_disconnect(&e) => break,
            Err(e) => return Err(e),
        }
        let msg = decode_message(&line)
            .map_err(|e| io::Error::new(ErrorKind::InvalidData, e.to_string()))?;
        match msg {
            ProtocolMessage::Config(setup) => {
                let mut p = policy_for(&setup);
                let spec = AgentSpec {
                    step_size: setup.step_size,
                    turn_angle: setup.turn_angle,
                    fov: setup.fov,
                    ..AgentSpec::default()
                };
                p.reset(
                    Some(&setup.goal),
                    &EpisodeParams {
                        tau: setup.tau,
                        spec,
                        sensors: setup.sensors,
                        budget: None,
                        max_steps: setup.max_steps,
                    },
                );
                policy = Some(p);
            }
            ProtocolMessage::Obs(obs) => {
                let Some(p) = policy.as_mut() else {
                    return Err(io::Error::new(ErrorKind::InvalidData, "OBS before CONFIG"));
                };
                let a = p.act(&obs);
                if let Err(e) = send(&mut out, &ProtocolMessage::Act(a)) {
                    if is_disconnect(&e) {
                        break;
                    }
                    return Err(e);
                }
            }
            ProtocolMessage::End(end) => {
                policy = None;
                summary.ends.push(end);
            }
            ProtocolMessage::Err { code, text } => summary.errors.push((code, text)),
            ProtocolMessage::Hello { .. } | ProtocolMessage::Act(_) => {
                return Err(io::Error::new(
                    ErrorKind::InvalidData,
                    format!("unexpected {} from server", msg.tag()),
                ));
            }
        }
    }
    Ok(summary)
}

/// Convenience wrapper around [`BufRead`] for tests that speak the protocol by
/// hand.
pub fn read_message(input: &mut impl BufRead) -> io::Result<Option<ProtocolMessage>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    decode_message(&line)
        .map(Some)
        .map_err(|e| io::Error::new(ErrorKind::InvalidData, e.to_string()))
}

//! Scripted baseline agents.
//!
//! `random` and `greedy` see only their observations. `oracle`, `stumbler`
//! and `frontier` plan on the full map and are therefore privileged; any
//! report containing their results says so.

mod frontier;
mod oracle;
mod reactive;
mod steer;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

pub use frontier::FrontierAgent;
pub use oracle::OracleAgent;
pub use reactive::{GreedyAgent, RandomAgent};
pub use steer::Steering;

use crate::episode::{Action, Observation, Sensors};
use crate::gridworld::{AgentSpec, NavWorld};
use crate::scenario::Goal;

/// Per-episode settings handed to an agent before its first action.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeParams {
    pub tau: f64,
    pub spec: AgentSpec,
    pub sensors: Sensors,
    /// Path-length budget of an exploration run.
    pub budget: Option<f64>,
    pub max_steps: u32,
}

/// The agent side of the episode protocol.
pub trait Policy: Send {
    /// Prepares for a new episode. `goal` is `None` during exploration.
    fn reset(&mut self, goal: Option<&Goal>, params: &EpisodeParams);
    fn act(&mut self, obs: &Observation) -> Action;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Oracle,
    Greedy,
    Random,
    Stumbler,
    Frontier,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::Oracle,
        AgentKind::Greedy,
        AgentKind::Random,
        AgentKind::Stumbler,
        AgentKind::Frontier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Oracle => "oracle",
            AgentKind::Greedy => "greedy",
            AgentKind::Random => "random",
            AgentKind::Stumbler => "stumbler",
            AgentKind::Frontier => "frontier",
        }
    }

    pub fn needs_map(self) -> bool {
        matches!(
            self,
            AgentKind::Oracle | AgentKind::Stumbler | AgentKind::Frontier
        )
    }

    /// Whether `Done` can ever be emitted by this kind.
    pub fn may_finish(self) -> bool {
        self != AgentKind::Stumbler
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown agent kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("agent kind {0} plans on the full map and needs privileged access")]
    NeedsMap(AgentKind),
}

/// A constructed agent with its provenance.
pub struct AgentHandle {
    kind: AgentKind,
    seed: u64,
    privileged: bool,
    policy: Box<dyn Policy>,
}

impl AgentHandle {
    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn privileged(&self) -> bool {
        self.privileged
    }
}

impl fmt::Debug for AgentHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AgentHandle")
            .field("kind", &self.kind)
            .field("seed", &self.seed)
            .field("privileged", &self.privileged)
            .finish()
    }
}

impl Policy for AgentHandle {
    fn reset(&mut self, goal: Option<&Goal>, params: &EpisodeParams) {
        self.policy.reset(goal, params)
    }

    fn act(&mut self, obs: &Observation) -> Action {
        self.policy.act(obs)
    }
}

/// Builds a baseline agent. Map-planning kinds require `world`; passing a
/// world to the reactive kinds is allowed and ignored.
pub fn make_agent(
    kind: AgentKind,
    seed: u64,
    world: Option<Arc<NavWorld>>,
) -> Result<AgentHandle, AgentError> {
    let policy: Box<dyn Policy> = match (kind, world) {
        (AgentKind::Random, _) => Box::new(RandomAgent::new(seed)),
        (AgentKind::Greedy, _) => Box::new(GreedyAgent::new()),
        (AgentKind::Oracle, Some(w)) => Box::new(OracleAgent::new(w, true)),
        (AgentKind::Stumbler, Some(w)) => Box::new(OracleAgent::new(w, false)),
        (AgentKind::Frontier, Some(w)) => Box::new(FrontierAgent::new(w)),
        (k, None) => return Err(AgentError::NeedsMap(k)),
    };
    Ok(AgentHandle {
        kind,
        seed,
        privileged: kind.needs_map(),
        policy,
    })
}

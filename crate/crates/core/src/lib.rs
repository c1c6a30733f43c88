//! Benchmark toolkit for embodied navigation agents.
//!
//! Worlds are planar metric occupancy grids (all lengths in meters). Agents
//! act in continuous space with a small discrete action vocabulary that
//! includes an explicit `Done` action; an episode is only ever judged at the
//! moment `Done` is emitted. Aggregate performance is reported as SPL
//! (success weighted by normalized inverse path length) together with a set
//! of auxiliary measures.
//!
//! Module map:
//!
//! - [`gridworld`]: occupancy grids, map files, procedural worlds, inflation, line of sight
//! - [`geodesic`]: distance fields, shortest paths and goal success regions
//! - [`scenario`]: goal definitions, scenario sampling, validation, splits, scenario files
//! - [`episode`]: the episode state machine, exploration runs and trajectory logs
//! - [`metrics`]: SPL, threshold sweeps, auxiliary measures and exploration profiles
//! - [`agents`]: scripted baseline agents
//! - [`harness`]: batch runner, wire protocol, remote sessions and report emission

pub mod agents;
pub mod episode;
pub mod format;
pub mod geodesic;
pub mod gridworld;
pub mod harness;
pub mod metrics;
pub mod scenario;

pub use agents::{make_agent, AgentHandle, AgentKind, Policy};
pub use episode::{
    begin_episode, begin_exploration, Action, CoverageRecord, EpisodeConfig, EpisodeRecord,
    EpisodeState, Observation, Pose, Sensors, StepOutcome, Termination,
};
pub use geodesic::{DistanceField, SuccessRegion};
pub use gridworld::{
    AgentSpec, Cell, Environment, NavWorld, ObjectInstance, OccupancyGrid, Point, Region,
};
pub use metrics::{aux_report, spl, tau_sweep, EpisodeSummary, MetricsReport};
pub use scenario::{Goal, GoalKind, Scenario, ScenarioConstraints, Split};

/// Tolerance used for length comparisons, in meters.
pub const LENGTH_EPS: f64 = 1e-9;

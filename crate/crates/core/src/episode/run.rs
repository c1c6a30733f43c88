use std::sync::Arc;

use super::coverage::CoverageRecord;
use super::log::Recording;
use super::state::{begin_episode, begin_exploration, EpisodeState, Phase, StepOutcome};
use super::{EpisodeConfig, EpisodeError, EpisodeRecord, Pose, Sensors};
use crate::agents::{EpisodeParams, Policy};
use crate::gridworld::NavWorld;
use crate::scenario::Scenario;

/// Settings for a goal-free exploration run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationConfig {
    pub budget_m: f64,
    pub sensors: Sensors,
    /// Safety cap on actions; rotations do not consume budget.
    pub max_steps: u32,
}

impl ExplorationConfig {
    pub fn new(budget_m: f64, step_size: f64) -> Self {
        let moves = (budget_m / step_size).ceil().max(0.0) as u32;
        Self {
            budget_m,
            sensors: Sensors {
                goal_vector: false,
                patch: Some(Sensors::DEFAULT_PATCH),
            },
            max_steps: moves.saturating_mul(20).saturating_add(100),
        }
    }
}

/// Resets `policy` for the episode held in `state`.
pub fn reset_policy(state: &EpisodeState, policy: &mut dyn Policy) {
    let params = EpisodeParams {
        tau: state.config().tau,
        spec: *state.world().spec(),
        sensors: state.config().sensors,
        budget: state.budget(),
        max_steps: state.config().max_steps,
    };
    let goal = state.scenario().map(|s| s.goal.clone());
    policy.reset(goal.as_ref(), &params);
}

/// Steps `state` with actions from `policy` until it terminates.
pub fn drive(state: &mut EpisodeState, policy: &mut dyn Policy) -> Result<(), EpisodeError> {
    reset_policy(state, policy);
    let mut obs = state.observation();
    while state.phase() == Phase::Running {
        let action = policy.act(&obs);
        match state.step(action)? {
            StepOutcome::Continue(next) => obs = next,
            StepOutcome::Terminated(_) => break,
        }
    }
    Ok(())
}

/// Runs one goal episode in-process.
pub fn run_episode(
    world: Arc<NavWorld>,
    scenario: &Scenario,
    config: &EpisodeConfig,
    policy: &mut dyn Policy,
) -> Result<EpisodeRecord, EpisodeError> {
    let mut state = begin_episode(world, scenario, config)?;
    drive(&mut state, policy)?;
    state.evaluate()
}

/// Runs a goal-free exploration from `start` until the budget is spent, the
/// agent signals done, or the step cap is reached.
pub fn run_exploration(
    world: Arc<NavWorld>,
    start: Pose,
    config: &ExplorationConfig,
    policy: &mut dyn Policy,
) -> Result<(CoverageRecord, Recording), EpisodeError> {
    let episode_config = EpisodeConfig {
        max_steps: config.max_steps,
        sensors: config.sensors,
        ..EpisodeConfig::default()
    };
    let mut state = begin_exploration(world.clone(), start, config.budget_m, &episode_config)?;
    if state.phase() == Phase::Running {
        drive(&mut state, policy)?;
    }
    let record = state
        .coverage()
        .expect("exploration tracks coverage")
        .record(&world, config.budget_m, state.path_length());
    Ok((record, state.recording()))
}

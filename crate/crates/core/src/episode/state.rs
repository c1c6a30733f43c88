use std::sync::Arc;

use super::coverage::CoverageTracker;
use super::log::LogEntry;
use super::{
    relative_bearing, Action, EpisodeConfig, EpisodeError, EpisodeRecord,
    GoalVector, LocalPatch, Observation, Pose, Termination,
};
use crate::geodesic::{GoalFields, OBJECT_VISIBLE_RANGE};
use crate::gridworld::{NavWorld, Point};
use crate::scenario::{Goal, Scenario, ScenarioChecker};
use crate::LENGTH_EPS;

/// Contact search stops once the bracket is this narrow, meters.
pub const CONTACT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Running,
    Terminated(Termination),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Continue(Observation),
    Terminated(Termination),
}

struct GoalContext {
    scenario: Scenario,
    fields: Arc<GoalFields>,
}

/// Mutable state of one running episode.
pub struct EpisodeState {
    world: Arc<NavWorld>,
    goal: Option<GoalContext>,
    config: EpisodeConfig,
    start: Pose,
    pose: Pose,
    steps: u32,
    rotations: u32,
    infractions: u32,
    path_length: f64,
    last_collision: bool,
    budget: Option<f64>,
    phase: Phase,
    trajectory: Vec<LogEntry>,
    coverage: Option<CoverageTracker>,
}

/// Validates `scenario` against `world` and places the agent at its start.
pub fn begin_episode(
    world: Arc<NavWorld>,
    scenario: &Scenario,
    config: &EpisodeConfig,
) -> Result<EpisodeState, EpisodeError> {
    if scenario.scene_id != world.scene_id() {
        return Err(EpisodeError::SceneMismatch {
            scenario: scenario.scene_id.clone(),
            world: world.scene_id().to_string(),
        });
    }
    let diag = ScenarioChecker::new(&world, config.validation).check(scenario);
    if !diag.passed() {
        return Err(EpisodeError::InvalidScenario(Box::new(diag)));
    }
    let fields = Arc::new(GoalFields::build(&world, &scenario.goal, config.tau)?);
    EpisodeState::with_goal(world, scenario, fields, config)
}

/// Starts a goal-free exploration run limited by path length.
pub fn begin_exploration(
    world: Arc<NavWorld>,
    start: Pose,
    budget_m: f64,
    config: &EpisodeConfig,
) -> Result<EpisodeState, EpisodeError> {
    if !world.is_pose_free(start.position()) {
        return Err(EpisodeError::StartInCollision);
    }
    let tracker = CoverageTracker::new(&world, start.position());
    let mut state = EpisodeState::blank(world, None, start, config);
    state.budget = Some(budget_m.max(0.0));
    state.coverage = Some(tracker);
    state.observe_coverage();
    if budget_m <= LENGTH_EPS {
        state.phase = Phase::Terminated(Termination::BudgetExhausted);
    }
    Ok(state)
}

impl EpisodeState {
    /// Starts an episode whose scenario was already validated and whose goal
    /// fields were built for `config.tau`.
    pub fn with_goal(
        world: Arc<NavWorld>,
        scenario: &Scenario,
        fields: Arc<GoalFields>,
        config: &EpisodeConfig,
    ) -> Result<Self, EpisodeError> {
        if !world.is_pose_free(scenario.start.position()) {
            return Err(EpisodeError::StartInCollision);
        }
        let ctx = GoalContext {
            scenario: scenario.clone(),
            fields,
        };
        Ok(Self::blank(world, Some(ctx), scenario.start, config))
    }

    fn blank(
        world: Arc<NavWorld>,
        goal: Option<GoalContext>,
        start: Pose,
        config: &EpisodeConfig,
    ) -> Self {
        Self {
            world,
            goal,
            config: config.clone(),
            start,
            pose: start,
            steps: 0,
            rotations: 0,
            infractions: 0,
            path_length: 0.0,
            last_collision: false,
            budget: None,
            phase: Phase::Running,
            trajectory: Vec::new(),
            coverage: None,
        }
    }

    pub(crate) fn clear_budget(&mut self) {
        self.budget = None;
        if self.steps == 0 {
            self.phase = Phase::Running;
        }
    }

    /// Turns on coverage bookkeeping for a goal episode.
    pub fn track_coverage(&mut self) {
        if self.coverage.is_none() {
            self.coverage = Some(CoverageTracker::new(&self.world, self.start.position()));
            self.observe_coverage();
        }
    }

    pub fn world(&self) -> &Arc<NavWorld> {
        &self.world
    }

    pub fn scenario(&self) -> Option<&Scenario> {
        self.goal.as_ref().map(|g| &g.scenario)
    }

    pub fn goal_fields(&self) -> Option<&Arc<GoalFields>> {
        self.goal.as_ref().map(|g| &g.fields)
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn start(&self) -> Pose {
        self.start
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn rotations(&self) -> u32 {
        self.rotations
    }

    pub fn infractions(&self) -> u32 {
        self.infractions
    }

    pub fn path_length(&self) -> f64 {
        self.path_length
    }

    pub fn budget(&self) -> Option<f64> {
        self.budget
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn termination(&self) -> Option<Termination> {
        match self.phase {
            Phase::Running => None,
            Phase::Terminated(t) => Some(t),
        }
    }

    pub fn trajectory(&self) -> &[LogEntry] {
        &self.trajectory
    }

    pub fn coverage(&self) -> Option<&CoverageTracker> {
        self.coverage.as_ref()
    }

    /// What the agent perceives at the current pose.
    pub fn observation(&self) -> Observation {
        let sensors = self.config.sensors;
        let goal = self.scenario().map(|s| s.goal.clone());
        let goal_vector = match (&goal, sensors.goal_vector) {
            (Some(Goal::Point(p)), true) => Some(GoalVector {
                distance: self.pose.position().distance(*p),
                bearing: relative_bearing(&self.pose, *p),
            }),
            _ => None,
        };
        let local_patch = sensors.patch.map(|k| self.patch(k));
        Observation {
            steps: self.steps,
            odometry: self.pose,
            goal,
            goal_vector,
            local_patch,
            last_collision: self.last_collision,
        }
    }

    fn patch(&self, k: usize) -> LocalPatch {
        let grid = self.world.raw();
        let half = (k / 2) as isize;
        let center = grid.cell_of(self.pose.position());
        let mut cells = Vec::with_capacity(k * k);
        for row in 0..k as isize {
            // Same orientation as map text: first row has the lowest y.
            let dy = row - half;
            for col in 0..k as isize {
                let dx = col - half;
                let cell = center.and_then(|c| grid.offset(c, dx, dy));
                cells.push(cell.is_none_or(|c| grid.is_obstacle(c)));
            }
        }
        LocalPatch { size: k, cells }
    }

    /// Applies one action.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EpisodeError> {
        if let Phase::Terminated(t) = self.phase {
            return Err(EpisodeError::AfterTermination(t));
        }
        self.steps += 1;
        let mut collision = false;
        match action {
            Action::MoveForward => collision = self.translate(1.0),
            Action::MoveBackward => collision = self.translate(-1.0),
            Action::RotateLeft => self.rotate(1.0),
            Action::RotateRight => self.rotate(-1.0),
            Action::Done => {}
        }
        self.last_collision = collision;
        if collision {
            self.infractions += 1;
        }
        self.trajectory.push(LogEntry {
            t: self.steps,
            action,
            pose: self.pose,
            path_length: self.path_length,
            collision,
        });
        self.observe_coverage();

        let termination = if action == Action::Done {
            Some(Termination::DoneSignal)
        } else if self
            .budget
            .is_some_and(|b| self.path_length >= b - LENGTH_EPS)
        {
            Some(Termination::BudgetExhausted)
        } else if self.steps >= self.config.max_steps {
            Some(Termination::StepLimit)
        } else {
            None
        };
        Ok(match termination {
            Some(t) => {
                self.phase = Phase::Terminated(t);
                StepOutcome::Terminated(t)
            }
            None => StepOutcome::Continue(self.observation()),
        })
    }

    /// Ends the episode from outside (remote agent failures).
    pub fn abort(&mut self, reason: Termination) {
        if self.phase == Phase::Running {
            self.phase = Phase::Terminated(reason);
        }
    }

    fn rotate(&mut self, sign: f64) {
        let turn = self.world.spec().turn_angle;
        self.pose = Pose::new(self.pose.x, self.pose.y, self.pose.heading + sign * turn);
        self.rotations += 1;
    }

    /// Moves along the heading; returns whether the motion was cut short by
    /// contact.
    fn translate(&mut self, sign: f64) -> bool {
        let mut length = self.world.spec().step_size;
        if let Some(b) = self.budget {
            length = length.min((b - self.path_length).max(0.0));
        }
        if length <= 0.0 {
            return false;
        }
        let from = self.pose.position();
        let (dx, dy) = (sign * self.pose.heading.cos(), sign * self.pose.heading.sin());
        let at = |d: f64| Point::new(from.x + dx * d, from.y + dy * d);
        let (reached, collided) = if self.world.segment_free(from, at(length)) {
            (length, false)
        } else {
            let (mut lo, mut hi) = (0.0, length);
            while hi - lo > CONTACT_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                if self.world.segment_free(from, at(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo, true)
        };
        let to = at(reached);
        self.path_length += from.distance(to);
        self.pose = Pose {
            x: to.x,
            y: to.y,
            heading: self.pose.heading,
        };
        collided
    }

    fn observe_coverage(&mut self) {
        if let Some(tracker) = self.coverage.as_mut() {
            tracker.observe(&self.world, self.pose.position());
        }
    }

    /// Whether the current configuration satisfies the goal predicate. This
    /// ignores how the episode ended.
    pub fn at_goal(&self) -> Result<bool, EpisodeError> {
        let ctx = self.goal.as_ref().ok_or(EpisodeError::NoGoal)?;
        let p = self.pose.position();
        let tau = self.config.tau;
        Ok(match &ctx.scenario.goal {
            Goal::Point(_) => ctx
                .fields
                .goal_distance(p)
                .is_some_and(|d| d < tau - LENGTH_EPS),
            Goal::Area(_) => self
                .world
                .cspace()
                .cell_of(p)
                .is_some_and(|c| ctx.fields.region().contains(c)),
            Goal::Object(category) => {
                let half_fov = 0.5 * self.world.spec().fov;
                self.world.env().objects_of(category).any(|obj| {
                    p.distance(obj.position) <= OBJECT_VISIBLE_RANGE + LENGTH_EPS
                        && relative_bearing(&self.pose, obj.position).abs()
                            <= half_fov + LENGTH_EPS
                        && self.world.visible(p, obj.position)
                })
            }
        })
    }

    /// Scores a terminated goal episode.
    pub fn evaluate(&self) -> Result<EpisodeRecord, EpisodeError> {
        let Phase::Terminated(termination) = self.phase else {
            return Err(EpisodeError::NotTerminated);
        };
        let ctx = self.goal.as_ref().ok_or(EpisodeError::NoGoal)?;
        let success = termination == Termination::DoneSignal && self.at_goal()?;
        Ok(EpisodeRecord {
            scenario: ctx.scenario.clone(),
            tau: self.config.tau,
            success,
            path_length_m: self.path_length,
            geodesic_length_m: ctx.scenario.geodesic_length,
            final_geodesic_to_goal_m: ctx
                .fields
                .goal_distance(self.pose.position())
                .unwrap_or(f64::INFINITY),
            steps: self.steps,
            rotations: self.rotations,
            infractions: self.infractions,
            termination,
            trajectory: self.trajectory.clone(),
        })
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EpisodeParams, Policy};
use crate::episode::{Action, Observation};
use crate::scenario::Goal;

/// Uniform over forward and the two rotations, with a 1% chance of `Done`.
pub struct RandomAgent {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub const DONE_PROBABILITY: f64 = 0.01;

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomAgent {
    fn reset(&mut self, _goal: Option<&Goal>, _params: &EpisodeParams) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }

    fn act(&mut self, _obs: &Observation) -> Action {
        if self.rng.gen_bool(Self::DONE_PROBABILITY) {
            return Action::Done;
        }
        match self.rng.gen_range(0..3) {
            0 => Action::MoveForward,
            1 => Action::RotateLeft,
            _ => Action::RotateRight,
        }
    }
}

/// Turns toward the goal vector and walks straight at it. Walls in the way
/// stop it; it has no notion of going around.
#[derive(Default)]
pub struct GreedyAgent {
    tau: f64,
    turn: f64,
}

impl GreedyAgent {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Policy for GreedyAgent {
    fn reset(&mut self, _goal: Option<&Goal>, params: &EpisodeParams) {
        self.tau = params.tau;
        self.turn = params.spec.turn_angle;
    }

    fn act(&mut self, obs: &Observation) -> Action {
        let Some(v) = obs.goal_vector else {
            // Nothing to be greedy about.
            return if obs.last_collision {
                Action::RotateLeft
            } else {
                Action::MoveForward
            };
        };
        if v.distance < 0.75 * self.tau {
            Action::Done
        } else if v.bearing > 0.5 * self.turn {
            Action::RotateLeft
        } else if v.bearing < -0.5 * self.turn {
            Action::RotateRight
        } else {
            Action::MoveForward
        }
    }
}

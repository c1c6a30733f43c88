use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::validate::{clearance_mask, effective_clearance};
use super::{Goal, GoalKind, Scenario, ScenarioConstraints, Split};
use crate::episode::Pose;
use crate::geodesic::{success_region, DistanceField};
use crate::gridworld::{Cell, NavWorld};
use crate::LENGTH_EPS;

#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub scenarios: Vec<Scenario>,
    /// Clearance radius that was enforced (may be relaxed on cramped maps).
    pub clearance_radius: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("produced only {} of {requested} scenarios in {attempts} attempts", produced.len())]
    Partial {
        produced: Vec<Scenario>,
        requested: usize,
        attempts: usize,
    },
    #[error("invalid sampling request: {0}")]
    Invalid(String),
}

/// Draws `count` random scenarios for one scene.
///
/// Starts (and point goals) are cell centers that are collision-free and
/// have the required clearance; headings are uniform in `[0, 2pi)`. Every
/// candidate is checked for navigability and minimum separation; rejected
/// candidates consume attempts, of which there are at most `100 * count`.
/// Emitted scenarios carry episode ids `0..count` and the `Test` split.
pub fn sample_scenarios(
    world: &NavWorld,
    kind: GoalKind,
    count: usize,
    constraints: &ScenarioConstraints,
    seed: u64,
) -> Result<Sampled, SampleError> {
    if count == 0 {
        return Err(SampleError::Invalid("count must be at least 1".into()));
    }
    let c = constraints;
    if !(c.min_separation > 0.0 && c.clearance_radius > 0.0 && c.tau > 0.0) {
        return Err(SampleError::Invalid("constraints must be positive".into()));
    }

    let (clearance, warning) = effective_clearance(world, c.clearance_radius);
    let mask = clearance_mask(world.raw(), clearance);
    let cspace = world.cspace();
    let valid: Vec<Cell> = cspace
        .free_cells()
        .filter(|&cell| mask[cspace.index(cell)])
        .collect();

    // Candidate goals for object/area kinds, with cached distance fields.
    let mut label_goals: Vec<Goal> = match kind {
        GoalKind::Point => Vec::new(),
        GoalKind::Object => world
            .env()
            .categories()
            .into_iter()
            .map(|c| Goal::Object(c.to_string()))
            .collect(),
        GoalKind::Area => world
            .env()
            .regions()
            .iter()
            .map(|r| Goal::Area(r.id.clone()))
            .collect(),
    };
    let mut fields: BTreeMap<usize, DistanceField> = BTreeMap::new();
    label_goals.retain(|g| {
        success_region(world, g, c.tau).is_ok_and(|r| !r.is_empty())
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 100 * count;
    let mut scenarios = Vec::with_capacity(count);
    let mut attempts = 0;
    let impossible = valid.is_empty() || (kind != GoalKind::Point && label_goals.is_empty());
    while !impossible && scenarios.len() < count && attempts < max_attempts {
        attempts += 1;
        let start_cell = valid[rng.gen_range(0..valid.len())];
        let heading = rng.gen_range(0.0..TAU);
        let (goal, length) = match kind {
            GoalKind::Point => {
                let goal_cell = valid[rng.gen_range(0..valid.len())];
                let field = DistanceField::compute(cspace, &[goal_cell])
                    .expect("valid cells are free");
                (
                    Goal::Point(cspace.cell_center(goal_cell)),
                    field.get(start_cell),
                )
            }
            GoalKind::Object | GoalKind::Area => {
                let gi = rng.gen_range(0..label_goals.len());
                let goal = label_goals[gi].clone();
                let field = fields.entry(gi).or_insert_with(|| {
                    let region = success_region(world, &goal, c.tau).expect("checked above");
                    DistanceField::compute(cspace, region.cells()).expect("nonempty region")
                });
                (goal, field.get(start_cell))
            }
        };
        let Some(length) = length else {
            continue;
        };
        if length < c.min_separation - LENGTH_EPS {
            continue;
        }
        let p = cspace.cell_center(start_cell);
        scenarios.push(Scenario {
            scene_id: world.scene_id().to_string(),
            episode_id: scenarios.len() as u64,
            start: Pose::new(p.x, p.y, heading),
            goal,
            geodesic_length: length,
            split: Split::Test,
        });
    }
    if scenarios.len() < count {
        return Err(SampleError::Partial {
            produced: scenarios,
            requested: count,
            attempts,
        });
    }
    Ok(Sampled {
        scenarios,
        clearance_radius: clearance,
        warnings: warning.into_iter().collect(),
    })
}

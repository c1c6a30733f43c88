//! The standard desk-scale suite: generated 20 m x 20 m scenes with sampled
//! point-goal scenarios, split by scene.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::{episode_seed, HarnessError, Workload};
use crate::gridworld::{generate_environment, AgentSpec, GenerateParams, NavWorld, ObjectRequest};
use crate::scenario::{
    sample_scenarios, split_assign, GoalKind, ScenarioConstraints, SplitRatios,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub scenes: usize,
    pub scenarios_per_scene: usize,
    pub kind: GoalKind,
    pub master_seed: u64,
    pub size_m: f64,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            scenes: 10,
            scenarios_per_scene: 100,
            kind: GoalKind::Point,
            master_seed: 0,
            size_m: 20.0,
        }
    }
}

pub fn scene_params(scene_id: &str, size_m: f64) -> GenerateParams {
    GenerateParams {
        scene_id: scene_id.to_string(),
        width_m: size_m,
        height_m: size_m,
        region_labels: ["kitchen", "living", "bedroom", "bath"]
            .map(String::from)
            .to_vec(),
        objects: vec![
            ObjectRequest {
                category: "mug".into(),
                count: 3,
            },
            ObjectRequest {
                category: "chair".into(),
                count: 4,
            },
        ],
        ..GenerateParams::default()
    }
}

/// Builds the suite deterministically from `spec.master_seed`.
pub fn desk_scale_suite(spec: &SuiteSpec) -> Result<Workload, HarnessError> {
    let ids: Vec<String> = (0..spec.scenes).map(|i| format!("scene_{i:02}")).collect();
    let splits = split_assign(&ids, &SplitRatios::default(), spec.master_seed)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let built: Vec<Result<(Arc<NavWorld>, Vec<_>), HarnessError>> = ids
        .par_iter()
        .map(|id| {
            let seed = episode_seed(spec.master_seed, id, u64::MAX);
            let env = generate_environment(&scene_params(id, spec.size_m), seed)
                .map_err(|e| HarnessError::Config(format!("{id}: {e}")))?;
            let world = Arc::new(
                NavWorld::new(env, AgentSpec::default())
                    .map_err(|e| HarnessError::Config(format!("{id}: {e}")))?,
            );
            let sampled = sample_scenarios(
                &world,
                spec.kind,
                spec.scenarios_per_scene,
                &ScenarioConstraints::default(),
                seed.wrapping_add(1),
            )
            .map_err(|e| HarnessError::Config(format!("{id}: {e}")))?;
            let split = splits[id];
            let scenarios = sampled
                .scenarios
                .into_iter()
                .map(|s| s.with_split(split))
                .collect();
            Ok((world, scenarios))
        })
        .collect();
    let mut worlds = BTreeMap::new();
    let mut scenarios = Vec::new();
    for (id, r) in ids.iter().zip(built) {
        let (w, s) = r?;
        worlds.insert(id.clone(), w);
        scenarios.extend(s);
    }
    Ok(Workload { worlds, scenarios })
}

//! Batch evaluation, the remote-agent wire protocol and report emission.

pub mod protocol;
pub mod remote;
pub mod report;
pub mod suite;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

use crate::agents::{make_agent, AgentError, AgentKind};
use crate::episode::{
    drive, encode_log, run_exploration, EpisodeConfig, EpisodeError, EpisodeRecord, EpisodeState,
    ExplorationConfig, Sensors,
};
use crate::format::fmt_num;
use crate::geodesic::{GeodesicError, GoalFields};
use crate::gridworld::{parse_map, Fnv64, NavWorld};
use crate::metrics::{
    aux_report, EpisodeSummary, MetricsError, MetricsReport, ProfilePoint, DEFAULT_TAUS,
};
use report::ReportContext;
use crate::scenario::{decode_scenarios, Scenario, ScenarioChecker, ScenarioConstraints, Split};

/// How much the agent saw of the test environments before being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorExposure {
    #[default]
    NoPrior,
    Prerecorded,
    BudgetLimited,
}

impl PriorExposure {
    pub fn label(self) -> &'static str {
        match self {
            PriorExposure::NoPrior => "no-prior",
            PriorExposure::Prerecorded => "prerecorded",
            PriorExposure::BudgetLimited => "budget-limited",
        }
    }
}

impl fmt::Display for PriorExposure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PriorExposure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            PriorExposure::NoPrior,
            PriorExposure::Prerecorded,
            PriorExposure::BudgetLimited,
        ]
        .into_iter()
        .find(|p| p.label() == s)
        .ok_or_else(|| format!("unknown prior-exposure regime {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSelection {
    Builtin { kind: AgentKind, seed: u64 },
    /// Listen on this address for one remote agent.
    Remote { endpoint: String },
}

impl fmt::Display for AgentSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSelection::Builtin { kind, seed } => write!(f, "{kind}:{seed}"),
            AgentSelection::Remote { endpoint } => write!(f, "remote:{endpoint}"),
        }
    }
}

impl FromStr for AgentSelection {
    type Err = String;

    /// `<kind>[:<seed>]` or `remote:<host:port>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(endpoint) = s.strip_prefix("remote:") {
            if endpoint.is_empty() {
                return Err("remote agent needs an endpoint".into());
            }
            return Ok(AgentSelection::Remote {
                endpoint: endpoint.to_string(),
            });
        }
        let (kind, seed) = match s.split_once(':') {
            Some((k, seed)) => (
                k,
                seed.parse::<u64>()
                    .map_err(|_| format!("bad agent seed {seed:?}"))?,
            ),
            None => (s, 0),
        };
        Ok(AgentSelection::Builtin {
            kind: kind.parse()?,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario_file: Option<PathBuf>,
    pub map_dir: Option<PathBuf>,
    pub agent: AgentSelection,
    pub tau: f64,
    pub max_steps: u32,
    pub sensors: Sensors,
    pub parallelism: usize,
    /// Exploration budgets, meters, strictly increasing.
    pub budgets: Vec<f64>,
    pub csv_out: Option<PathBuf>,
    pub table_out: Option<PathBuf>,
    pub log_dir: Option<PathBuf>,
    pub master_seed: u64,
    /// Only run scenarios of this split.
    pub split: Option<Split>,
    pub prior_exposure: PriorExposure,
    pub step_timeout: Duration,
    pub validation: ScenarioConstraints,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario_file: None,
            map_dir: None,
            agent: AgentSelection::Builtin {
                kind: AgentKind::Oracle,
                seed: 0,
            },
            tau: 0.4,
            max_steps: 500,
            sensors: Sensors {
                goal_vector: true,
                patch: None,
            },
            parallelism: 1,
            budgets: Vec::new(),
            csv_out: None,
            table_out: None,
            log_dir: None,
            master_seed: 0,
            split: None,
            prior_exposure: PriorExposure::NoPrior,
            step_timeout: Duration::from_secs(10),
            validation: ScenarioConstraints::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.max_steps == 0 {
            return bad("max-steps must be at least 1".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if self.budgets.iter().any(|b| !(*b >= 0.0 && b.is_finite()))
            || self.budgets.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("budgets must be non-negative and strictly increasing".into());
        }
        if !self.budgets.is_empty() && self.prior_exposure != PriorExposure::BudgetLimited {
            return bad("exploration budgets require prior-exposure budget-limited".into());
        }
        Ok(())
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            max_steps: self.max_steps,
            tau: self.tau,
            sensors: self.sensors,
            validation: self.validation,
        }
    }

    /// Settings that determine results, as ordered `key=value` pairs.
    pub fn result_echo(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or("-".to_string(), |p| p.display().to_string())
        };
        let budgets = if self.budgets.is_empty() {
            "-".to_string()
        } else {
            self.budgets
                .iter()
                .map(|b| fmt_num(*b))
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            ("scenarios", path(&self.scenario_file)),
            ("maps", path(&self.map_dir)),
            ("agent", self.agent.to_string()),
            ("tau", fmt_num(self.tau)),
            ("max-steps", self.max_steps.to_string()),
            ("sensors", self.sensors.to_string()),
            ("budgets", budgets),
            ("seed", self.master_seed.to_string()),
            (
                "split",
                self.split.map_or("all".to_string(), |s| s.to_string()),
            ),
            ("prior", self.prior_exposure.to_string()),
            ("timeout-ms", self.step_timeout.as_millis().to_string()),
            ("min-separation", fmt_num(self.validation.min_separation)),
            ("clearance", fmt_num(self.validation.clearance_radius)),
        ]
    }

    /// Every setting, including ones that do not affect results.
    pub fn full_echo(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or("-".to_string(), |p| p.display().to_string())
        };
        let mut out = self.result_echo();
        out.push(("parallelism", self.parallelism.to_string()));
        out.push(("csv", path(&self.csv_out)));
        out.push(("table", path(&self.table_out)));
        out.push(("logs", path(&self.log_dir)));
        out
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("{path}: {reason}")]
    Input { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Goal(#[from] GeodesicError),
    #[error("remote session failed: {0}")]
    Remote(String),
}

/// Scenes and scenarios for one run.
#[derive(Debug, Clone, Default)]
pub struct Workload {
    pub worlds: BTreeMap<String, Arc<NavWorld>>,
    pub scenarios: Vec<Scenario>,
}

impl Workload {
    /// Keeps only scenarios of `split`.
    pub fn select(mut self, split: Option<Split>) -> Self {
        if let Some(s) = split {
            self.scenarios.retain(|sc| sc.split == s);
        }
        self
    }
}

/// Reads the scenario file and the `<scene>.navmap` files it references.
pub fn load_workload(config: &RunConfig) -> Result<Workload, HarnessError> {
    let scen_path = config
        .scenario_file
        .as_ref()
        .ok_or_else(|| HarnessError::Config("no scenario file given".into()))?;
    let map_dir = config
        .map_dir
        .as_ref()
        .ok_or_else(|| HarnessError::Config("no map directory given".into()))?;
    let input = |path: &Path, reason: String| HarnessError::Input {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(scen_path).map_err(|e| input(scen_path, e.to_string()))?;
    let scenarios = decode_scenarios(&text).map_err(|e| input(scen_path, e.to_string()))?;
    let mut worlds = BTreeMap::new();
    for s in &scenarios {
        if worlds.contains_key(&s.scene_id) {
            continue;
        }
        let path = map_dir.join(format!("{}.navmap", s.scene_id));
        let text = fs::read_to_string(&path).map_err(|e| input(&path, e.to_string()))?;
        let env = parse_map(&s.scene_id, &text).map_err(|e| input(&path, e.to_string()))?;
        let world = NavWorld::new(env, Default::default())
            .map_err(|e| input(&path, e.to_string()))?;
        worlds.insert(s.scene_id.clone(), Arc::new(world));
    }
    Ok(Workload { worlds, scenarios }.select(config.split))
}

/// Order-independent per-episode seed.
pub fn episode_seed(master: u64, scene_id: &str, episode_id: u64) -> u64 {
    let mut h = Fnv64::default();
    h.write(scene_id.as_bytes());
    let mut x = master ^ h.finish().rotate_left(17) ^ episode_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Outcome of a batch.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub records: Vec<EpisodeRecord>,
    pub report: MetricsReport,
    /// Whether the agent planned on the full map.
    pub privileged: bool,
}

fn by_episode(a: &Scenario, b: &Scenario) -> std::cmp::Ordering {
    (a.scene_id.as_str(), a.episode_id).cmp(&(b.scene_id.as_str(), b.episode_id))
}

/// Checks every scenario before anything runs; returns one line per failure.
pub fn validate_workload(work: &Workload, constraints: &ScenarioConstraints) -> Vec<String> {
    let mut failures = Vec::new();
    let mut by_scene: BTreeMap<&str, Vec<&Scenario>> = BTreeMap::new();
    for s in &work.scenarios {
        by_scene.entry(s.scene_id.as_str()).or_default().push(s);
    }
    for (scene, list) in by_scene {
        let Some(world) = work.worlds.get(scene) else {
            failures.push(format!("{scene}: no map loaded"));
            continue;
        };
        let checker = ScenarioChecker::new(world, *constraints);
        for s in list {
            let d = checker.check(s);
            if !d.passed() {
                failures.push(format!("{}/{}: {d}", s.scene_id, s.episode_id));
            }
        }
    }
    failures
}

fn run_one(
    world: &Arc<NavWorld>,
    scenario: &Scenario,
    kind: AgentKind,
    seed: u64,
    config: &RunConfig,
) -> Result<EpisodeRecord, HarnessError> {
    let ec = config.episode_config();
    let fields = Arc::new(GoalFields::build(world, &scenario.goal, ec.tau)?);
    let mut state = EpisodeState::with_goal(world.clone(), scenario, fields, &ec)?;
    let privileged = kind.needs_map().then(|| world.clone());
    let mut agent = make_agent(
        kind,
        episode_seed(seed ^ config.master_seed, &scenario.scene_id, scenario.episode_id),
        privileged,
    )?;
    drive(&mut state, &mut agent)?;
    Ok(state.evaluate()?)
}

/// Runs every scenario once with a built-in agent, in parallel, and
/// aggregates in (scene, episode) order.
pub fn run_batch(config: &RunConfig, work: &Workload) -> Result<BatchResult, HarnessError> {
    config.validate()?;
    let failures = validate_workload(work, &config.validation);
    if !failures.is_empty() {
        return Err(HarnessError::Validation(failures));
    }
    let mut scenarios = work.scenarios.clone();
    scenarios.sort_by(by_episode);

    let (records, privileged) = match &config.agent {
        AgentSelection::Builtin { kind, seed } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.parallelism)
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let results: Vec<Result<EpisodeRecord, HarnessError>> = pool.install(|| {
                scenarios
                    .par_iter()
                    .map(|s| run_one(&work.worlds[&s.scene_id], s, *kind, *seed, config))
                    .collect()
            });
            (
                results.into_iter().collect::<Result<Vec<_>, _>>()?,
                kind.needs_map(),
            )
        }
        AgentSelection::Remote { endpoint } => {
            let listener = std::net::TcpListener::bind(endpoint)?;
            let session = remote::serve_remote(&listener, work, &scenarios, &remote::ServeConfig {
                episode: config.episode_config(),
                step_timeout: config.step_timeout,
            })?;
            (session.records, false)
        }
    };

    if let Some(dir) = &config.log_dir {
        fs::create_dir_all(dir)?;
        for r in &records {
            let state_log = crate::episode::Recording {
                scene_id: r.scenario.scene_id.clone(),
                start: r.scenario.start,
                budget: None,
                entries: r.trajectory.clone(),
            };
            fs::write(
                dir.join(format!("{}_{}.navlog", r.scenario.scene_id, r.scenario.episode_id)),
                encode_log(&state_log),
            )?;
        }
    }
    let rows: Vec<EpisodeSummary> = records.iter().map(EpisodeSummary::from).collect();
    let report = aux_report(&rows, &report_taus(config.tau))?;
    Ok(BatchResult {
        records,
        report,
        privileged,
    })
}

/// Report header for a run. The CSV only echoes result-determining
/// settings, so it stays identical across parallelism and output paths.
pub fn report_context(config: &RunConfig, privileged: bool, full: bool) -> ReportContext {
    let echo = if full {
        config.full_echo()
    } else {
        config.result_echo()
    };
    ReportContext {
        agent: config.agent.to_string(),
        privileged,
        settings: echo.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    }
}

/// Default sweep plus the run's own threshold, ascending.
pub fn report_taus(tau: f64) -> Vec<f64> {
    let mut taus: Vec<f64> = DEFAULT_TAUS.to_vec();
    if !taus.iter().any(|t| (t - tau).abs() < 1e-12) {
        taus.push(tau);
    }
    taus.sort_by(f64::total_cmp);
    taus
}

/// Coverage of a frontier exploration of each scene from the start of its
/// first scenario, for each budget.
pub fn exploration_coverage(
    work: &Workload,
    budgets: &[f64],
    parallelism: usize,
) -> Result<BTreeMap<String, Vec<f64>>, HarnessError> {
    let mut starts = BTreeMap::new();
    let mut sorted = work.scenarios.clone();
    sorted.sort_by(by_episode);
    for s in &sorted {
        starts.entry(s.scene_id.clone()).or_insert(s.start);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let jobs: Vec<(String, f64)> = starts
        .keys()
        .flat_map(|k| budgets.iter().map(move |b| (k.clone(), *b)))
        .collect();
    let results: Vec<Result<f64, HarnessError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(scene, budget)| {
                let world = work.worlds[scene].clone();
                let mut agent = make_agent(AgentKind::Frontier, 0, Some(world.clone()))?;
                let cfg = ExplorationConfig::new(*budget, world.spec().step_size);
                let (cov, _) = run_exploration(world, starts[scene], &cfg, &mut agent)?;
                Ok(cov.coverage_fraction)
            })
            .collect()
    });
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for ((scene, _), r) in jobs.iter().zip(results) {
        out.entry(scene.clone()).or_default().push(r?);
    }
    Ok(out)
}

/// Navigation results paired with exploration coverage at each budget.
///
/// The built-in agents do not use prior exploration, so navigation runs once
/// and each budget differs only in the attached coverage.
pub fn run_profile(config: &RunConfig, work: &Workload) -> Result<Vec<ProfilePoint>, HarnessError> {
    config.validate()?;
    if config.budgets.is_empty() {
        return Err(HarnessError::Config("no exploration budgets given".into()));
    }
    let batch = run_batch(config, work)?;
    let coverage = exploration_coverage(work, &config.budgets, config.parallelism)?;
    let mut points = Vec::new();
    for (i, &budget_m) in config.budgets.iter().enumerate() {
        let rows: Vec<EpisodeSummary> = batch
            .report
            .rows
            .iter()
            .map(|r| EpisodeSummary {
                coverage: Some(coverage[&r.scene_id][i]),
                ..r.clone()
            })
            .collect();
        points.push(ProfilePoint {
            budget_m,
            report: aux_report(&rows, &report_taus(config.tau))?,
        });
    }
    Ok(points)
}

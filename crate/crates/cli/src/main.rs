use std::ffi::OsString;
use std::fs;
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use navbench::episode::Sensors;
use navbench::gridworld::{
    generate_environment, parse_map, serialize_map, AgentSpec, GenerateParams, NavWorld,
    ObjectRequest,
};
use navbench::harness::remote::run_client;
use navbench::harness::report::{emit_csv, emit_profile, emit_table, read_csv_report};
use navbench::harness::{
    load_workload, report_context, report_taus, run_batch, run_profile, validate_workload,
    AgentSelection, HarnessError, PriorExposure, RunConfig,
};
use navbench::metrics::exploration_profile;
use navbench::scenario::{
    encode_scenarios, sample_scenarios, split_assign, GoalKind, ScenarioConstraints, Split,
    SplitRatios,
};
use navbench::{aux_report, make_agent, AgentKind, Policy};

/// Embodied navigation benchmark: maps, scenarios, evaluation and reports.
///
/// Every flag can also be given in a `--config` file of `key=value` lines
/// using the flag names without dashes; flags on the command line win.
#[derive(Parser)]
#[command(name = "navbench", version, args_override_self = true)]
struct Cli {
    /// Line-oriented key=value file with default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a procedural indoor map.
    GenEnv(GenEnvArgs),
    /// Sample scenarios for every map in a directory and assign splits.
    GenScenarios(GenScenariosArgs),
    /// Re-check a scenario file against its maps.
    Validate(ValidateArgs),
    /// Run an agent over a scenario file and report.
    Evaluate(RunArgs),
    /// Exploration budgets profile (coverage and navigation per budget).
    Explore(RunArgs),
    /// Evaluate an agent that connects over TCP.
    Serve(ServeArgs),
    /// Re-render a CSV report.
    Report(ReportArgs),
    /// Connect a built-in agent to a serving harness.
    Connect(ConnectArgs),
}

#[derive(Args)]
struct GenEnvArgs {
    #[arg(long = "scene-id")]
    scene_id: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    width: f64,
    #[arg(long, default_value_t = 20.0)]
    height: f64,
    #[arg(long, default_value_t = 0.1)]
    resolution: f64,
    #[arg(long, default_value_t = 4)]
    rooms: usize,
    #[arg(long, default_value_t = 0.1)]
    clutter: f64,
    /// Comma-separated region labels, one per room.
    #[arg(long, default_value = "kitchen,living,bedroom,bath")]
    labels: String,
    /// Comma-separated `category:count` object requests.
    #[arg(long, default_value = "mug:3,chair:4")]
    objects: String,
}

#[derive(Args)]
struct GenScenariosArgs {
    #[arg(long)]
    maps: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// point, object or area.
    #[arg(long, default_value = "point")]
    kind: GoalKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train, val and test fractions of scenes.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.15,0.15")]
    ratios: Vec<f64>,
    #[command(flatten)]
    constraints: ConstraintArgs,
}

#[derive(Args)]
struct ConstraintArgs {
    #[arg(long, default_value_t = 0.4)]
    tau: f64,
    #[arg(long = "min-separation", default_value_t = 1.0)]
    min_separation: f64,
    #[arg(long, default_value_t = 1.0)]
    clearance: f64,
}

impl ConstraintArgs {
    fn constraints(&self) -> ScenarioConstraints {
        ScenarioConstraints {
            min_separation: self.min_separation,
            clearance_radius: self.clearance,
            tau: self.tau,
        }
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    maps: PathBuf,
    #[command(flatten)]
    constraints: ConstraintArgs,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    maps: PathBuf,
    /// `<kind>[:<seed>]` (oracle, greedy, random, stumbler, frontier) or
    /// `remote:<host:port>`.
    #[arg(long, default_value = "oracle")]
    agent: AgentSelection,
    #[arg(long = "max-steps", default_value_t = 500)]
    max_steps: u32,
    /// `none`, `gv`, `patch<k>` or `gv,patch<k>`.
    #[arg(long, default_value = "gv")]
    sensors: Sensors,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Comma-separated exploration budgets in meters.
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    table: Option<PathBuf>,
    /// Directory for per-episode trajectory logs.
    #[arg(long)]
    logs: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// train, val or test; all splits when absent.
    #[arg(long)]
    split: Option<Split>,
    /// no-prior, prerecorded or budget-limited.
    #[arg(long)]
    prior: Option<PriorExposure>,
    #[arg(long = "timeout-ms", default_value_t = 10_000)]
    timeout_ms: u64,
    #[command(flatten)]
    constraints: ConstraintArgs,
}

impl RunArgs {
    fn run_config(&self) -> RunConfig {
        let prior = self.prior.unwrap_or(if self.budgets.is_empty() {
            PriorExposure::NoPrior
        } else {
            PriorExposure::BudgetLimited
        });
        RunConfig {
            scenario_file: Some(self.scenarios.clone()),
            map_dir: Some(self.maps.clone()),
            agent: self.agent.clone(),
            tau: self.constraints.tau,
            max_steps: self.max_steps,
            sensors: self.sensors,
            parallelism: self.parallelism,
            budgets: self.budgets.clone(),
            csv_out: self.csv.clone(),
            table_out: self.table.clone(),
            log_dir: self.logs.clone(),
            master_seed: self.seed,
            split: self.split,
            prior_exposure: prior,
            step_timeout: Duration::from_millis(self.timeout_ms),
            validation: self.constraints.constraints(),
        }
    }
}

#[derive(Args)]
struct ServeArgs {
    /// Address to accept the agent connection on.
    #[arg(long)]
    listen: String,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    csv: PathBuf,
    /// table or csv.
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args)]
struct ConnectArgs {
    #[arg(long)]
    endpoint: String,
    #[arg(long, default_value = "oracle")]
    agent: AgentKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Map directory; required by agents that plan on the full map.
    #[arg(long)]
    maps: Option<PathBuf>,
    #[arg(long, default_value = "gv")]
    sensors: Sensors,
}

enum Failure {
    Usage(String),
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<HarnessError>() {
            Ok(HarnessError::Validation(lines)) => Failure::Validation(lines.join("\n")),
            Ok(HarnessError::Config(m)) => Failure::Usage(m),
            Ok(other) => Failure::Runtime(other.into()),
            Err(e) => Failure::Runtime(e),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::from(anyhow::Error::from(e))
    }
}

/// Splices `--key=value` lines from the config file in right after the
/// subcommand, so anything on the command line overrides them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or_else(|| Failure::Usage("--config needs a file".into()))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", Path::new(&path).display())))?;
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Failure::Usage(format!("config line {}: expected key=value", n + 1))
        })?;
        injected.push(OsString::from(format!("--{}={}", k.trim(), v.trim())));
    }
    let at = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(rest.len(), |i| i + 2);
    rest.splice(at..at, injected);
    Ok(rest)
}

fn write_out(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen_env(a: &GenEnvArgs) -> Result<(), Failure> {
    let objects = a
        .objects
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|spec| {
            let (category, count) = spec
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("object request {spec:?}: expected category:count")))?;
            Ok(ObjectRequest {
                category: category.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Failure::Usage(format!("bad object count in {spec:?}")))?,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let params = GenerateParams {
        scene_id: a.scene_id.clone(),
        width_m: a.width,
        height_m: a.height,
        resolution: a.resolution,
        room_count: a.rooms,
        clutter_fraction: a.clutter,
        region_labels: a
            .labels
            .split(',')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect(),
        objects,
        ..GenerateParams::default()
    };
    let env = generate_environment(&params, a.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    write_out(&a.out, &serialize_map(&env))?;
    println!(
        "{}: {} free cells, {} regions, {} objects",
        a.out.display(),
        env.free_cell_count(),
        env.regions().len(),
        env.objects().len()
    );
    Ok(())
}

fn load_maps(dir: &Path) -> anyhow::Result<Vec<Arc<NavWorld>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "navmap"))
        .collect();
    paths.sort();
    let mut worlds = Vec::new();
    for p in paths {
        let scene = p
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| anyhow!("bad map file name {}", p.display()))?
            .to_string();
        let text = fs::read_to_string(&p)?;
        let env = parse_map(&scene, &text).with_context(|| p.display().to_string())?;
        worlds.push(Arc::new(
            NavWorld::new(env, AgentSpec::default()).with_context(|| p.display().to_string())?,
        ));
    }
    Ok(worlds)
}

fn gen_scenarios(a: &GenScenariosArgs) -> Result<(), Failure> {
    let worlds = load_maps(&a.maps)?;
    if worlds.is_empty() {
        return Err(Failure::Usage(format!("no .navmap files in {}", a.maps.display())));
    }
    let ids: Vec<String> = worlds.iter().map(|w| w.scene_id().to_string()).collect();
    let [train, val, test] = a.ratios[..] else {
        return Err(Failure::Usage("--ratios takes three fractions".into()));
    };
    let ratios = SplitRatios {
        train,
        val,
        test,
    };
    let splits = split_assign(&ids, &ratios, a.seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let mut all = Vec::new();
    for w in &worlds {
        let id = w.scene_id();
        let seed = navbench::harness::episode_seed(a.seed, id, u64::MAX);
        let sampled = sample_scenarios(w, a.kind, a.count, &a.constraints.constraints(), seed)
            .map_err(|e| Failure::Validation(format!("{id}: {e}")))?;
        for warning in &sampled.warnings {
            log::warn!("{id}: {warning}");
        }
        all.extend(sampled.scenarios.into_iter().map(|s| s.with_split(splits[id])));
        info!("{id}: {} scenarios ({})", a.count, splits[id]);
    }
    write_out(&a.out, &encode_scenarios(&all))?;
    println!("{}: {} scenarios over {} scenes", a.out.display(), all.len(), ids.len());
    Ok(())
}

fn validate(a: &ValidateArgs) -> Result<(), Failure> {
    let config = RunConfig {
        scenario_file: Some(a.scenarios.clone()),
        map_dir: Some(a.maps.clone()),
        ..RunConfig::default()
    };
    let work = load_workload(&config)?;
    let failures = validate_workload(&work, &a.constraints.constraints());
    if !failures.is_empty() {
        return Err(Failure::Validation(failures.join("\n")));
    }
    println!("{} scenarios ok", work.scenarios.len());
    Ok(())
}

fn evaluate(config: &RunConfig) -> Result<(), Failure> {
    config.validate()?;
    let work = load_workload(config)?;
    let batch = run_batch(config, &work)?;
    let table = emit_table(&batch.report, &report_context(config, batch.privileged, true));
    if let Some(p) = &config.table_out {
        write_out(p, &table)?;
    }
    if let Some(p) = &config.csv_out {
        write_out(p, &emit_csv(&batch.report, &report_context(config, batch.privileged, false)))?;
    }
    print!("{table}");
    Ok(())
}

fn explore(config: &RunConfig) -> Result<(), Failure> {
    config.validate()?;
    if config.budgets.is_empty() {
        return Err(Failure::Usage("explore needs --budgets".into()));
    }
    let work = load_workload(config)?;
    let points = run_profile(config, &work)?;
    let rows = exploration_profile(&[(config.agent.to_string(), points.clone())])
        .map_err(HarnessError::from)?;
    let table = emit_profile(&rows);
    if let Some(p) = &config.table_out {
        write_out(p, &table)?;
    }
    if let (Some(p), Some(last)) = (&config.csv_out, points.last()) {
        write_out(p, &emit_csv(&last.report, &report_context(config, false, false)))?;
    }
    print!("{table}");
    Ok(())
}

fn report(a: &ReportArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.csv).with_context(|| a.csv.display().to_string())?;
    let (rows, ctx) = read_csv_report(&text)
        .map_err(|e| Failure::Validation(format!("{}: {e}", a.csv.display())))?;
    let tau = ctx
        .settings
        .iter()
        .find(|(k, _)| k == "tau")
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(0.4);
    let rep = aux_report(&rows, &report_taus(tau)).map_err(HarnessError::from)?;
    match a.format.as_str() {
        "table" => print!("{}", emit_table(&rep, &ctx)),
        "csv" => print!("{}", emit_csv(&rep, &ctx)),
        other => return Err(Failure::Usage(format!("unknown format {other:?}"))),
    }
    Ok(())
}

fn connect(a: &ConnectArgs) -> Result<(), Failure> {
    let worlds = match &a.maps {
        Some(dir) => load_maps(dir)?,
        None if a.agent.needs_map() => {
            return Err(Failure::Usage(format!("{} needs --maps", a.agent)))
        }
        None => Vec::new(),
    };
    let stream = TcpStream::connect(&a.endpoint).with_context(|| a.endpoint.clone())?;
    let mut setup_error = None;
    let summary = run_client(stream, a.agent.name(), a.sensors, |setup| {
        let world = worlds.iter().find(|w| w.scene_id() == setup.scene_id).cloned();
        let seed = navbench::harness::episode_seed(a.seed, &setup.scene_id, setup.episode_id);
        match make_agent(a.agent, seed, world) {
            Ok(agent) => Box::new(agent) as Box<dyn Policy>,
            Err(e) => {
                setup_error.get_or_insert(e.to_string());
                Box::new(make_agent(AgentKind::Random, seed, None).expect("needs no map"))
            }
        }
    })
    .context("agent session")?;
    if let Some(e) = setup_error {
        return Err(Failure::Usage(e));
    }
    let ok = summary.ends.iter().filter(|e| e.success).count();
    println!("{} episodes, {} successful", summary.ends.len(), ok);
    for (code, text) in &summary.errors {
        eprintln!("server error {code}: {text}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenEnv(a) => gen_env(&a),
        Command::GenScenarios(a) => gen_scenarios(&a),
        Command::Validate(a) => validate(&a),
        Command::Evaluate(a) => evaluate(&a.run_config()),
        Command::Explore(a) => explore(&a.run_config()),
        Command::Serve(a) => {
            let mut config = a.run.run_config();
            config.agent = AgentSelection::Remote { endpoint: a.listen };
            evaluate(&config)
        }
        Command::Report(a) => report(&a),
        Command::Connect(a) => connect(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
        Err(_) => unreachable!("config expansion only fails on usage"),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("validation failed:\n{m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

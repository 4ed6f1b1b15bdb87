//! The `cpomdp` command line: each subcommand reads and writes artifacts in a
//! work directory and records a run manifest next to them.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpomdp_lp::{export_lp, SolverOptions, Status};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{evaluate_gap, lb_alpha_vectors, random_beliefs, ub_at, ub_values, BoundHorizon, LbOptions};
use crate::dynamics::{
    finite_horizon_dynamics, infinite_horizon_dynamics, DynamicsError, GridDynamics, HorizonKind, Terminal,
};
use crate::grid::{build_grid_set, fixed_resolution_grid, GridSet};
use crate::interpolation::WeightCache;
use crate::itlp::{solve_itlp, ItlpError, ItlpOptions, OccupancyPolicy};
use crate::model::{validate_model, ConstraintSpec, DeltaSpec, PomdpModel};
use crate::parser::{parse_constraint_sidecar, parse_pomdp_with, serialize_model, ParseOptions, Severity};
use crate::problems::{data_checksum, instance, instantiate, list_instances, BudgetLevel, HorizonType, InstanceRecord};
use crate::simulator::{simulate_policy, Selection, SimConfig, SimulationReport};

pub const CACHE_ENV: &str = "CPOMDP_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cpomdp", version, about = "Grid-based constrained POMDP toolkit")]
pub struct Cli {
    /// Artifact directory (default: $CPOMDP_CACHE_DIR, else ./cpomdp-out).
    #[arg(long, global = true)]
    pub work: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a model, printing diagnostics.
    Parse(ParseCmd),
    /// Build a belief grid and write it as CSV.
    Grid(GridCmd),
    /// Compute grid transitions and value tables.
    Trans(TransCmd),
    /// Solve the occupancy LP (or MIP) for one budget.
    Solve(SolveCmd),
    /// Lower and upper value bounds and their gap.
    Bounds(BoundsCmd),
    /// Monte Carlo evaluation of the last solved policy.
    Simulate(SimulateCmd),
    /// Solve several budgets in parallel against one set of dynamics.
    Sweep(SweepCmd),
    /// Benchmark tables over the instance catalog.
    Bench(BenchCmd),
    /// List the instance catalog.
    List,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file in the Cassandra POMDP format.
    #[arg(long, conflicts_with = "builtin")]
    pub model: Option<PathBuf>,
    /// Catalog instance (tiger, paint, mcc, query, 4x3, rocksample).
    #[arg(long)]
    pub builtin: Option<String>,
    /// Constraint sidecar with costs, budget, terminal rewards and delta.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Override the discount factor.
    #[arg(long)]
    pub discount: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TerminalArg {
    /// max_a b·w_a
    Best,
    /// The model's terminal rewards.
    Model,
}

#[derive(Debug, Args)]
pub struct HorizonArgs {
    /// Finite horizon length (decision epochs plus the terminal one).
    #[arg(long, conflicts_with = "infinite")]
    pub finite: Option<usize>,
    #[arg(long)]
    pub infinite: bool,
    /// Sup-norm stopping threshold for infinite-horizon sweeps.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
    #[arg(long, value_enum, default_value = "best")]
    pub terminal: TerminalArg,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Number of grid points.
    #[arg(long)]
    pub size: Option<usize>,
    /// Use the full lattice at this resolution instead of `--size`.
    #[arg(long, conflicts_with = "size")]
    pub resolution: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ParseCmd {
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub builtin: Option<String>,
    /// Row-sum tolerance before a distribution is rejected.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Also parse a constraint sidecar against the model.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridCmd {
    #[arg(long)]
    pub states: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output CSV (default: <work>/grid.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
}

#[derive(Debug, Args)]
pub struct SolveCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Recompute dynamics with this horizon instead of loading them.
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// `uniform`, `point K`, or `nearest` (to the start belief).
    #[arg(long, num_args = 1..=2, value_names = ["KIND", "K"])]
    pub delta: Vec<String>,
    /// One action per (epoch, grid point).
    #[arg(long)]
    pub deterministic: bool,
    /// Action (label or index) that must follow a threshold rule; repeatable.
    #[arg(long)]
    pub threshold: Vec<String>,
    /// Order the threshold chain with the state order reversed.
    #[arg(long)]
    pub reversed: bool,
    /// Write the LP in LP text format.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
    /// Branch-and-bound node cap.
    #[arg(long)]
    pub node_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub budget: Option<f64>,
    /// Catalog budget level (small, medium, large) for builtin instances.
    #[arg(long, conflicts_with = "budget")]
    pub level: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundsCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[arg(long)]
    pub lb: bool,
    #[arg(long)]
    pub ub: bool,
    /// Number of sampled evaluation beliefs.
    #[arg(long, default_value_t = 100)]
    pub eval: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip α-vector pruning.
    #[arg(long)]
    pub no_prune: bool,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    pub episodes: usize,
    /// Steps per episode for infinite-horizon policies.
    #[arg(long, default_value_t = 100)]
    pub sim_horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Act with the nearest grid point's distribution instead of interpolating.
    #[arg(long)]
    pub nearest: bool,
    /// Policy file (default: <work>/policy.json).
    #[arg(long)]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub budgets: Vec<f64>,
    #[arg(long, num_args = 1..=2, value_names = ["KIND", "K"])]
    pub delta: Vec<String>,
    #[arg(long)]
    pub deterministic: bool,
    /// Simulated episodes per budget (0 skips simulation).
    #[arg(long, default_value_t = 0)]
    pub episodes: usize,
    #[arg(long, default_value_t = 100)]
    pub sim_horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchTable {
    Bounds,
    Sim,
    All,
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    /// Instances to run (default: every catalog instance except rocksample).
    #[arg(long, value_delimiter = ',')]
    pub instances: Vec<String>,
    #[arg(long, value_enum, default_value = "all")]
    pub table: BenchTable,
    #[arg(long, default_value_t = 10_000)]
    pub episodes: usize,
    #[arg(long, default_value_t = 100)]
    pub eval: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Only finite horizons.
    #[arg(long, conflicts_with = "infinite_only")]
    pub finite_only: bool,
    /// Only infinite horizons.
    #[arg(long)]
    pub infinite_only: bool,
}

/// Everything needed to re-run a command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    /// SHA-256 of every input (files, or the serialized builtin model).
    pub inputs: BTreeMap<String, String>,
    pub grid_fingerprint: Option<String>,
    pub seeds: Vec<u64>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input or missing artifact.
    Diagnostics(String),
    /// A solver or iteration did not produce a usable result.
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Diagnostics(_) => EXIT_DIAGNOSTICS,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Diagnostics(m) | CliError::Solver(m) => f.write_str(m),
        }
    }
}

fn diag(msg: impl Into<String>) -> CliError {
    CliError::Diagnostics(msg.into())
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::NoConvergence { .. } | DynamicsError::Interpolation(_) => CliError::Solver(e.to_string()),
            _ => CliError::Diagnostics(e.to_string()),
        }
    }
}

impl From<ItlpError> for CliError {
    fn from(e: ItlpError) -> Self {
        match e {
            ItlpError::Infeasible | ItlpError::Solver(_) => CliError::Solver(e.to_string()),
            _ => CliError::Diagnostics(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_DIAGNOSTICS } else { EXIT_OK };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn work_dir(cli_work: Option<PathBuf>) -> PathBuf {
    cli_work
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("cpomdp-out"))
}

struct Session {
    work: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

impl Session {
    fn new(work: PathBuf, command: &str, args: Vec<String>) -> CliResult<Self> {
        fs::create_dir_all(&work).map_err(|e| diag(format!("cannot create {}: {e}", work.display())))?;
        Ok(Session {
            work,
            manifest: RunManifest {
                command: command.to_string(),
                args,
                version: env!("CARGO_PKG_VERSION").to_string(),
                ..RunManifest::default()
            },
            clock: Instant::now(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.work.join(name)
    }

    /// Records the time since the last lap under `phase`.
    fn lap(&mut self, phase: &str) {
        let now = Instant::now();
        *self.manifest.timings.entry(phase.to_string()).or_insert(0.0) += (now - self.clock).as_secs_f64();
        self.clock = now;
    }

    fn write(&mut self, path: &Path, contents: &[u8]) -> CliResult<()> {
        fs::write(path, contents).map_err(|e| diag(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    fn finish(mut self) -> CliResult<()> {
        let path = self.path(&format!("{}.manifest.json", self.manifest.command));
        self.manifest.outputs.push(path.display().to_string());
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| diag(format!("cannot write {}: {e}", path.display())))?;
        println!("manifest: {}", path.display());
        Ok(())
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| diag(format!("cannot read {}: {e}", path.display())))
}

/// Model, costs and catalog defaults resolved from `ModelArgs`.
struct Loaded {
    model: PomdpModel,
    record: Option<InstanceRecord>,
    cost: Option<Vec<Vec<f64>>>,
    budget: Option<f64>,
    delta: Option<DeltaSpec>,
}

impl Loaded {
    fn start_belief(&self) -> Vec<f64> {
        if let Some(r) = &self.record {
            return r.initial_belief.probs.clone();
        }
        let n = self.model.num_states();
        self.model.start.clone().unwrap_or_else(|| vec![1.0 / n as f64; n])
    }

    fn model_checksum(&self) -> String {
        data_checksum(&serialize_model(&self.model))
    }
}

fn load_model(args: &ModelArgs, kind: Option<HorizonType>, s: &mut Session) -> CliResult<Loaded> {
    let mut loaded = match (&args.model, &args.builtin) {
        (Some(path), _) => {
            let text = read_text(path)?;
            s.manifest.inputs.insert(path.display().to_string(), data_checksum(&text));
            let (model, warnings) = parse_pomdp_with(&text, &ParseOptions::default()).map_err(|ds| {
                diag(ds.iter().map(|d| format!("{}: {d}", path.display())).collect::<Vec<_>>().join("\n"))
            })?;
            for w in warnings {
                eprintln!("{}: {w}", path.display());
            }
            Loaded { model, record: None, cost: None, budget: None, delta: None }
        }
        (None, Some(name)) => {
            let record = instance(name).map_err(|e| diag(e.to_string()))?;
            let mut model = record.model.clone();
            if let Some(kind) = kind {
                model.discount = match kind {
                    HorizonType::Finite => 1.0,
                    HorizonType::Infinite => 0.9,
                };
            }
            Loaded { cost: Some(record.cost.clone()), model, record: Some(record), budget: None, delta: None }
        }
        (None, None) => return Err(diag("give a model with --model FILE or --builtin NAME")),
    };
    if let Some(path) = &args.sidecar {
        let text = read_text(path)?;
        s.manifest.inputs.insert(path.display().to_string(), data_checksum(&text));
        let side = parse_constraint_sidecar(&text, &loaded.model).map_err(|ds| {
            diag(ds.iter().map(|d| format!("{}: {d}", path.display())).collect::<Vec<_>>().join("\n"))
        })?;
        side.apply_terminal(&mut loaded.model);
        loaded.cost = Some(side.spec.cost);
        loaded.budget = Some(side.spec.budget);
        loaded.delta = Some(side.spec.delta);
    }
    if let Some(d) = args.discount {
        loaded.model.discount = d;
    }
    s.manifest.inputs.insert("model".into(), loaded.model_checksum());
    Ok(loaded)
}

fn horizon_type(h: &HorizonArgs) -> Option<HorizonType> {
    if h.infinite {
        Some(HorizonType::Infinite)
    } else if h.finite.is_some() {
        Some(HorizonType::Finite)
    } else {
        None
    }
}

fn build_grid(args: &GridArgs, n_states: usize, default_size: usize) -> CliResult<GridSet> {
    let g = match (args.resolution, args.size) {
        (Some(r), _) => fixed_resolution_grid(n_states, r),
        (None, size) => build_grid_set(n_states, size.unwrap_or(default_size)),
    };
    g.map_err(|e| diag(e.to_string()))
}

fn default_grid_size(l: &Loaded) -> usize {
    l.record.as_ref().map(|r| r.grid_size).unwrap_or(200)
}

fn terminal_of(h: &HorizonArgs) -> Terminal {
    match h.terminal {
        TerminalArg::Best => Terminal::BestImmediate,
        TerminalArg::Model => Terminal::Model,
    }
}

fn compute_dynamics(model: &PomdpModel, grid: &GridSet, h: &HorizonArgs) -> CliResult<GridDynamics> {
    let cache = WeightCache::new();
    Ok(match (h.finite, h.infinite) {
        (Some(t), _) => finite_horizon_dynamics(model, grid, t, &terminal_of(h), &cache)?,
        (None, true) => infinite_horizon_dynamics(model, grid, h.eps, h.max_sweeps, &cache)?,
        (None, false) => return Err(diag("choose --finite T or --infinite")),
    })
}

/// Dynamics on disk, tied to the model they came from.
#[derive(Debug, Serialize, Deserialize)]
struct DynamicsArtifact {
    model_checksum: String,
    dynamics: GridDynamics,
}

fn save_grid(s: &mut Session, grid: &GridSet) -> CliResult<()> {
    let mut buf = Vec::new();
    grid.write_csv(&mut buf).map_err(|e| diag(e.to_string()))?;
    let path = s.path("grid.csv");
    s.write(&path, &buf)?;
    s.manifest.grid_fingerprint = Some(grid.fingerprint_hex());
    Ok(())
}

fn load_grid(s: &mut Session) -> CliResult<GridSet> {
    let path = s.path("grid.csv");
    let file = fs::File::open(&path)
        .map_err(|e| diag(format!("missing grid file {} ({e}); run `trans` or `solve` with a horizon first", path.display())))?;
    let grid = GridSet::read_csv(file).map_err(|e| diag(format!("{}: {e}", path.display())))?;
    s.manifest.grid_fingerprint = Some(grid.fingerprint_hex());
    Ok(grid)
}

fn save_dynamics(s: &mut Session, loaded: &Loaded, dynamics: &GridDynamics) -> CliResult<()> {
    let art = DynamicsArtifact { model_checksum: loaded.model_checksum(), dynamics: dynamics.clone() };
    let path = s.path("dynamics.json");
    s.write(&path, serde_json::to_string(&art).expect("dynamics serialize").as_bytes())
}

fn load_dynamics(s: &mut Session, loaded: &Loaded) -> CliResult<GridDynamics> {
    let path = s.path("dynamics.json");
    let text = fs::read_to_string(&path).map_err(|e| {
        diag(format!("missing dynamics file {} ({e}); run `trans` first or pass --finite/--infinite", path.display()))
    })?;
    let art: DynamicsArtifact =
        serde_json::from_str(&text).map_err(|e| diag(format!("{}: {e}", path.display())))?;
    if art.model_checksum != loaded.model_checksum() {
        return Err(diag(format!("{} was computed for a different model", path.display())));
    }
    s.manifest.inputs.insert(path.display().to_string(), data_checksum(&text));
    Ok(art.dynamics)
}

/// Grid and dynamics: recomputed when a horizon is given, else loaded from the work dir.
fn grid_and_dynamics(
    s: &mut Session,
    loaded: &Loaded,
    g: &GridArgs,
    h: &HorizonArgs,
) -> CliResult<(GridSet, GridDynamics)> {
    if horizon_type(h).is_some() {
        let grid = build_grid(g, loaded.model.num_states(), default_grid_size(loaded))?;
        save_grid(s, &grid)?;
        s.lap("grid");
        let dynamics = compute_dynamics(&loaded.model, &grid, h)?;
        s.lap("cpu-trans");
        save_dynamics(s, loaded, &dynamics)?;
        Ok((grid, dynamics))
    } else {
        let grid = load_grid(s)?;
        let dynamics = load_dynamics(s, loaded)?;
        if dynamics.grid_fingerprint != grid.fingerprint_hex() {
            return Err(diag("dynamics and grid.csv come from different grids; rerun `trans`"));
        }
        Ok((grid, dynamics))
    }
}

fn parse_delta(words: &[String], loaded: &Loaded, kind: HorizonKind) -> CliResult<DeltaSpec> {
    match words {
        [] => Ok(loaded.delta.clone().unwrap_or_else(|| match (kind, &loaded.record) {
            (HorizonKind::Infinite, Some(_)) => DeltaSpec::Nearest(loaded.start_belief()),
            _ => DeltaSpec::Uniform,
        })),
        [w] if w == "uniform" => Ok(DeltaSpec::Uniform),
        [w] if w == "nearest" => Ok(DeltaSpec::Nearest(loaded.start_belief())),
        [w, k] if w == "point" => {
            k.parse().map(DeltaSpec::Point).map_err(|_| diag(format!("`--delta point` needs a grid index, got `{k}`")))
        }
        other => Err(diag(format!("unknown delta `{}` (uniform | point K | nearest)", other.join(" ")))),
    }
}

fn resolve_budget(b: &BudgetArgs, loaded: &Loaded, kind: HorizonKind) -> CliResult<f64> {
    if let Some(x) = b.budget {
        return Ok(x);
    }
    if let Some(level) = &b.level {
        let level: BudgetLevel = level.parse().map_err(|e: crate::problems::ProblemError| diag(e.to_string()))?;
        let rec = loaded.record.as_ref().ok_or_else(|| diag("--level needs --builtin"))?;
        let ht = match kind {
            HorizonKind::Finite { .. } => HorizonType::Finite,
            HorizonKind::Infinite => HorizonType::Infinite,
        };
        return Ok(rec.budget(level, ht));
    }
    loaded.budget.ok_or_else(|| diag("give --budget B, --level, or a sidecar with `budget:`"))
}

fn require_cost(loaded: &Loaded) -> CliResult<Vec<Vec<f64>>> {
    loaded.cost.clone().ok_or_else(|| diag("costs are needed: pass --sidecar FILE (or use --builtin)"))
}

fn action_index(model: &PomdpModel, s: &str) -> CliResult<usize> {
    model
        .action_index(s)
        .or_else(|| s.parse().ok().filter(|&a: &usize| a < model.num_actions()))
        .ok_or_else(|| diag(format!("unknown action `{s}`")))
}

fn status_error(status: Status) -> CliError {
    CliError::Solver(format!("solver stopped with status {status:?}"))
}

fn execute(cli: Cli, args: Vec<String>) -> CliResult<()> {
    let work = work_dir(cli.work);
    match cli.command {
        Command::Parse(c) => cmd_parse(c),
        Command::List => {
            println!("{:<12}{:>8}{:>9}{:>14}{:>9}", "instance", "states", "actions", "observations", "horizon");
            for s in list_instances() {
                println!("{:<12}{:>8}{:>9}{:>14}{:>9}", s.name, s.states, s.actions, s.observations, s.horizon);
            }
            Ok(())
        }
        Command::Grid(c) => {
            let mut s = Session::new(work, "grid", args)?;
            let grid = build_grid(&c.grid, c.states, 200)?;
            s.lap("grid");
            let mut buf = Vec::new();
            grid.write_csv(&mut buf).map_err(|e| diag(e.to_string()))?;
            let path = c.out.unwrap_or_else(|| s.path("grid.csv"));
            s.write(&path, &buf)?;
            s.manifest.grid_fingerprint = Some(grid.fingerprint_hex());
            print!("{}", String::from_utf8_lossy(&buf));
            println!("# {} points, fingerprint {}", grid.len(), grid.fingerprint_hex());
            s.finish()
        }
        Command::Trans(c) => cmd_trans(c, Session::new(work, "trans", args)?),
        Command::Solve(c) => cmd_solve(c, Session::new(work, "solve", args)?),
        Command::Bounds(c) => cmd_bounds(c, Session::new(work, "bounds", args)?),
        Command::Simulate(c) => cmd_simulate(c, Session::new(work, "simulate", args)?),
        Command::Sweep(c) => cmd_sweep(c, Session::new(work, "sweep", args)?),
        Command::Bench(c) => cmd_bench(c, Session::new(work, "bench", args)?),
    }
}

fn cmd_parse(c: ParseCmd) -> CliResult<()> {
    let (text, label) = match (&c.file, &c.builtin) {
        (Some(p), _) => (read_text(p)?, p.display().to_string()),
        (None, Some(name)) => (serialize_model(&instance(name).map_err(|e| diag(e.to_string()))?.model), name.clone()),
        (None, None) => return Err(diag("give a model file or --builtin NAME")),
    };
    let mut opts = ParseOptions::default();
    if let Some(t) = c.tolerance {
        opts.tolerance = t;
    }
    let (model, warnings) = match parse_pomdp_with(&text, &opts) {
        Ok(ok) => ok,
        Err(ds) => {
            for d in &ds {
                println!("{label}:{d}");
            }
            let errors = ds.iter().filter(|d| d.severity == Severity::Error).count();
            return Err(diag(format!("{label}: {errors} error(s)")));
        }
    };
    for w in &warnings {
        println!("{label}:{w}");
    }
    let issues = validate_model(&model);
    for i in &issues {
        println!("{label}: {i}");
    }
    if !issues.is_empty() {
        return Err(diag(format!("{label}: {} invalid table(s)", issues.len())));
    }
    if let Some(p) = &c.sidecar {
        let side = parse_constraint_sidecar(&read_text(p)?, &model).map_err(|ds| {
            diag(ds.iter().map(|d| format!("{}:{d}", p.display())).collect::<Vec<_>>().join("\n"))
        })?;
        println!("sidecar: budget {} delta {:?}", side.spec.budget, side.spec.delta);
    }
    println!(
        "{label}: ok ({} states, {} actions, {} observations, discount {})",
        model.num_states(),
        model.num_actions(),
        model.num_observations(),
        model.discount
    );
    Ok(())
}

fn cmd_trans(c: TransCmd, mut s: Session) -> CliResult<()> {
    let loaded = load_model(&c.model, horizon_type(&c.horizon), &mut s)?;
    if horizon_type(&c.horizon).is_none() {
        return Err(diag("choose --finite T or --infinite"));
    }
    let (grid, dynamics) = grid_and_dynamics(&mut s, &loaded, &c.grid, &c.horizon)?;
    let mut f = Vec::new();
    dynamics.write_f_csv(&mut f).map_err(|e| diag(e.to_string()))?;
    let path = s.path("f.csv");
    s.write(&path, &f)?;
    let mut v = Vec::new();
    dynamics.write_vhat_csv(&mut v).map_err(|e| diag(e.to_string()))?;
    let path = s.path("vhat.csv");
    s.write(&path, &v)?;
    let b0 = loaded.start_belief();
    let k0 = grid.nearest(&b0);
    println!(
        "grid {} points ({}), {} decision epoch table(s), {} sweep(s), residual {:.3e}",
        grid.len(),
        grid.fingerprint_hex(),
        dynamics.decision_epochs(),
        dynamics.iterations,
        dynamics.residual
    );
    println!("V at grid point nearest the start belief (k={k0}): {:.6}", dynamics.vhat[0][k0]);
    println!("max |row sum - 1| = {:.2e}", dynamics.max_row_error());
    s.finish()
}

fn print_occupancies(policy: &OccupancyPolicy, out: &mut String) {
    for (t, rows) in policy.x.iter().enumerate() {
        for (k, row) in rows.iter().enumerate() {
            for (a, &x) in row.iter().enumerate() {
                if x > 1e-9 {
                    let _ = writeln!(out, "  x[t={t}, k={k}, a={a}] = {x:.6}");
                }
            }
        }
    }
    for (k, &x) in policy.terminal_x.iter().enumerate() {
        if x > 1e-9 {
            let _ = writeln!(out, "  x[terminal, k={k}] = {x:.6}");
        }
    }
}

fn cmd_solve(c: SolveCmd, mut s: Session) -> CliResult<()> {
    let loaded = load_model(&c.model, horizon_type(&c.horizon), &mut s)?;
    let cost = require_cost(&loaded)?;
    let (grid, dynamics) = grid_and_dynamics(&mut s, &loaded, &c.grid, &c.horizon)?;
    let budget = resolve_budget(&c.budget, &loaded, dynamics.kind)?;
    let delta = parse_delta(&c.delta, &loaded, dynamics.kind)?;
    let spec = ConstraintSpec::new(cost, budget).with_delta(delta);
    let mut opts = ItlpOptions { deterministic: c.deterministic, ..ItlpOptions::default() };
    for t in &c.threshold {
        opts.threshold.push((action_index(&loaded.model, t)?, c.reversed));
    }
    if let Some(n) = c.node_limit {
        opts.solver = SolverOptions { node_limit: n, ..SolverOptions::default() };
    }
    let (policy, form, sol) = solve_itlp(&loaded.model, &spec, &grid, &dynamics, &opts)?;
    s.lap("cpu-lp");
    if let Some(path) = &c.export_lp {
        s.write(path, export_lp(&form.lp).as_bytes())?;
    }
    if sol.status != Status::Optimal && sol.status != Status::NodeLimit {
        return Err(status_error(sol.status));
    }
    let path = s.path("policy.json");
    s.write(&path, policy.to_json().as_bytes())?;
    let mut csv = Vec::new();
    policy.write_csv(&mut csv).map_err(|e| diag(e.to_string()))?;
    let path = s.path("policy.csv");
    s.write(&path, &csv)?;
    let mut out = String::new();
    let _ = writeln!(out, "status: {:?}", sol.status);
    let _ = writeln!(out, "objective: {:.6}", sol.objective);
    let _ = writeln!(out, "budget: {budget} used: {:.6}", policy.budget_used);
    let _ = writeln!(out, "variables: {}, rows: {}", form.lp.num_vars(), form.lp.num_constraints());
    let _ = writeln!(out, "occupancies:");
    print_occupancies(&policy, &mut out);
    print!("{out}");
    s.finish()
}

fn bound_horizon(h: &HorizonArgs) -> CliResult<BoundHorizon> {
    match (h.finite, h.infinite) {
        (Some(t), _) => Ok(BoundHorizon::Finite { horizon: t, terminal: terminal_of(h) }),
        (None, true) => Ok(BoundHorizon::Infinite { epsilon: h.eps, max_sweeps: h.max_sweeps }),
        (None, false) => Err(diag("choose --finite T or --infinite")),
    }
}

fn cmd_bounds(c: BoundsCmd, mut s: Session) -> CliResult<()> {
    let loaded = load_model(&c.model, horizon_type(&c.horizon), &mut s)?;
    let horizon = bound_horizon(&c.horizon)?;
    let grid = build_grid(&c.grid, loaded.model.num_states(), default_grid_size(&loaded))?;
    s.manifest.grid_fingerprint = Some(grid.fingerprint_hex());
    s.manifest.seeds.push(c.seed);
    let (want_lb, want_ub) = if !c.lb && !c.ub { (true, true) } else { (c.lb, c.ub) };
    let cache = WeightCache::new();
    let ub = if want_ub {
        let u = ub_values(&loaded.model, &grid, &horizon, &cache).map_err(|e| CliError::Solver(e.to_string()))?;
        s.lap("ub");
        Some(u)
    } else {
        None
    };
    let lb = if want_lb {
        let l = lb_alpha_vectors(&loaded.model, &grid, &horizon, LbOptions { prune: !c.no_prune })
            .map_err(|e| CliError::Solver(e.to_string()))?;
        s.lap("lb");
        Some(l)
    } else {
        None
    };
    let b0 = loaded.start_belief();
    let mut beliefs = vec![b0.clone()];
    beliefs.extend(random_beliefs(loaded.model.num_states(), c.eval, c.seed));
    let pairs: Vec<(f64, f64)> = beliefs
        .par_iter()
        .map(|b| {
            let l = lb.as_ref().map(|l| l.value(b)).unwrap_or(f64::NAN);
            let u = ub.as_ref().map(|u| ub_at(&loaded.model, &grid, u, &cache, b)).unwrap_or(f64::NAN);
            (l, u)
        })
        .collect();
    s.lap("eval");
    println!("start belief: LB {:.4}  UB {:.4}", pairs[0].0, pairs[0].1);
    if let (Some(l), Some(u)) = (&lb, &ub) {
        let report = evaluate_gap(&loaded.model, &grid, l, u, &beliefs[1..], Some(c.seed));
        if let Some(st) = report.stats {
            println!(
                "gap % over {} beliefs: min {:.2} mean {:.2} median {:.2} max {:.2} (excluded {})",
                c.eval, st.min, st.mean, st.median, st.max, report.excluded
            );
        }
        println!("worst LB - UB: {:.3e}", report.max_violation());
    }
    let report = crate::bounds::BoundReport::from_pairs(&pairs, Some(c.seed));
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(|e| diag(e.to_string()))?;
    let path = s.path("bounds.csv");
    s.write(&path, &buf)?;
    s.finish()
}

fn cmd_simulate(c: SimulateCmd, mut s: Session) -> CliResult<()> {
    let path = c.policy.clone().unwrap_or_else(|| s.path("policy.json"));
    let text = fs::read_to_string(&path)
        .map_err(|_| diag(format!("missing policy file {}; run `solve` first", path.display())))?;
    s.manifest.inputs.insert(path.display().to_string(), data_checksum(&text));
    let policy = OccupancyPolicy::from_json(&text).map_err(|e| diag(format!("{}: {e}", path.display())))?;
    let kind = match policy.kind {
        HorizonKind::Finite { .. } => HorizonType::Finite,
        HorizonKind::Infinite => HorizonType::Infinite,
    };
    let mut loaded = load_model(&c.model, Some(kind), &mut s)?;
    loaded.model.discount = policy.discount;
    let grid = load_grid(&mut s)?;
    let spec = ConstraintSpec::new(require_cost(&loaded)?, policy.budget);
    let cfg = SimConfig {
        episodes: c.episodes,
        sim_horizon: c.sim_horizon,
        seed: c.seed,
        selection: if c.nearest { Selection::Nearest } else { Selection::Interpolated },
    };
    s.manifest.seeds.push(c.seed);
    let report = simulate_policy(&loaded.model, &spec, &policy, &grid, &cfg).map_err(|e| diag(e.to_string()))?;
    s.lap("simulate");
    println!("episodes {}  seed {}", report.episodes, report.seed);
    println!("V̂ = {:.4} ± {:.4}   (LP {:.4})", report.v_hat, report.v_se, report.lp_value);
    println!("Ĉ = {:.4} ± {:.4}   budget {}  %-over {:.2}", report.c_hat, report.c_se, report.budget, report.percent_over);
    let mut buf = Vec::new();
    SimulationReport::write_csv(&[("policy".to_string(), report)], &mut buf).map_err(|e| diag(e.to_string()))?;
    let path = s.path("simulate.csv");
    s.write(&path, &buf)?;
    s.finish()
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    budget: f64,
    status: String,
    objective: f64,
    budget_used: f64,
    cpu_lp: f64,
    v_hat: Option<f64>,
    v_se: Option<f64>,
    c_hat: Option<f64>,
    percent_over: Option<f64>,
}

fn cmd_sweep(c: SweepCmd, mut s: Session) -> CliResult<()> {
    let loaded = load_model(&c.model, horizon_type(&c.horizon), &mut s)?;
    let cost = require_cost(&loaded)?;
    let (grid, dynamics) = grid_and_dynamics(&mut s, &loaded, &c.grid, &c.horizon)?;
    let delta = parse_delta(&c.delta, &loaded, dynamics.kind)?;
    if c.episodes > 0 {
        s.manifest.seeds.push(c.seed);
    }
    let rows: Vec<SweepRow> = c
        .budgets
        .par_iter()
        .map(|&budget| {
            let spec = ConstraintSpec::new(cost.clone(), budget).with_delta(delta.clone());
            let opts = ItlpOptions { deterministic: c.deterministic, ..ItlpOptions::default() };
            let t0 = Instant::now();
            let solved = solve_itlp(&loaded.model, &spec, &grid, &dynamics, &opts);
            let cpu_lp = t0.elapsed().as_secs_f64();
            match solved {
                Ok((policy, _, sol)) => {
                    let sim = (c.episodes > 0)
                        .then(|| {
                            let cfg = SimConfig {
                                episodes: c.episodes,
                                sim_horizon: c.sim_horizon,
                                seed: c.seed,
                                selection: Selection::Interpolated,
                            };
                            simulate_policy(&loaded.model, &spec, &policy, &grid, &cfg).ok()
                        })
                        .flatten();
                    SweepRow {
                        budget,
                        status: format!("{:?}", sol.status),
                        objective: sol.objective,
                        budget_used: policy.budget_used,
                        cpu_lp,
                        v_hat: sim.as_ref().map(|r| r.v_hat),
                        v_se: sim.as_ref().map(|r| r.v_se),
                        c_hat: sim.as_ref().map(|r| r.c_hat),
                        percent_over: sim.as_ref().map(|r| r.percent_over),
                    }
                }
                Err(e) => SweepRow {
                    budget,
                    status: e.to_string(),
                    objective: f64::NAN,
                    budget_used: f64::NAN,
                    cpu_lp,
                    v_hat: None,
                    v_se: None,
                    c_hat: None,
                    percent_over: None,
                },
            }
        })
        .collect();
    s.lap("cpu-lp");
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        wr.serialize(r).map_err(|e| diag(e.to_string()))?;
        println!(
            "B={:<10} {:<12} objective {:>12.6} used {:>10.4}{}",
            r.budget,
            r.status,
            r.objective,
            r.budget_used,
            r.v_hat.map(|v| format!("  V̂ {v:.4}  %-over {:.2}", r.percent_over.unwrap_or(0.0))).unwrap_or_default()
        );
    }
    let buf = wr.into_inner().map_err(|e| diag(e.to_string()))?;
    let path = s.path("sweep.csv");
    s.write(&path, &buf)?;
    let failed = rows.iter().any(|r| r.objective.is_nan());
    s.finish()?;
    if failed {
        return Err(CliError::Solver("some budgets failed to solve".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct BenchBoundsRow {
    instance: String,
    horizon: String,
    lb_b0: f64,
    ub_b0: f64,
    gap_min: Option<f64>,
    gap_mean: Option<f64>,
    gap_median: Option<f64>,
    gap_max: Option<f64>,
    excluded: usize,
    cpu_ub: f64,
    cpu_lb: f64,
}

#[derive(Debug, Clone, Serialize)]
struct BenchSimRow {
    instance: String,
    horizon: String,
    level: String,
    budget: f64,
    lp_value: f64,
    v_hat: f64,
    v_se: f64,
    c_hat: f64,
    percent_over: f64,
    cpu_trans: f64,
    cpu_lp: f64,
}

fn cmd_bench(c: BenchCmd, mut s: Session) -> CliResult<()> {
    let names: Vec<String> = if c.instances.is_empty() {
        ["tiger", "paint", "mcc", "query", "4x3"].iter().map(|n| n.to_string()).collect()
    } else {
        c.instances.clone()
    };
    let kinds: Vec<HorizonType> = if c.finite_only {
        vec![HorizonType::Finite]
    } else if c.infinite_only {
        vec![HorizonType::Infinite]
    } else {
        vec![HorizonType::Finite, HorizonType::Infinite]
    };
    s.manifest.seeds.push(c.seed);
    let mut bounds_rows = Vec::new();
    let mut sim_rows = Vec::new();
    for name in &names {
        for &kind in &kinds {
            let inst = instantiate(name, BudgetLevel::Small, kind).map_err(|e| diag(e.to_string()))?;
            let grid = build_grid_set(inst.model.num_states(), inst.grid_size).map_err(|e| diag(e.to_string()))?;
            let label = match kind {
                HorizonType::Finite => format!("finite T={}", inst.horizon.unwrap_or(0)),
                HorizonType::Infinite => "infinite".to_string(),
            };
            let bh = match inst.horizon {
                Some(t) => BoundHorizon::Finite { horizon: t, terminal: inst.terminal.clone() },
                None => BoundHorizon::Infinite { epsilon: 1e-6, max_sweeps: 10_000 },
            };
            let t0 = Instant::now();
            let cache = WeightCache::new();
            let dynamics = ub_values(&inst.model, &grid, &bh, &cache).map_err(|e| CliError::Solver(e.to_string()))?;
            let cpu_trans = t0.elapsed().as_secs_f64();
            if c.table != BenchTable::Sim {
                let t1 = Instant::now();
                let lb = lb_alpha_vectors(&inst.model, &grid, &bh, LbOptions::default())
                    .map_err(|e| CliError::Solver(e.to_string()))?;
                let cpu_lb = t1.elapsed().as_secs_f64();
                let b0 = &inst.initial_belief.probs;
                let beliefs = random_beliefs(inst.model.num_states(), c.eval, c.seed);
                let report = evaluate_gap(&inst.model, &grid, &lb, &dynamics, &beliefs, Some(c.seed));
                let st = report.stats;
                bounds_rows.push(BenchBoundsRow {
                    instance: name.clone(),
                    horizon: label.clone(),
                    lb_b0: lb.value(b0),
                    ub_b0: ub_at(&inst.model, &grid, &dynamics, &cache, b0),
                    gap_min: st.map(|x| x.min),
                    gap_mean: st.map(|x| x.mean),
                    gap_median: st.map(|x| x.median),
                    gap_max: st.map(|x| x.max),
                    excluded: report.excluded,
                    cpu_ub: cpu_trans,
                    cpu_lb,
                });
                let r = bounds_rows.last().expect("just pushed");
                println!(
                    "{:<11} {:<12} LB {:>9.3} UB {:>9.3}  gap mean {:>7} max {:>7}",
                    r.instance,
                    r.horizon,
                    r.lb_b0,
                    r.ub_b0,
                    r.gap_mean.map(|g| format!("{g:.2}")).unwrap_or("-".into()),
                    r.gap_max.map(|g| format!("{g:.2}")).unwrap_or("-".into())
                );
            }
            if c.table != BenchTable::Bounds {
                for level in BudgetLevel::ALL {
                    let inst = instantiate(name, level, kind).map_err(|e| diag(e.to_string()))?;
                    let t1 = Instant::now();
                    let (policy, _, _) =
                        solve_itlp(&inst.model, &inst.spec, &grid, &dynamics, &ItlpOptions::default())?;
                    let cpu_lp = t1.elapsed().as_secs_f64();
                    let cfg = SimConfig { episodes: c.episodes, seed: c.seed, ..SimConfig::default() };
                    let r = simulate_policy(&inst.model, &inst.spec, &policy, &grid, &cfg)
                        .map_err(|e| diag(e.to_string()))?;
                    println!(
                        "{:<11} {:<12} {:<7} B {:>7}  LP {:>9.3}  V̂ {:>9.3} ± {:<6.3} Ĉ {:>8.3}  %-over {:>6.2}",
                        name, label, level, inst.spec.budget, policy.objective, r.v_hat, r.v_se, r.c_hat, r.percent_over
                    );
                    sim_rows.push(BenchSimRow {
                        instance: name.clone(),
                        horizon: label.clone(),
                        level: level.to_string(),
                        budget: inst.spec.budget,
                        lp_value: policy.objective,
                        v_hat: r.v_hat,
                        v_se: r.v_se,
                        c_hat: r.c_hat,
                        percent_over: r.percent_over,
                        cpu_trans,
                        cpu_lp,
                    });
                }
            }
        }
    }
    s.lap("bench");
    if !bounds_rows.is_empty() {
        let buf = to_csv(&bounds_rows)?;
        let path = s.path("bench_bounds.csv");
        s.write(&path, &buf)?;
    }
    if !sim_rows.is_empty() {
        let buf = to_csv(&sim_rows)?;
        let path = s.path("bench_sim.csv");
        s.write(&path, &buf)?;
    }
    s.finish()
}

fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wr.serialize(r).map_err(|e| diag(e.to_string()))?;
    }
    wr.into_inner().map_err(|e| diag(e.to_string()))
}

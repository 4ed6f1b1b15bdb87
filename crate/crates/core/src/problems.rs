//! The six benchmark instances with their costs, budgets, horizons and start beliefs.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::dynamics::Terminal;
use crate::model::{BeliefState, ConstraintSpec, DeltaSpec, ModelError, PomdpModel};
use crate::parser::parse_pomdp;

pub const TIGER_POMDP: &str = include_str!("../data/tiger.pomdp");
pub const PAINT_POMDP: &str = include_str!("../data/paint.pomdp");
pub const MCC_POMDP: &str = include_str!("../data/mcc.pomdp");
pub const QUERY_POMDP: &str = include_str!("../data/query.pomdp");
pub const MAZE_POMDP: &str = include_str!("../data/maze4x3.pomdp");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("unknown instance `{0}` (known: tiger, paint, mcc, query, 4x3, rocksample)")]
    UnknownInstance(String),
    #[error("unknown budget level `{0}` (small, medium, large)")]
    UnknownLevel(String),
    #[error("invalid rocksample geometry: {0}")]
    Geometry(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BudgetLevel {
    Small,
    Medium,
    Large,
}

impl BudgetLevel {
    pub const ALL: [BudgetLevel; 3] = [BudgetLevel::Small, BudgetLevel::Medium, BudgetLevel::Large];

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for BudgetLevel {
    type Err = ProblemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(BudgetLevel::Small),
            "medium" => Ok(BudgetLevel::Medium),
            "large" => Ok(BudgetLevel::Large),
            _ => Err(ProblemError::UnknownLevel(s.to_string())),
        }
    }
}

impl fmt::Display for BudgetLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetLevel::Small => "small",
            BudgetLevel::Medium => "medium",
            BudgetLevel::Large => "large",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizonType {
    Finite,
    Infinite,
}

/// A catalog entry.
#[derive(Debug, Clone)]
pub struct InstanceRecord {
    pub name: &'static str,
    pub model: PomdpModel,
    pub cost: Vec<Vec<f64>>,
    pub finite_budgets: [f64; 3],
    pub infinite_budgets: [f64; 3],
    /// Finite-horizon length (epochs, terminal included).
    pub horizon: usize,
    pub initial_belief: BeliefState,
    pub grid_size: usize,
}

impl InstanceRecord {
    pub fn budget(&self, level: BudgetLevel, kind: HorizonType) -> f64 {
        match kind {
            HorizonType::Finite => self.finite_budgets[level.index()],
            HorizonType::Infinite => self.infinite_budgets[level.index()],
        }
    }

    /// δ is uniform over the grid for finite runs and a point mass near the
    /// initial belief for infinite ones.
    pub fn spec(&self, level: BudgetLevel, kind: HorizonType) -> ConstraintSpec {
        let delta = match kind {
            HorizonType::Finite => DeltaSpec::Uniform,
            HorizonType::Infinite => DeltaSpec::Nearest(self.initial_belief.probs.clone()),
        };
        ConstraintSpec::new(self.cost.clone(), self.budget(level, kind)).with_delta(delta)
    }
}

/// A ready-to-solve configuration.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: &'static str,
    pub model: PomdpModel,
    pub spec: ConstraintSpec,
    /// `None` for infinite horizon.
    pub horizon: Option<usize>,
    pub terminal: Terminal,
    pub initial_belief: BeliefState,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSummary {
    pub name: &'static str,
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizon: usize,
}

fn parsed(text: &str) -> PomdpModel {
    parse_pomdp(text).expect("vendored model parses")
}

fn cached(cell: &'static OnceLock<PomdpModel>, text: &str) -> PomdpModel {
    cell.get_or_init(|| parsed(text)).clone()
}

/// Two doors, a tiger behind one: listen (noisy, 0.85), or open a door and reset.
pub fn tiger() -> PomdpModel {
    static M: OnceLock<PomdpModel> = OnceLock::new();
    cached(&M, TIGER_POMDP)
}

pub fn paint() -> PomdpModel {
    static M: OnceLock<PomdpModel> = OnceLock::new();
    cached(&M, PAINT_POMDP)
}

pub fn mcc() -> PomdpModel {
    static M: OnceLock<PomdpModel> = OnceLock::new();
    cached(&M, MCC_POMDP)
}

pub fn query() -> PomdpModel {
    static M: OnceLock<PomdpModel> = OnceLock::new();
    cached(&M, QUERY_POMDP)
}

pub fn maze4x3() -> PomdpModel {
    static M: OnceLock<PomdpModel> = OnceLock::new();
    cached(&M, MAZE_POMDP)
}

/// Geometry and sensor settings for [`rocksample`].
///
/// Cells are `(x, y)` with `x` growing east and `y` growing south.
#[derive(Debug, Clone, PartialEq)]
pub struct RockSampleConfig {
    pub side: usize,
    pub rocks: Vec<(usize, usize)>,
    pub start: (usize, usize),
    /// Distance at which the sensor's edge over a coin flip halves.
    pub half_distance: f64,
    pub discount: f64,
}

impl Default for RockSampleConfig {
    fn default() -> Self {
        RockSampleConfig { side: 4, rocks: vec![(2, 3), (0, 1), (3, 0)], start: (1, 3), half_distance: 2.0, discount: 0.95 }
    }
}

pub fn rocksample(side: usize, rocks: &[(usize, usize)]) -> Result<PomdpModel, ProblemError> {
    let start = (side.min(2) - 1, side - 1);
    rocksample_with(&RockSampleConfig { side, rocks: rocks.to_vec(), start, ..RockSampleConfig::default() })
}

/// Sensor accuracy at Euclidean distance `d`.
pub fn sensor_accuracy(d: f64, half_distance: f64) -> f64 {
    0.5 + 0.5 * (2f64).powf(-d / half_distance)
}

/// Builds the rocksample model: `side² · 2^rocks` position/rock states plus a
/// terminal state reached by leaving the grid eastward.
pub fn rocksample_with(cfg: &RockSampleConfig) -> Result<PomdpModel, ProblemError> {
    let side = cfg.side;
    if side == 0 {
        return Err(ProblemError::Geometry("side must be at least 1".into()));
    }
    if cfg.rocks.len() > 16 {
        return Err(ProblemError::Geometry("at most 16 rocks".into()));
    }
    for (i, r) in cfg.rocks.iter().enumerate() {
        if r.0 >= side || r.1 >= side {
            return Err(ProblemError::Geometry(format!("rock {i} at {r:?} is outside the grid")));
        }
        if cfg.rocks[..i].contains(r) {
            return Err(ProblemError::Geometry(format!("two rocks at {r:?}")));
        }
    }
    if cfg.start.0 >= side || cfg.start.1 >= side {
        return Err(ProblemError::Geometry(format!("start {:?} is outside the grid", cfg.start)));
    }
    let nr = cfg.rocks.len();
    let masks = 1usize << nr;
    let cells = side * side;
    let terminal = cells * masks;
    let ns = terminal + 1;
    let id = |x: usize, y: usize, m: usize| (y * side + x) * masks + m;

    let mut states = Vec::with_capacity(ns);
    for y in 0..side {
        for x in 0..side {
            for m in 0..masks {
                let bits: String = (0..nr).map(|r| if m >> r & 1 == 1 { 'G' } else { 'B' }).collect();
                states.push(if nr == 0 { format!("x{x}y{y}") } else { format!("x{x}y{y}-{bits}") });
            }
        }
    }
    states.push("terminal".to_string());
    let mut actions: Vec<String> = ["north", "south", "east", "west", "sample"].iter().map(|s| s.to_string()).collect();
    actions.extend((0..nr).map(|r| format!("check-{r}")));
    let observations = vec!["good".to_string(), "bad".to_string()];
    let na = actions.len();

    let mut restart = vec![0.0; ns];
    for m in 0..masks {
        restart[id(cfg.start.0, cfg.start.1, m)] = 1.0 / masks as f64;
    }

    let mut trans = vec![vec![vec![0.0; ns]; ns]; na];
    let mut reward = vec![vec![0.0; ns]; na];
    let mut obs = vec![vec![vec![1.0, 0.0]; ns]; na];
    for a in 0..na {
        trans[a][terminal] = restart.clone();
    }
    for y in 0..side {
        for x in 0..side {
            for m in 0..masks {
                let s = id(x, y, m);
                let moves = [
                    (0, (x, y.saturating_sub(1))),
                    (1, (x, (y + 1).min(side - 1))),
                    (3, (x.saturating_sub(1), y)),
                ];
                for (a, (nx, ny)) in moves {
                    trans[a][s][id(nx, ny, m)] = 1.0;
                    reward[a][s] = -1.0;
                }
                if x + 1 == side {
                    trans[2][s][terminal] = 1.0;
                    reward[2][s] = 5.0;
                } else {
                    trans[2][s][id(x + 1, y, m)] = 1.0;
                    reward[2][s] = -1.0;
                }
                match cfg.rocks.iter().position(|&r| r == (x, y)) {
                    Some(r) if m >> r & 1 == 1 => {
                        trans[4][s][id(x, y, m & !(1 << r))] = 1.0;
                        reward[4][s] = 10.0;
                    }
                    Some(_) => {
                        trans[4][s][s] = 1.0;
                        reward[4][s] = -10.0;
                    }
                    None => {
                        trans[4][s][s] = 1.0;
                        reward[4][s] = -1.0;
                    }
                }
                for (r, &(rx, ry)) in cfg.rocks.iter().enumerate() {
                    let a = 5 + r;
                    trans[a][s][s] = 1.0;
                    let d = ((x as f64 - rx as f64).powi(2) + (y as f64 - ry as f64).powi(2)).sqrt();
                    let acc = sensor_accuracy(d, cfg.half_distance);
                    obs[a][s] = if m >> r & 1 == 1 { vec![acc, 1.0 - acc] } else { vec![1.0 - acc, acc] };
                }
            }
        }
    }
    let mut model = PomdpModel::new(states, actions, observations, trans, obs, reward, cfg.discount)?;
    model.start = Some(restart);
    Ok(model)
}

/// Check actions cost 1, everything else 0.5.
pub fn rocksample_costs(model: &PomdpModel) -> Vec<Vec<f64>> {
    model
        .actions
        .iter()
        .map(|a| vec![if a.starts_with("check") { 1.0 } else { 0.5 }; model.num_states()])
        .collect()
}

fn per_action(model: &PomdpModel, costs: &[(&str, f64)]) -> Vec<Vec<f64>> {
    model
        .actions
        .iter()
        .map(|a| {
            let c = costs.iter().find(|(n, _)| n == a).map(|(_, c)| *c).expect("cost for every action");
            vec![c; model.num_states()]
        })
        .collect()
}

/// Listen 2, either door 1.
pub fn tiger_costs(model: &PomdpModel) -> Vec<Vec<f64>> {
    per_action(model, &[("listen", 2.0), ("open-left", 1.0), ("open-right", 1.0)])
}

/// The state of the 4x3 maze whose actions cost 1: the cell left of the goal.
pub const MAZE_COST_CELL: usize = 2;

fn record(name: &str) -> Result<InstanceRecord, ProblemError> {
    let uniform = |m: &PomdpModel| BeliefState::uniform(m.num_states());
    Ok(match name {
        "tiger" => {
            let model = tiger();
            InstanceRecord {
                name: "tiger",
                cost: tiger_costs(&model),
                initial_belief: uniform(&model),
                model,
                finite_budgets: [21.0, 25.0, 50.0],
                infinite_budgets: [11.5, 14.0, 22.0],
                horizon: 20,
                grid_size: 200,
            }
        }
        "paint" => {
            let model = paint();
            InstanceRecord {
                name: "paint",
                cost: per_action(&model, &[("paint", 1.0), ("inspect", 2.0), ("ship", 1.0), ("reject", 1.0)]),
                initial_belief: uniform(&model),
                model,
                finite_budgets: [19.5, 22.0, 50.0],
                infinite_budgets: [10.5, 12.0, 18.0],
                horizon: 20,
                grid_size: 200,
            }
        }
        "mcc" => {
            let model = mcc();
            let mut cost = per_action(&model, &[("A1", 10.0), ("A2", 10.0), ("AN", 20.0)]);
            let gone = model.state_index("SX").expect("mcc exit state");
            for row in &mut cost {
                row[gone] = 0.0;
            }
            InstanceRecord {
                name: "mcc",
                cost,
                initial_belief: uniform(&model),
                model,
                finite_budgets: [118.0, 123.0, 140.0],
                infinite_budgets: [63.7, 66.0, 75.0],
                horizon: 20,
                grid_size: 200,
            }
        }
        "query" => {
            let model = query();
            InstanceRecord {
                name: "query",
                cost: per_action(&model, &[("query-1", 2.0), ("query-2", 1.0)]),
                initial_belief: uniform(&model),
                model,
                finite_budgets: [4.16, 4.47, 7.0],
                infinite_budgets: [10.32, 11.58, 16.0],
                horizon: 5,
                grid_size: 200,
            }
        }
        "4x3" | "maze4x3" => {
            let model = maze4x3();
            let mut cost = vec![vec![0.0; model.num_states()]; model.num_actions()];
            for row in &mut cost {
                row[MAZE_COST_CELL] = 1.0;
            }
            let b0 = BeliefState::new(model.start.clone().expect("maze declares a start"))?;
            InstanceRecord {
                name: "4x3",
                cost,
                initial_belief: b0,
                model,
                finite_budgets: [0.17, 0.25, 0.6],
                infinite_budgets: [0.4, 0.45, 2.0],
                horizon: 5,
                grid_size: 200,
            }
        }
        "rocksample" => {
            let model = rocksample_with(&RockSampleConfig::default())?;
            let b0 = BeliefState::new(model.start.clone().expect("generator sets a start"))?;
            InstanceRecord {
                name: "rocksample",
                cost: rocksample_costs(&model),
                initial_belief: b0,
                model,
                finite_budgets: [2.0, 2.1, 2.4],
                infinite_budgets: [5.04, 5.64, 6.0],
                horizon: 5,
                grid_size: 1000,
            }
        }
        other => return Err(ProblemError::UnknownInstance(other.to_string())),
    })
}

pub const INSTANCE_NAMES: [&str; 6] = ["tiger", "paint", "mcc", "query", "4x3", "rocksample"];

pub fn instance(name: &str) -> Result<InstanceRecord, ProblemError> {
    record(name)
}

pub fn list_instances() -> Vec<InstanceSummary> {
    INSTANCE_NAMES
        .iter()
        .map(|n| {
            let r = record(n).expect("catalog entry");
            InstanceSummary {
                name: r.name,
                states: r.model.num_states(),
                actions: r.model.num_actions(),
                observations: r.model.num_observations(),
                horizon: r.horizon,
            }
        })
        .collect()
}

/// Model with the benchmark discount (1.0 finite, 0.9 infinite), the budget
/// for `level`, and the terminal rule used for finite runs.
pub fn instantiate(name: &str, level: BudgetLevel, kind: HorizonType) -> Result<Instance, ProblemError> {
    let r = record(name)?;
    let mut model = r.model.clone();
    model.discount = match kind {
        HorizonType::Finite => 1.0,
        HorizonType::Infinite => 0.9,
    };
    Ok(Instance {
        name: r.name,
        spec: r.spec(level, kind),
        horizon: match kind {
            HorizonType::Finite => Some(r.horizon),
            HorizonType::Infinite => None,
        },
        terminal: match kind {
            HorizonType::Finite => Terminal::BestImmediate,
            HorizonType::Infinite => Terminal::Model,
        },
        model,
        initial_belief: r.initial_belief,
        grid_size: r.grid_size,
    })
}

/// SHA-256 of a vendored model file.
pub fn data_checksum(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

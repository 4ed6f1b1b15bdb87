//! Occupancy-measure LPs over the grid MDP, their deterministic and
//! threshold-type restrictions, and policy extraction.

use std::io::Write;

use cpomdp_lp::{
    solve_lp_with, solve_mip_with, ConstrId, LinearProgram, LpError, Relation, Sense, Solution, SolverOptions, Status, VarId,
};
use serde::{Deserialize, Serialize};

use crate::dynamics::{GridDynamics, HorizonKind, Terminal};
use crate::grid::GridSet;
use crate::model::{dot, ConstraintSpec, ModelError, PomdpModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ItlpError {
    #[error("dynamics were built for grid {dynamics}, not {grid}")]
    GridMismatch { dynamics: String, grid: String },
    #[error("expected {expected} dynamics, got {found:?}")]
    HorizonMismatch { expected: &'static str, found: HorizonKind },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("the budget admits no feasible policy")]
    Infeasible,
    #[error("solver stopped with status {0:?}")]
    Solver(Status),
    #[error("deterministic constraints must be added before threshold constraints")]
    MissingDeterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    Stochastic,
    Deterministic,
    Threshold,
}

/// A built LP together with the variable layout needed to read it back.
#[derive(Debug, Clone)]
pub struct Formulation {
    pub lp: LinearProgram,
    pub kind: HorizonKind,
    pub discount: f64,
    /// Decision epochs (finite) or 1 (infinite).
    pub epochs: usize,
    pub n_points: usize,
    pub n_actions: usize,
    /// `x[(t * K + k) * A + a]`
    pub x: Vec<VarId>,
    /// Finite only: terminal-epoch occupancy per grid point.
    pub terminal: Vec<VarId>,
    /// Same layout as `x` once deterministic constraints are added.
    pub theta: Vec<VarId>,
    pub budget_row: Option<ConstrId>,
    pub budget: f64,
    pub delta: Vec<f64>,
    pub policy_kind: PolicyKind,
    /// Big-M used in `x ≤ M θ`.
    pub big_m: f64,
}

impl Formulation {
    pub fn idx(&self, t: usize, k: usize, a: usize) -> usize {
        (t * self.n_points + k) * self.n_actions + a
    }

    pub fn x_var(&self, t: usize, k: usize, a: usize) -> VarId {
        self.x[self.idx(t, k, a)]
    }

    /// Largest absolute residual over the equality (flow) rows.
    pub fn max_flow_residual(&self, values: &[f64]) -> f64 {
        self.lp
            .constraints()
            .iter()
            .filter(|c| c.relation == Relation::Eq)
            .map(|c| (c.activity(values) - c.rhs).abs())
            .fold(0.0, f64::max)
    }
}

fn check_dynamics(grid: &GridSet, dyn_: &GridDynamics, model: &PomdpModel) -> Result<(), ItlpError> {
    if dyn_.grid_fingerprint != grid.fingerprint_hex() {
        return Err(ItlpError::GridMismatch { dynamics: dyn_.grid_fingerprint.clone(), grid: grid.fingerprint_hex() });
    }
    if dyn_.num_actions() != model.num_actions() && dyn_.decision_epochs() > 0 {
        return Err(ItlpError::Dimension(format!(
            "dynamics have {} actions, model {}",
            dyn_.num_actions(),
            model.num_actions()
        )));
    }
    Ok(())
}

fn check_costs(spec: &ConstraintSpec, model: &PomdpModel) -> Result<(), ItlpError> {
    if spec.cost.len() != model.num_actions() || spec.cost.iter().any(|r| r.len() != model.num_states()) {
        return Err(ItlpError::Dimension("cost matrix must be |A| x |S|".into()));
    }
    Ok(())
}

fn add_budget_row(
    lp: &mut LinearProgram,
    spec: &ConstraintSpec,
    terms: Vec<(VarId, f64)>,
) -> Result<Option<ConstrId>, ItlpError> {
    if spec.budget.is_finite() {
        Ok(Some(lp.add_constraint("budget", terms, Relation::Le, spec.budget)?))
    } else {
        Ok(None)
    }
}

/// Finite-horizon dual LP: maximize expected reward plus terminal value over
/// occupancies `x_{t,k,a}` subject to initial, flow and terminal rows and one
/// budget row (undiscounted cost over the decision epochs).
pub fn build_finite_dual(
    model: &PomdpModel,
    spec: &ConstraintSpec,
    grid: &GridSet,
    dyn_: &GridDynamics,
) -> Result<Formulation, ItlpError> {
    let HorizonKind::Finite { .. } = dyn_.kind else {
        return Err(ItlpError::HorizonMismatch { expected: "finite", found: dyn_.kind });
    };
    check_dynamics(grid, dyn_, model)?;
    check_costs(spec, model)?;
    let delta = spec.resolve_delta(&grid.points)?;
    let (nk, na, d) = (grid.len(), model.num_actions(), dyn_.decision_epochs());
    let lambda = dyn_.discount;
    let vterm = dyn_.terminal_values().expect("finite dynamics carry a terminal table");

    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut x = Vec::with_capacity(d * nk * na);
    let mut budget_terms = Vec::with_capacity(d * nk * na);
    for t in 0..d {
        let scale = lambda.powi(t as i32);
        for (k, g) in grid.points.iter().enumerate() {
            for a in 0..na {
                let v = lp.add_var(format!("x_{t}_{k}_{a}"), 0.0, f64::INFINITY, scale * dot(g, &model.reward[a]))?;
                budget_terms.push((v, dot(g, &spec.cost[a])));
                x.push(v);
            }
        }
    }
    let scale = lambda.powi(d as i32);
    let terminal: Vec<VarId> = (0..nk)
        .map(|k| lp.add_var(format!("xT_{k}"), 0.0, f64::INFINITY, scale * vterm[k]))
        .collect::<Result<_, _>>()?;
    let at = |t: usize, k: usize, a: usize| x[(t * nk + k) * na + a];

    if d == 0 {
        for k in 0..nk {
            lp.add_constraint(format!("init_{k}"), [(terminal[k], 1.0)], Relation::Eq, delta[k])?;
        }
    } else {
        for k in 0..nk {
            lp.add_constraint(format!("init_{k}"), (0..na).map(|a| (at(0, k, a), 1.0)), Relation::Eq, delta[k])?;
        }
    }
    for t in 1..=d {
        let mut inflow: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); nk];
        for a in 0..na {
            for k in 0..nk {
                for &(l, p) in dyn_.row(t - 1, a, k) {
                    inflow[l].push((at(t - 1, k, a), -p));
                }
            }
        }
        for (l, mut terms) in inflow.into_iter().enumerate() {
            if t < d {
                terms.extend((0..na).map(|a| (at(t, l, a), 1.0)));
                lp.add_constraint(format!("flow_{t}_{l}"), terms, Relation::Eq, 0.0)?;
            } else {
                terms.push((terminal[l], 1.0));
                lp.add_constraint(format!("term_{l}"), terms, Relation::Eq, 0.0)?;
            }
        }
    }
    let budget_row = add_budget_row(&mut lp, spec, budget_terms)?;
    Ok(Formulation {
        lp,
        kind: dyn_.kind,
        discount: lambda,
        epochs: d,
        n_points: nk,
        n_actions: na,
        x,
        terminal,
        theta: Vec::new(),
        budget_row,
        budget: spec.budget,
        delta,
        policy_kind: PolicyKind::Stochastic,
        big_m: 1.0,
    })
}

/// The value-side LP: minimize Σ_k δ_k u_{0,k} with `u_{t,k} ≥ g·w_a + λ Σ_ℓ f u_{t+1,ℓ}`
/// and the terminal epoch fixed to the grid terminal values.
#[derive(Debug, Clone)]
pub struct PrimalLp {
    pub lp: LinearProgram,
    /// `u[t][k]` for every epoch including the terminal one.
    pub u: Vec<Vec<VarId>>,
}

pub fn build_finite_primal(
    model: &PomdpModel,
    grid: &GridSet,
    dyn_: &GridDynamics,
    delta: &[f64],
) -> Result<PrimalLp, ItlpError> {
    let HorizonKind::Finite { .. } = dyn_.kind else {
        return Err(ItlpError::HorizonMismatch { expected: "finite", found: dyn_.kind });
    };
    check_dynamics(grid, dyn_, model)?;
    if delta.len() != grid.len() {
        return Err(ItlpError::Dimension(format!("delta has {} entries for {} grid points", delta.len(), grid.len())));
    }
    let (nk, na, d) = (grid.len(), model.num_actions(), dyn_.decision_epochs());
    let vterm = dyn_.terminal_values().expect("finite dynamics carry a terminal table");
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut u = Vec::with_capacity(d + 1);
    for t in 0..=d {
        let mut row = Vec::with_capacity(nk);
        for k in 0..nk {
            let obj = if t == 0 { delta[k] } else { 0.0 };
            let v = if t == d {
                lp.add_var(format!("u_{t}_{k}"), vterm[k], vterm[k], obj)?
            } else {
                lp.add_var(format!("u_{t}_{k}"), f64::NEG_INFINITY, f64::INFINITY, obj)?
            };
            row.push(v);
        }
        u.push(row);
    }
    for t in 0..d {
        for (k, g) in grid.points.iter().enumerate() {
            for a in 0..na {
                let mut terms = vec![(u[t][k], 1.0)];
                terms.extend(dyn_.row(t, a, k).iter().map(|&(l, p)| (u[t + 1][l], -dyn_.discount * p)));
                lp.add_constraint(format!("bell_{t}_{k}_{a}"), terms, Relation::Ge, dot(g, &model.reward[a]))?;
            }
        }
    }
    Ok(PrimalLp { lp, u })
}

/// Infinite-horizon dual LP over stationary occupancies `x_{k,a}`.
pub fn build_infinite_dual(
    model: &PomdpModel,
    spec: &ConstraintSpec,
    grid: &GridSet,
    dyn_: &GridDynamics,
) -> Result<Formulation, ItlpError> {
    if dyn_.kind != HorizonKind::Infinite {
        return Err(ItlpError::HorizonMismatch { expected: "infinite", found: dyn_.kind });
    }
    check_dynamics(grid, dyn_, model)?;
    check_costs(spec, model)?;
    let delta = spec.resolve_delta(&grid.points)?;
    let (nk, na) = (grid.len(), model.num_actions());
    let lambda = dyn_.discount;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut x = Vec::with_capacity(nk * na);
    let mut budget_terms = Vec::with_capacity(nk * na);
    for (k, g) in grid.points.iter().enumerate() {
        for a in 0..na {
            let v = lp.add_var(format!("x_{k}_{a}"), 0.0, f64::INFINITY, dot(g, &model.reward[a]))?;
            budget_terms.push((v, dot(g, &spec.cost[a])));
            x.push(v);
        }
    }
    let mut rows: Vec<Vec<(VarId, f64)>> = (0..nk).map(|k| (0..na).map(|a| (x[k * na + a], 1.0)).collect()).collect();
    for a in 0..na {
        for l in 0..nk {
            for &(k, p) in dyn_.row(0, a, l) {
                rows[k].push((x[l * na + a], -lambda * p));
            }
        }
    }
    for (k, terms) in rows.into_iter().enumerate() {
        lp.add_constraint(format!("flow_{k}"), terms, Relation::Eq, delta[k])?;
    }
    let budget_row = add_budget_row(&mut lp, spec, budget_terms)?;
    Ok(Formulation {
        lp,
        kind: HorizonKind::Infinite,
        discount: lambda,
        epochs: 1,
        n_points: nk,
        n_actions: na,
        x,
        terminal: Vec::new(),
        theta: Vec::new(),
        budget_row,
        budget: spec.budget,
        delta,
        policy_kind: PolicyKind::Stochastic,
        big_m: 1.0 / (1.0 - lambda),
    })
}

/// Adds binaries θ with `x ≤ M θ` and one action per (epoch, grid point).
pub fn add_deterministic_constraints(form: &mut Formulation) -> Result<(), ItlpError> {
    if !form.theta.is_empty() {
        return Ok(());
    }
    let m = match form.kind {
        HorizonKind::Finite { .. } => 1.0,
        HorizonKind::Infinite => 1.0 / (1.0 - form.discount),
    };
    form.big_m = m;
    let mut theta = Vec::with_capacity(form.x.len());
    for t in 0..form.epochs {
        for k in 0..form.n_points {
            for a in 0..form.n_actions {
                theta.push(form.lp.add_binary(format!("theta_{t}_{k}_{a}"), 0.0)?);
            }
        }
    }
    for t in 0..form.epochs {
        for k in 0..form.n_points {
            for a in 0..form.n_actions {
                let i = form.idx(t, k, a);
                form.lp.add_constraint(format!("det_{t}_{k}_{a}"), [(form.x[i], 1.0), (theta[i], -m)], Relation::Le, 0.0)?;
            }
            let one: Vec<_> = (0..form.n_actions).map(|a| (theta[form.idx(t, k, a)], 1.0)).collect();
            form.lp.add_constraint(format!("one_{t}_{k}"), one, Relation::Eq, 1.0)?;
        }
    }
    form.theta = theta;
    form.policy_kind = PolicyKind::Deterministic;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominancePair {
    pub dominated: usize,
    pub dominating: usize,
}

fn dominates(hi: &[f64], lo: &[f64], reversed: bool) -> bool {
    let (mut sh, mut sl) = (0.0, 0.0);
    let n = hi.len();
    for step in 0..n {
        let i = if reversed { step } else { n - 1 - step };
        sh += hi[i];
        sl += lo[i];
        if sh < sl - 1e-12 {
            return false;
        }
    }
    true
}

/// Transitive reduction of the stochastic-dominance order on grid points.
/// With `reversed` the state order is flipped.
pub fn dominance_pairs(grid: &GridSet, reversed: bool) -> Vec<DominancePair> {
    let n = grid.len();
    let words = n.div_ceil(64);
    // above[k]: points dominating k; below[l]: points l dominates
    let mut above = vec![vec![0u64; words]; n];
    let mut below = vec![vec![0u64; words]; n];
    for k in 0..n {
        for l in 0..n {
            if k != l && dominates(&grid.points[l], &grid.points[k], reversed) {
                above[k][l / 64] |= 1 << (l % 64);
                below[l][k / 64] |= 1 << (k % 64);
            }
        }
    }
    let mut out = Vec::new();
    for k in 0..n {
        for l in 0..n {
            if above[k][l / 64] >> (l % 64) & 1 == 0 {
                continue;
            }
            let between = above[k].iter().zip(&below[l]).any(|(a, b)| a & b != 0);
            if !between {
                out.push(DominancePair { dominated: k, dominating: l });
            }
        }
    }
    out
}

/// Forces `action` to be chosen on an up-set of the dominance order:
/// `θ_{t,k,a} ≤ θ_{t,ℓ,a}` whenever ℓ dominates k.
pub fn add_threshold_constraints(
    form: &mut Formulation,
    action: usize,
    grid: &GridSet,
    reversed: bool,
) -> Result<Vec<DominancePair>, ItlpError> {
    if form.theta.is_empty() {
        return Err(ItlpError::MissingDeterministic);
    }
    if action >= form.n_actions {
        return Err(ItlpError::Dimension(format!("action {action} out of range")));
    }
    let pairs = dominance_pairs(grid, reversed);
    for t in 0..form.epochs {
        for p in &pairs {
            let lo = form.theta[form.idx(t, p.dominated, action)];
            let hi = form.theta[form.idx(t, p.dominating, action)];
            form.lp.add_constraint(
                format!("thr_{t}_{}_{}_{action}", p.dominated, p.dominating),
                [(lo, 1.0), (hi, -1.0)],
                Relation::Le,
                0.0,
            )?;
        }
    }
    form.policy_kind = PolicyKind::Threshold;
    Ok(pairs)
}

/// Solves as an LP or, when θ is present, as a MIP.
pub fn solve_formulation(form: &Formulation, opts: &SolverOptions) -> Result<Solution, ItlpError> {
    let sol = if form.lp.has_binaries() { solve_mip_with(&form.lp, opts) } else { solve_lp_with(&form.lp, opts)? };
    match sol.status {
        Status::Optimal => Ok(sol),
        Status::NodeLimit if !sol.values.is_empty() => Ok(sol),
        Status::Infeasible => Err(ItlpError::Infeasible),
        s => Err(ItlpError::Solver(s)),
    }
}

/// Grid policy read off an occupancy solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyPolicy {
    pub kind: HorizonKind,
    pub discount: f64,
    pub grid_fingerprint: String,
    pub policy_kind: PolicyKind,
    /// `x[t][k][a]` (one epoch for infinite horizon).
    pub x: Vec<Vec<Vec<f64>>>,
    pub terminal_x: Vec<f64>,
    pub action_dist: Vec<Vec<Vec<f64>>>,
    /// `true` where a point had no occupancy and the greedy action was used.
    pub fallback: Vec<Vec<bool>>,
    pub objective: f64,
    pub budget: f64,
    pub budget_used: f64,
    pub proven_optimal: bool,
    /// Value table used to interpolate off-grid beliefs at each decision epoch.
    pub vhat: Vec<Vec<f64>>,
    pub terminal: Option<Terminal>,
    pub delta: Vec<f64>,
}

const OCCUPIED: f64 = 1e-9;

pub fn extract_policy(
    form: &Formulation,
    sol: &Solution,
    spec: &ConstraintSpec,
    grid: &GridSet,
    dyn_: &GridDynamics,
) -> OccupancyPolicy {
    let (nk, na) = (form.n_points, form.n_actions);
    let mut x = vec![vec![vec![0.0; na]; nk]; form.epochs];
    let mut dist = x.clone();
    let mut fallback = vec![vec![false; nk]; form.epochs];
    let mut used = 0.0;
    for t in 0..form.epochs {
        for k in 0..nk {
            for a in 0..na {
                let v = sol.value(form.x_var(t, k, a)).max(0.0);
                x[t][k][a] = v;
                used += v * dot(&grid.points[k], &spec.cost[a]);
            }
            let total: f64 = x[t][k].iter().sum();
            if total > OCCUPIED {
                for a in 0..na {
                    dist[t][k][a] = x[t][k][a] / total;
                }
            } else {
                dist[t][k][dyn_.greedy[t][k]] = 1.0;
                fallback[t][k] = true;
            }
        }
    }
    let vhat = match dyn_.kind {
        HorizonKind::Finite { .. } => dyn_.vhat[..form.epochs].to_vec(),
        HorizonKind::Infinite => dyn_.vhat.clone(),
    };
    OccupancyPolicy {
        kind: form.kind,
        discount: form.discount,
        grid_fingerprint: grid.fingerprint_hex(),
        policy_kind: form.policy_kind,
        terminal_x: form.terminal.iter().map(|&v| sol.value(v).max(0.0)).collect(),
        x,
        action_dist: dist,
        fallback,
        objective: form.lp.objective_value(&sol.values),
        budget: form.budget,
        budget_used: used,
        proven_optimal: sol.status == Status::Optimal,
        vhat,
        terminal: dyn_.terminal.clone(),
        delta: form.delta.clone(),
    }
}

impl OccupancyPolicy {
    pub fn decision_epochs(&self) -> usize {
        self.action_dist.len()
    }

    /// Distribution row used at decision epoch `t`.
    pub fn epoch(&self, t: usize) -> usize {
        match self.kind {
            HorizonKind::Finite { .. } => t,
            HorizonKind::Infinite => 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// `t,k,a,x,prob` rows with nonzero probability.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "k", "a", "x", "prob"])?;
        for (t, rows) in self.action_dist.iter().enumerate() {
            for (k, row) in rows.iter().enumerate() {
                for (a, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        wr.write_record([
                            t.to_string(),
                            k.to_string(),
                            a.to_string(),
                            self.x[t][k][a].to_string(),
                            p.to_string(),
                        ])?;
                    }
                }
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Which restriction to solve.
#[derive(Debug, Clone, Default)]
pub struct ItlpOptions {
    pub deterministic: bool,
    /// `(action, reversed)` pairs that must follow a threshold rule.
    pub threshold: Vec<(usize, bool)>,
    pub solver: SolverOptions,
}

/// Builds the LP for the dynamics' horizon, applies restrictions, solves and extracts.
pub fn solve_itlp(
    model: &PomdpModel,
    spec: &ConstraintSpec,
    grid: &GridSet,
    dyn_: &GridDynamics,
    opts: &ItlpOptions,
) -> Result<(OccupancyPolicy, Formulation, Solution), ItlpError> {
    let mut form = match dyn_.kind {
        HorizonKind::Finite { .. } => build_finite_dual(model, spec, grid, dyn_)?,
        HorizonKind::Infinite => build_infinite_dual(model, spec, grid, dyn_)?,
    };
    if opts.deterministic || !opts.threshold.is_empty() {
        add_deterministic_constraints(&mut form)?;
    }
    for &(a, rev) in &opts.threshold {
        add_threshold_constraints(&mut form, a, grid, rev)?;
    }
    let sol = solve_formulation(&form, &opts.solver)?;
    let policy = extract_policy(&form, &sol, spec, grid, dyn_);
    Ok((policy, form, sol))
}

//! Grid-to-grid transition tensors and grid value tables, by backward
//! induction (finite horizon) or fixed-point sweeps (infinite horizon).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::GridSet;
use crate::interpolation::{fingerprint_values, InterpolationError, WeightCache};
use crate::model::{dot, PomdpModel};

pub type SparseRow = Vec<(usize, f64)>;

/// Row entries below this are dropped before renormalizing.
pub const ROW_DROP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Interpolation(#[from] InterpolationError),
    #[error("no convergence after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("infinite horizon needs a discount in [0,1), got {0}")]
    Discount(f64),
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("terminal table has {found} entries for a grid of {expected}")]
    TerminalLength { expected: usize, found: usize },
    #[error("model has {model} states but the grid has {grid}")]
    StateMismatch { model: usize, grid: usize },
}

/// Values assigned to grid points at the terminal epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    /// Σ_i g_i R_i with the model's terminal rewards.
    Model,
    /// max_a g·w_a: the reward of one last unconstrained action.
    BestImmediate,
    /// One value per grid point.
    Values(Vec<f64>),
}

impl Terminal {
    pub fn grid_values(&self, model: &PomdpModel, grid: &GridSet) -> Result<Vec<f64>, DynamicsError> {
        match self {
            Terminal::Model => Ok(grid.points.iter().map(|g| dot(g, &model.terminal_reward)).collect()),
            Terminal::BestImmediate => Ok(grid.points.iter().map(|g| model.best_immediate_reward(g)).collect()),
            Terminal::Values(v) if v.len() == grid.len() => Ok(v.clone()),
            Terminal::Values(v) => Err(DynamicsError::TerminalLength { expected: grid.len(), found: v.len() }),
        }
    }

    /// Terminal value at an arbitrary belief, if it is defined off the grid.
    pub fn belief_value(&self, model: &PomdpModel, b: &[f64]) -> Option<f64> {
        match self {
            Terminal::Model => Some(dot(b, &model.terminal_reward)),
            Terminal::BestImmediate => Some(model.best_immediate_reward(b)),
            Terminal::Values(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HorizonKind {
    /// `horizon` epochs: `horizon - 1` decisions, then the terminal epoch.
    Finite { horizon: usize },
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDynamics {
    pub kind: HorizonKind,
    pub discount: f64,
    pub grid_fingerprint: String,
    pub terminal: Option<Terminal>,
    /// `f[epoch][a][k]` as a sparse distribution over next grid points.
    /// One epoch per decision for finite horizons, a single one otherwise.
    pub f: Vec<Vec<Vec<SparseRow>>>,
    /// Finite: one table per epoch including the terminal one. Infinite: one table.
    pub vhat: Vec<Vec<f64>>,
    /// One-step backups `q[epoch][k][a]` that produced `vhat`.
    pub q: Vec<Vec<Vec<f64>>>,
    pub greedy: Vec<Vec<usize>>,
    pub iterations: usize,
    pub residual: f64,
    pub residuals: Vec<f64>,
}

impl GridDynamics {
    pub fn decision_epochs(&self) -> usize {
        self.f.len()
    }

    pub fn num_actions(&self) -> usize {
        self.f.first().map(|e| e.len()).unwrap_or(0)
    }

    pub fn num_points(&self) -> usize {
        self.vhat[0].len()
    }

    pub fn row(&self, t: usize, a: usize, k: usize) -> &SparseRow {
        &self.f[t][a][k]
    }

    pub fn dense(&self, t: usize, a: usize) -> Vec<Vec<f64>> {
        let n = self.num_points();
        self.f[t][a]
            .iter()
            .map(|row| {
                let mut d = vec![0.0; n];
                for &(l, p) in row {
                    d[l] = p;
                }
                d
            })
            .collect()
    }

    /// Value table the interpolation weights were computed against at decision epoch `t`.
    pub fn next_values(&self, t: usize) -> &[f64] {
        match self.kind {
            HorizonKind::Finite { .. } => &self.vhat[t + 1],
            HorizonKind::Infinite => &self.vhat[0],
        }
    }

    pub fn terminal_values(&self) -> Option<&[f64]> {
        match self.kind {
            HorizonKind::Finite { .. } => self.vhat.last().map(|v| v.as_slice()),
            HorizonKind::Infinite => None,
        }
    }

    pub fn max_row_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for epoch in &self.f {
            for rows in epoch {
                for row in rows {
                    let s: f64 = row.iter().map(|(_, p)| p).sum();
                    worst = worst.max((s - 1.0).abs());
                    if row.iter().any(|&(_, p)| p < 0.0) {
                        worst = f64::INFINITY;
                    }
                }
            }
        }
        worst
    }

    /// `t,a,k,l,p` triplets.
    pub fn write_f_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "a", "k", "l", "p"])?;
        for (t, epoch) in self.f.iter().enumerate() {
            for (a, rows) in epoch.iter().enumerate() {
                for (k, row) in rows.iter().enumerate() {
                    for &(l, p) in row {
                        wr.write_record([t.to_string(), a.to_string(), k.to_string(), l.to_string(), p.to_string()])?;
                    }
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// `t,k,value,greedy` rows; the terminal table has an empty action.
    pub fn write_vhat_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "k", "value", "greedy"])?;
        for (t, table) in self.vhat.iter().enumerate() {
            for (k, v) in table.iter().enumerate() {
                let g = self.greedy.get(t).map(|g| g[k].to_string()).unwrap_or_default();
                wr.write_record([t.to_string(), k.to_string(), v.to_string(), g])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Σ_o P(o | b, a) β(b'_o), with zero-probability observations skipped.
pub fn transition_row(
    model: &PomdpModel,
    grid: &GridSet,
    next: &[f64],
    next_fp: u64,
    cache: &WeightCache,
    b: &[f64],
    a: usize,
) -> Result<SparseRow, InterpolationError> {
    let mut acc: Vec<(usize, f64)> = Vec::new();
    for (p, post) in model.branches(b, a) {
        let Some(post) = post else { continue };
        if p <= 0.0 {
            continue;
        }
        let w = cache.weights(grid, next, next_fp, &post)?;
        acc.extend(w.beta.iter().map(|&(l, beta)| (l, p * beta)));
    }
    acc.sort_by_key(|&(l, _)| l);
    let mut row: SparseRow = Vec::with_capacity(acc.len());
    for (l, p) in acc {
        match row.last_mut() {
            Some(last) if last.0 == l => last.1 += p,
            _ => row.push((l, p)),
        }
    }
    row.retain(|&(_, p)| p >= ROW_DROP);
    let s: f64 = row.iter().map(|(_, p)| p).sum();
    for e in &mut row {
        e.1 /= s;
    }
    Ok(row)
}

/// Argmax with ties going to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] + 1e-12 {
            best = a;
        }
    }
    best
}

/// One-step backups `b·w_a + λ Σ_ℓ f_ℓ V(ℓ)` at an arbitrary belief, with the rows used.
pub fn backup(
    model: &PomdpModel,
    grid: &GridSet,
    next: &[f64],
    next_fp: u64,
    cache: &WeightCache,
    b: &[f64],
    discount: f64,
) -> Result<(Vec<SparseRow>, Vec<f64>), InterpolationError> {
    let mut rows = Vec::with_capacity(model.num_actions());
    let mut q = Vec::with_capacity(model.num_actions());
    for a in 0..model.num_actions() {
        let row = transition_row(model, grid, next, next_fp, cache, b, a)?;
        let future: f64 = row.iter().map(|&(l, p)| p * next[l]).sum();
        q.push(model.expected_reward(b, a) + discount * future);
        rows.push(row);
    }
    Ok((rows, q))
}

struct Sweep {
    f: Vec<Vec<SparseRow>>,
    q: Vec<Vec<f64>>,
    values: Vec<f64>,
    greedy: Vec<usize>,
}

fn sweep(model: &PomdpModel, grid: &GridSet, next: &[f64], discount: f64, cache: &WeightCache) -> Result<Sweep, InterpolationError> {
    let fp = fingerprint_values(next);
    let per_point: Vec<(Vec<SparseRow>, Vec<f64>)> = grid
        .points
        .par_iter()
        .map(|g| backup(model, grid, next, fp, cache, g, discount))
        .collect::<Result<_, _>>()?;
    let na = model.num_actions();
    let mut f = vec![Vec::with_capacity(grid.len()); na];
    let mut q = Vec::with_capacity(grid.len());
    for (rows, qk) in per_point {
        for (a, row) in rows.into_iter().enumerate() {
            f[a].push(row);
        }
        q.push(qk);
    }
    let greedy: Vec<usize> = q.iter().map(|qk| argmax(qk)).collect();
    let values = q.iter().zip(&greedy).map(|(qk, &a)| qk[a]).collect();
    Ok(Sweep { f, q, values, greedy })
}

fn check(model: &PomdpModel, grid: &GridSet) -> Result<(), DynamicsError> {
    if model.num_states() != grid.n_states() {
        return Err(DynamicsError::StateMismatch { model: model.num_states(), grid: grid.n_states() });
    }
    Ok(())
}

/// Backward pass over `horizon` epochs using the model's discount.
pub fn finite_horizon_dynamics(
    model: &PomdpModel,
    grid: &GridSet,
    horizon: usize,
    terminal: &Terminal,
    cache: &WeightCache,
) -> Result<GridDynamics, DynamicsError> {
    check(model, grid)?;
    if horizon == 0 {
        return Err(DynamicsError::Horizon);
    }
    let decisions = horizon - 1;
    let mut vhat = vec![Vec::new(); horizon];
    vhat[decisions] = terminal.grid_values(model, grid)?;
    let mut f = vec![Vec::new(); decisions];
    let mut q = vec![Vec::new(); decisions];
    let mut greedy = vec![Vec::new(); decisions];
    for t in (0..decisions).rev() {
        let s = sweep(model, grid, &vhat[t + 1], model.discount, cache)?;
        f[t] = s.f;
        q[t] = s.q;
        greedy[t] = s.greedy;
        vhat[t] = s.values;
    }
    Ok(GridDynamics {
        kind: HorizonKind::Finite { horizon },
        discount: model.discount,
        grid_fingerprint: grid.fingerprint_hex(),
        terminal: Some(terminal.clone()),
        f,
        vhat,
        q,
        greedy,
        iterations: decisions,
        residual: 0.0,
        residuals: Vec::new(),
    })
}

/// Sweeps from V = 0 until the sup-norm change is at most `epsilon`;
/// the returned `f` is the one from the last sweep.
pub fn infinite_horizon_dynamics(
    model: &PomdpModel,
    grid: &GridSet,
    epsilon: f64,
    max_sweeps: usize,
    cache: &WeightCache,
) -> Result<GridDynamics, DynamicsError> {
    check(model, grid)?;
    let lambda = model.discount;
    if !(0.0..1.0).contains(&lambda) {
        return Err(DynamicsError::Discount(lambda));
    }
    let mut v = vec![0.0; grid.len()];
    let mut residuals = Vec::new();
    for n in 1..=max_sweeps {
        let s = sweep(model, grid, &v, lambda, cache)?;
        let r = s.values.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        residuals.push(r);
        v = s.values;
        cache.clear();
        if r <= epsilon {
            return Ok(GridDynamics {
                kind: HorizonKind::Infinite,
                discount: lambda,
                grid_fingerprint: grid.fingerprint_hex(),
                terminal: None,
                f: vec![s.f],
                vhat: vec![v],
                q: vec![s.q],
                greedy: vec![s.greedy],
                iterations: n,
                residual: r,
                residuals,
            });
        }
    }
    Err(DynamicsError::NoConvergence { sweeps: max_sweeps, residual: residuals.last().copied().unwrap_or(f64::NAN) })
}

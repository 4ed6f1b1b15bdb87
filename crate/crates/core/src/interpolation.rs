//! Convex-combination weights that express a belief over the grid at least value.

use std::sync::Arc;

use cpomdp_lp::{solve_lp_with, Backend, LinearProgram, Relation, Sense, SolverOptions, Status};
use dashmap::DashMap;

use crate::grid::GridSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpolationError {
    #[error("no convex combination of grid points reproduces the belief (grid is missing corners?)")]
    Infeasible,
    #[error("value table has {found} entries for a grid of {expected}")]
    Length { expected: usize, found: usize },
    #[error("interpolation LP stopped with status {0:?}")]
    Solver(Status),
}

/// Sparse β: `(grid index, weight)` pairs sorted by index, zero weights omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub beta: Vec<(usize, f64)>,
    pub objective: f64,
}

impl WeightVector {
    pub fn dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(k, w) in &self.beta {
            out[k] = w;
        }
        out
    }

    /// Σ_k β_k g^k
    pub fn reconstruct(&self, grid: &GridSet) -> Vec<f64> {
        let mut out = vec![0.0; grid.n_states()];
        for &(k, w) in &self.beta {
            for (o, g) in out.iter_mut().zip(&grid.points[k]) {
                *o += w * g;
            }
        }
        out
    }
}

/// Cheap order-sensitive fingerprint of a value table.
pub fn fingerprint_values(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn clean(target: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = target.iter().map(|&x| if x < 1e-12 { 0.0 } else { x }).collect();
    let s: f64 = t.iter().sum();
    if s > 0.0 {
        for x in &mut t {
            *x /= s;
        }
    }
    t
}

/// Solves min Σ_k V(g^k) β_k subject to Σ_k β_k g^k = target, β ≥ 0.
///
/// Only grid points whose support lies inside the target's support can carry
/// weight, so the LP is restricted to those columns up front.
pub fn interpolation_weights(grid: &GridSet, values: &[f64], target: &[f64]) -> Result<WeightVector, InterpolationError> {
    if values.len() != grid.len() {
        return Err(InterpolationError::Length { expected: grid.len(), found: values.len() });
    }
    let target = clean(target);
    if let Some(k) = grid.index_of(&target) {
        // corners have exactly one representation
        if grid.support(k).len() == 1 {
            return Ok(WeightVector { beta: vec![(k, 1.0)], objective: values[k] });
        }
    }
    let support: Vec<usize> = (0..target.len()).filter(|&i| target[i] > 0.0).collect();
    let mut inside = vec![false; target.len()];
    for &i in &support {
        inside[i] = true;
    }
    let candidates: Vec<usize> =
        (0..grid.len()).filter(|&k| grid.support(k).iter().all(|&i| inside[i])).collect();

    let mut lp = LinearProgram::new(Sense::Minimize);
    let vars: Vec<_> = candidates
        .iter()
        .map(|&k| lp.add_var("", 0.0, f64::INFINITY, values[k]).expect("finite value table"))
        .collect();
    for &i in &support {
        let terms = candidates
            .iter()
            .zip(&vars)
            .filter(|(&k, _)| grid.points[k][i] != 0.0)
            .map(|(&k, &v)| (v, grid.points[k][i]));
        lp.add_constraint("", terms, Relation::Eq, target[i]).expect("finite grid coordinates");
    }
    let opts = SolverOptions { backend: Some(Backend::DenseSimplex), ..SolverOptions::default() };
    let sol = solve_lp_with(&lp, &opts).expect("no binaries");
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(InterpolationError::Infeasible),
        s => return Err(InterpolationError::Solver(s)),
    }
    let mut beta: Vec<(usize, f64)> = candidates
        .iter()
        .zip(&sol.values)
        .filter(|(_, &w)| w > 1e-14)
        .map(|(&k, &w)| (k, w))
        .collect();
    let s: f64 = beta.iter().map(|(_, w)| w).sum();
    for b in &mut beta {
        b.1 /= s;
    }
    let objective = beta.iter().map(|&(k, w)| w * values[k]).sum();
    Ok(WeightVector { beta, objective })
}

type Key = (u64, u64, Vec<i64>);

/// Concurrent memo of interpolation results keyed by grid, value table and
/// belief (rounded to 1e-12).
#[derive(Debug, Default)]
pub struct WeightCache {
    map: DashMap<Key, Arc<WeightVector>>,
}

impl WeightCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn clear(&self) {
        self.map.clear();
    }

    /// `values_fp` must be [`fingerprint_values`] of `values`.
    pub fn weights(
        &self,
        grid: &GridSet,
        values: &[f64],
        values_fp: u64,
        target: &[f64],
    ) -> Result<Arc<WeightVector>, InterpolationError> {
        let key = (grid.fingerprint(), values_fp, target.iter().map(|x| (x * 1e12).round() as i64).collect());
        if let Some(hit) = self.map.get(&key) {
            return Ok(hit.clone());
        }
        let w = Arc::new(interpolation_weights(grid, values, target)?);
        self.map.entry(key).or_insert_with(|| w.clone());
        Ok(w)
    }
}

//! Unconstrained value bounds: grid backups from above, grid-seeded α-vectors
//! from below, and the gap between them on sampled beliefs.

use std::io::Write;

use cpomdp_lp::{solve_lp_with, Backend, LinearProgram, Relation, Sense, SolverOptions, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    argmax, backup, finite_horizon_dynamics, infinite_horizon_dynamics, DynamicsError, GridDynamics, Terminal,
};
use crate::grid::GridSet;
use crate::interpolation::{fingerprint_values, interpolation_weights, WeightCache};
use crate::model::{dot, PomdpModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("lower bounds need a terminal rule defined off the grid (model rewards or best immediate)")]
    UnsupportedTerminal,
    #[error("no convergence after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundHorizon {
    Finite { horizon: usize, terminal: Terminal },
    Infinite { epsilon: f64, max_sweeps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub coeffs: Vec<f64>,
    /// Action at the root of the plan this vector values; `None` for terminal vectors.
    pub action: Option<usize>,
}

impl AlphaVector {
    pub fn value(&self, b: &[f64]) -> f64 {
        dot(&self.coeffs, b)
    }
}

/// Value of the best vector in `set` at `b`.
pub fn alpha_value(set: &[AlphaVector], b: &[f64]) -> f64 {
    set.iter().map(|a| a.value(b)).fold(f64::NEG_INFINITY, f64::max)
}

/// Upper-bound value tables and greedy actions on the grid.
pub fn ub_values(
    model: &PomdpModel,
    grid: &GridSet,
    horizon: &BoundHorizon,
    cache: &WeightCache,
) -> Result<GridDynamics, BoundsError> {
    Ok(match horizon {
        BoundHorizon::Finite { horizon, terminal } => finite_horizon_dynamics(model, grid, *horizon, terminal, cache)?,
        BoundHorizon::Infinite { epsilon, max_sweeps } => {
            infinite_horizon_dynamics(model, grid, *epsilon, *max_sweeps, cache)?
        }
    })
}

/// Upper bound at an arbitrary belief at the first epoch: one backup against
/// the next grid table, or the interpolated terminal value when no decision remains.
pub fn ub_at(model: &PomdpModel, grid: &GridSet, ub: &GridDynamics, cache: &WeightCache, b: &[f64]) -> f64 {
    if ub.decision_epochs() == 0 {
        let vt = &ub.vhat[0];
        if let Some(v) = ub.terminal.as_ref().and_then(|t| t.belief_value(model, b)) {
            return v;
        }
        return interpolation_weights(grid, vt, b).map(|w| w.objective).unwrap_or(f64::INFINITY);
    }
    let next = ub.next_values(0);
    let (_, q) = backup(model, grid, next, fingerprint_values(next), cache, b, ub.discount).expect("grid contains its corners");
    q[argmax(&q)]
}

/// Sparse transitions `(j, p)` per `(a, i)`.
fn sparse_trans(model: &PomdpModel) -> Vec<Vec<Vec<(usize, f64)>>> {
    model
        .trans
        .iter()
        .map(|ta| ta.iter().map(|row| row.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, &p)| (j, p)).collect()).collect())
        .collect()
}

/// `u[a][o][i] = Σ_j p[a][i][j] z[a][j][o] α[j]` for one α.
fn project(model: &PomdpModel, sp: &[Vec<Vec<(usize, f64)>>], alpha: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let (ns, no) = (model.num_states(), model.num_observations());
    (0..model.num_actions())
        .map(|a| {
            (0..no)
                .map(|o| {
                    (0..ns)
                        .map(|i| sp[a][i].iter().map(|&(j, p)| p * model.obs[a][j][o] * alpha[j]).sum())
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// One point-based backup of `next` at every grid point.
fn point_backups(model: &PomdpModel, grid: &GridSet, next: &[AlphaVector], discount: f64) -> Vec<AlphaVector> {
    let sp = sparse_trans(model);
    let proj: Vec<Vec<Vec<Vec<f64>>>> = next.par_iter().map(|al| project(model, &sp, &al.coeffs)).collect();
    let (na, no, ns) = (model.num_actions(), model.num_observations(), model.num_states());
    grid.points
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let support = grid.support(k);
            let sdot = |v: &[f64]| support.iter().map(|&i| g[i] * v[i]).sum::<f64>();
            let mut best: Option<(f64, AlphaVector)> = None;
            for a in 0..na {
                let mut coeffs = model.reward[a].clone();
                for o in 0..no {
                    let mut pick = 0;
                    let mut pick_v = f64::NEG_INFINITY;
                    for (n, u) in proj.iter().enumerate() {
                        let v = sdot(&u[a][o]);
                        if v > pick_v + 1e-12 {
                            pick = n;
                            pick_v = v;
                        }
                    }
                    let u = &proj[pick][a][o];
                    for i in 0..ns {
                        coeffs[i] += discount * u[i];
                    }
                }
                let v = sdot(&coeffs);
                if best.as_ref().map(|(bv, _)| v > bv + 1e-12).unwrap_or(true) {
                    best = Some((v, AlphaVector { coeffs, action: Some(a) }));
                }
            }
            best.expect("at least one action").1
        })
        .collect()
}

fn dominated_by(lo: &[f64], hi: &[f64]) -> bool {
    lo.iter().zip(hi).all(|(l, h)| l <= h)
}

/// Removes pointwise-dominated vectors, then keeps only vectors that are
/// strictly best at some belief (checked first at grid points, then by LP).
pub fn prune(set: Vec<AlphaVector>, grid: &GridSet) -> Vec<AlphaVector> {
    let mut kept: Vec<AlphaVector> = Vec::with_capacity(set.len());
    'outer: for (n, a) in set.iter().enumerate() {
        for (m, b) in set.iter().enumerate() {
            if m == n {
                continue;
            }
            let same = a.coeffs == b.coeffs;
            if (same && m < n) || (!same && dominated_by(&a.coeffs, &b.coeffs)) {
                continue 'outer;
            }
        }
        kept.push(a.clone());
    }
    let n = kept.len();
    if n <= 1 {
        return kept;
    }
    let mut witnessed = vec![false; n];
    for g in &grid.points {
        let vals: Vec<f64> = kept.iter().map(|a| a.value(g)).collect();
        let best = argmax(&vals);
        if vals.iter().enumerate().all(|(m, &v)| m == best || v < vals[best] - 1e-9) {
            witnessed[best] = true;
        }
    }
    let strict: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| witnessed[i] || has_witness(&kept, i))
        .collect();
    // Vectors tied on their best region have no strict witness against each
    // other, so those are removed one at a time against what is left.
    let mut kept: Vec<Option<AlphaVector>> = kept.into_iter().map(Some).collect();
    for i in (0..n).filter(|&i| !strict[i]) {
        let rest: Vec<AlphaVector> = kept.iter().flatten().cloned().collect();
        let pos = kept[..i].iter().flatten().count();
        if rest.len() > 1 && !has_witness(&rest, pos) {
            kept[i] = None;
        }
    }
    kept.into_iter().flatten().collect()
}

/// max d s.t. b·(α_i − α_m) ≥ d for all m ≠ i, b in the simplex; witness iff d > 1e-9.
fn has_witness(set: &[AlphaVector], i: usize) -> bool {
    let ns = set[i].coeffs.len();
    let mut lp = LinearProgram::new(Sense::Maximize);
    let b: Vec<_> = (0..ns).map(|_| lp.add_var("", 0.0, 1.0, 0.0).expect("valid bounds")).collect();
    let d = lp.add_var("", f64::NEG_INFINITY, f64::INFINITY, 1.0).expect("valid bounds");
    lp.add_constraint("", b.iter().map(|&v| (v, 1.0)), Relation::Eq, 1.0).expect("finite");
    for (m, other) in set.iter().enumerate() {
        if m == i {
            continue;
        }
        let mut terms: Vec<_> = b.iter().enumerate().map(|(s, &v)| (v, set[i].coeffs[s] - other.coeffs[s])).collect();
        terms.push((d, -1.0));
        lp.add_constraint("", terms, Relation::Ge, 0.0).expect("finite");
    }
    let opts = SolverOptions::default();
    let sol = solve_lp_with(&lp, &opts).expect("no binaries");
    match sol.status {
        Status::Optimal => sol.objective > 1e-9,
        _ => {
            let dense = SolverOptions { backend: Some(Backend::DenseSimplex), ..opts };
            let sol = solve_lp_with(&lp, &dense).expect("no binaries");
            sol.status != Status::Optimal || sol.objective > 1e-9
        }
    }
}

/// α-vector sets; finite: one per epoch including the terminal one. Infinite: one set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub sets: Vec<Vec<AlphaVector>>,
    pub sweeps: usize,
    pub residual: f64,
}

impl LowerBound {
    /// Lower bound at the first epoch.
    pub fn value(&self, b: &[f64]) -> f64 {
        alpha_value(&self.sets[0], b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbOptions {
    pub prune: bool,
}

impl Default for LbOptions {
    fn default() -> Self {
        LbOptions { prune: true }
    }
}

fn terminal_set(model: &PomdpModel, terminal: &Terminal) -> Result<Vec<AlphaVector>, BoundsError> {
    match terminal {
        Terminal::Model => Ok(vec![AlphaVector { coeffs: model.terminal_reward.clone(), action: None }]),
        Terminal::BestImmediate => {
            Ok(model.reward.iter().map(|w| AlphaVector { coeffs: w.clone(), action: None }).collect())
        }
        Terminal::Values(_) => Err(BoundsError::UnsupportedTerminal),
    }
}

pub fn lb_alpha_vectors(
    model: &PomdpModel,
    grid: &GridSet,
    horizon: &BoundHorizon,
    opts: LbOptions,
) -> Result<LowerBound, BoundsError> {
    let tidy = |s: Vec<AlphaVector>| if opts.prune { prune(s, grid) } else { s };
    match horizon {
        BoundHorizon::Finite { horizon, terminal } => {
            if *horizon == 0 {
                return Err(DynamicsError::Horizon.into());
            }
            let d = horizon - 1;
            let mut sets = vec![Vec::new(); d + 1];
            sets[d] = terminal_set(model, terminal)?;
            for t in (0..d).rev() {
                sets[t] = tidy(point_backups(model, grid, &sets[t + 1], model.discount));
            }
            Ok(LowerBound { sets, sweeps: d, residual: 0.0 })
        }
        BoundHorizon::Infinite { epsilon, max_sweeps } => {
            let lambda = model.discount;
            if !(0.0..1.0).contains(&lambda) {
                return Err(DynamicsError::Discount(lambda).into());
            }
            let floor = model.reward.iter().flatten().copied().fold(f64::INFINITY, f64::min) / (1.0 - lambda);
            let mut set = vec![AlphaVector { coeffs: vec![floor; model.num_states()], action: None }];
            let mut prev: Vec<f64> = grid.points.iter().map(|g| alpha_value(&set, g)).collect();
            let mut residual = f64::INFINITY;
            for n in 1..=*max_sweeps {
                let mut next = point_backups(model, grid, &set, lambda);
                next.append(&mut set);
                set = tidy(next);
                let cur: Vec<f64> = grid.points.iter().map(|g| alpha_value(&set, g)).collect();
                residual = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                prev = cur;
                if residual <= *epsilon {
                    return Ok(LowerBound { sets: vec![set], sweeps: n, residual });
                }
            }
            Err(BoundsError::NoConvergence { sweeps: *max_sweeps, residual })
        }
    }
}

/// 100·(UB − LB)/LB, undefined when LB ≤ 0.
pub fn gap_percent(lb: f64, ub: f64) -> Option<f64> {
    (lb > 0.0).then(|| 100.0 * (ub - lb) / lb)
}

/// Uniform draws from the belief simplex.
pub fn random_beliefs(n_states: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n_states == 1 {
        return vec![vec![1.0]; count];
    }
    let dir = Dirichlet::new_with_size(1.0, n_states).expect("valid concentration");
    (0..count).map(|_| dir.sample(&mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub lb: f64,
    pub ub: f64,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub min: f64,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub stats: Option<GapStats>,
    /// Beliefs whose LB was not positive.
    pub excluded: usize,
    pub seed: Option<u64>,
}

impl BoundReport {
    pub fn from_pairs(pairs: &[(f64, f64)], seed: Option<u64>) -> Self {
        let rows: Vec<BoundRow> = pairs.iter().map(|&(lb, ub)| BoundRow { lb, ub, gap: gap_percent(lb, ub) }).collect();
        let mut gaps: Vec<f64> = rows.iter().filter_map(|r| r.gap).collect();
        gaps.sort_by(|a, b| a.total_cmp(b));
        let stats = (!gaps.is_empty()).then(|| {
            let n = gaps.len();
            let median = if n % 2 == 1 { gaps[n / 2] } else { 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]) };
            GapStats { min: gaps[0], mean: gaps.iter().sum::<f64>() / n as f64, median, max: gaps[n - 1] }
        });
        BoundReport { excluded: rows.len() - gaps.len(), rows, stats, seed }
    }

    /// Worst `lb - ub` over the evaluated beliefs (≤ 0 when the bounds are ordered).
    pub fn max_violation(&self) -> f64 {
        self.rows.iter().map(|r| r.lb - r.ub).fold(f64::NEG_INFINITY, f64::max)
    }

    /// One line in the layout `lb_b0,ub_b0,min,mean,median,max` when `b0` is given first.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["i", "lb", "ub", "gap"])?;
        for (i, r) in self.rows.iter().enumerate() {
            wr.write_record([i.to_string(), r.lb.to_string(), r.ub.to_string(), r.gap.map(|g| g.to_string()).unwrap_or_default()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Evaluates both bounds on `beliefs`.
pub fn evaluate_gap(
    model: &PomdpModel,
    grid: &GridSet,
    lb: &LowerBound,
    ub: &GridDynamics,
    beliefs: &[Vec<f64>],
    seed: Option<u64>,
) -> BoundReport {
    let cache = WeightCache::new();
    let pairs: Vec<(f64, f64)> =
        beliefs.par_iter().map(|b| (lb.value(b), ub_at(model, grid, ub, &cache, b))).collect();
    BoundReport::from_pairs(&pairs, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid_set, fixed_resolution_grid};
    use crate::problems::tiger;

    #[test]
    fn gap_formula() {
        assert!((gap_percent(18.56, 23.83).unwrap() - 28.394).abs() < 1e-3);
        assert_eq!(gap_percent(-1.0, 2.0), None);
        let r = BoundReport::from_pairs(&[(1.0, 1.0), (2.0, 2.0)], None);
        assert_eq!(r.stats.unwrap().max, 0.0);
    }

    #[test]
    fn tiger_short_horizon_brackets() {
        let m = tiger();
        let g = build_grid_set(2, 20).unwrap();
        let h = BoundHorizon::Finite { horizon: 4, terminal: Terminal::BestImmediate };
        let cache = WeightCache::new();
        let ub = ub_values(&m, &g, &h, &cache).unwrap();
        let lb = lb_alpha_vectors(&m, &g, &h, LbOptions::default()).unwrap();
        let raw = lb_alpha_vectors(&m, &g, &h, LbOptions { prune: false }).unwrap();
        for b in random_beliefs(2, 50, 7) {
            let (l, u) = (lb.value(&b), ub_at(&m, &g, &ub, &cache, &b));
            assert!(l <= u + 1e-6, "{b:?}: {l} > {u}");
            assert!((l - raw.value(&b)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rewards_give_zero_bounds() {
        let mut m = tiger();
        for r in &mut m.reward {
            r.iter_mut().for_each(|x| *x = 0.0);
        }
        let g = fixed_resolution_grid(2, 4).unwrap();
        let h = BoundHorizon::Finite { horizon: 3, terminal: Terminal::Model };
        let ub = ub_values(&m, &g, &h, &WeightCache::new()).unwrap();
        assert!(ub.vhat.iter().flatten().all(|&v| v == 0.0));
        let lb = lb_alpha_vectors(&m, &g, &h, LbOptions::default()).unwrap();
        assert_eq!(lb.value(&[0.3, 0.7]), 0.0);
    }
}

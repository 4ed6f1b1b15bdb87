//! Monte Carlo evaluation of grid policies on the underlying POMDP.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{argmax, HorizonKind, Terminal};
use crate::grid::GridSet;
use crate::interpolation::{fingerprint_values, interpolation_weights, WeightCache};
use crate::itlp::{OccupancyPolicy, PolicyKind};
use crate::model::{dot, ConstraintSpec, PomdpModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("policy was built on grid {policy} but the grid given has fingerprint {grid}")]
    Fingerprint { policy: String, grid: String },
    #[error("budget must be positive, got {0}")]
    Budget(f64),
    #[error("policy has {policy} states/actions but the model has {model}")]
    Shape { policy: usize, model: usize },
}

/// How an off-grid belief picks its action distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Selection {
    /// β-weighted mix of grid distributions against the policy's value table.
    #[default]
    Interpolated,
    /// Distribution of the nearest grid point.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub episodes: usize,
    /// Steps per episode for infinite-horizon policies; finite ones run their own length.
    pub sim_horizon: usize,
    pub seed: u64,
    pub selection: Selection,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { episodes: 10_000, sim_horizon: 100, seed: 0, selection: Selection::Interpolated }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub episodes: usize,
    pub v_hat: f64,
    pub v_se: f64,
    pub c_hat: f64,
    pub c_se: f64,
    pub budget: f64,
    pub percent_over: f64,
    pub lp_value: f64,
    pub seed: u64,
    pub sim_horizon: usize,
}

impl SimulationReport {
    pub fn write_csv<W: Write>(reports: &[(String, SimulationReport)], w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["label", "budget", "v_hat", "v_se", "lp_value", "c_hat", "c_se", "percent_over", "episodes", "seed"])?;
        for (label, r) in reports {
            wr.write_record([
                label.clone(),
                r.budget.to_string(),
                r.v_hat.to_string(),
                r.v_se.to_string(),
                r.lp_value.to_string(),
                r.c_hat.to_string(),
                r.c_se.to_string(),
                r.percent_over.to_string(),
                r.episodes.to_string(),
                r.seed.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// 100·(c − B)/B when the cost exceeds the budget, else 0.
pub fn percent_over(c_hat: f64, budget: f64) -> Result<f64, SimError> {
    if budget.is_nan() || budget <= 0.0 {
        return Err(SimError::Budget(budget));
    }
    Ok(if c_hat > budget { 100.0 * (c_hat - budget) / budget } else { 0.0 })
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

struct Ctx<'a> {
    model: &'a PomdpModel,
    cost: &'a [Vec<f64>],
    policy: &'a OccupancyPolicy,
    grid: &'a GridSet,
    cache: WeightCache,
    value_fps: Vec<u64>,
    cfg: SimConfig,
}

impl Ctx<'_> {
    fn action_probs(&self, t: usize, b: &[f64]) -> Vec<f64> {
        let e = self.policy.epoch(t);
        let dist = &self.policy.action_dist[e];
        if self.cfg.selection == Selection::Interpolated {
            let values = &self.policy.vhat[e];
            if let Ok(w) = self.cache.weights(self.grid, values, self.value_fps[e], b) {
                let mut mix = vec![0.0; self.model.num_actions()];
                for &(k, beta) in &w.beta {
                    for (m, p) in mix.iter_mut().zip(&dist[k]) {
                        *m += beta * p;
                    }
                }
                return mix;
            }
        }
        dist[self.grid.nearest(b)].clone()
    }

    fn terminal_reward(&self, b: &[f64], s: usize) -> f64 {
        match &self.policy.terminal {
            None | Some(Terminal::Model) => self.model.terminal_reward[s],
            Some(Terminal::BestImmediate) => {
                let q: Vec<f64> = self.model.reward.iter().map(|w| dot(b, w)).collect();
                self.model.reward[argmax(&q)][s]
            }
            Some(Terminal::Values(v)) => interpolation_weights(self.grid, v, b).map(|w| w.objective).unwrap_or(0.0),
        }
    }

    fn episode(&self, i: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(i as u64);
        let m = self.model;
        let k0 = sample_index(&self.policy.delta, &mut rng);
        let mut b = self.grid.points[k0].clone();
        let mut s = sample_index(&b, &mut rng);
        let (steps, finite) = match self.policy.kind {
            HorizonKind::Finite { .. } => (self.policy.decision_epochs(), true),
            HorizonKind::Infinite => (self.cfg.sim_horizon, false),
        };
        let lambda = self.policy.discount;
        let (mut reward, mut cost, mut scale) = (0.0, 0.0, 1.0);
        for t in 0..steps {
            let a = sample_index(&self.action_probs(t, &b), &mut rng);
            reward += scale * m.reward[a][s];
            cost += if finite { 1.0 } else { scale } * self.cost[a][s];
            let s2 = sample_index(&m.trans[a][s], &mut rng);
            let o = sample_index(&m.obs[a][s2], &mut rng);
            b = m.belief_update(&b, a, o).expect("sampled observation has positive probability");
            s = s2;
            scale *= lambda;
        }
        if finite {
            reward += scale * self.terminal_reward(&b, s);
        }
        (reward, cost)
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `cfg.episodes` independent episodes; episode `i` draws from stream `i` of `cfg.seed`.
pub fn simulate_policy(
    model: &PomdpModel,
    spec: &ConstraintSpec,
    policy: &OccupancyPolicy,
    grid: &GridSet,
    cfg: &SimConfig,
) -> Result<SimulationReport, SimError> {
    if policy.grid_fingerprint != grid.fingerprint_hex() {
        return Err(SimError::Fingerprint { policy: policy.grid_fingerprint.clone(), grid: grid.fingerprint_hex() });
    }
    if grid.n_states() != model.num_states() {
        return Err(SimError::Shape { policy: grid.n_states(), model: model.num_states() });
    }
    let na = policy.action_dist.first().and_then(|e| e.first()).map(|r| r.len()).unwrap_or(model.num_actions());
    if na != model.num_actions() || spec.cost.len() != na {
        return Err(SimError::Shape { policy: na, model: model.num_actions() });
    }
    let ctx = Ctx {
        model,
        cost: &spec.cost,
        policy,
        grid,
        cache: WeightCache::new(),
        value_fps: policy.vhat.iter().map(|v| fingerprint_values(v)).collect(),
        cfg: *cfg,
    };
    let runs: Vec<(f64, f64)> = (0..cfg.episodes).into_par_iter().map(|i| ctx.episode(i)).collect();
    let (rewards, costs): (Vec<f64>, Vec<f64>) = runs.into_iter().unzip();
    let (v_hat, v_se) = mean_se(&rewards);
    let (c_hat, c_se) = mean_se(&costs);
    Ok(SimulationReport {
        episodes: cfg.episodes,
        v_hat,
        v_se,
        c_hat,
        c_se,
        budget: spec.budget,
        percent_over: if spec.budget.is_finite() { percent_over(c_hat, spec.budget)? } else { 0.0 },
        lp_value: policy.objective,
        seed: cfg.seed,
        sim_horizon: match policy.kind {
            HorizonKind::Finite { .. } => policy.decision_epochs(),
            HorizonKind::Infinite => cfg.sim_horizon,
        },
    })
}

/// A policy that plays `action` everywhere, for baselines and estimator checks.
pub fn constant_policy(
    grid: &GridSet,
    kind: HorizonKind,
    discount: f64,
    num_actions: usize,
    action: usize,
    delta: Vec<f64>,
    terminal: Option<Terminal>,
) -> OccupancyPolicy {
    let epochs = match kind {
        HorizonKind::Finite { horizon } => horizon.saturating_sub(1),
        HorizonKind::Infinite => 1,
    };
    let mut row = vec![0.0; num_actions];
    row[action] = 1.0;
    OccupancyPolicy {
        kind,
        discount,
        grid_fingerprint: grid.fingerprint_hex(),
        policy_kind: PolicyKind::Deterministic,
        x: vec![vec![vec![0.0; num_actions]; grid.len()]; epochs],
        terminal_x: vec![0.0; grid.len()],
        action_dist: vec![vec![row; grid.len()]; epochs],
        fallback: vec![vec![false; grid.len()]; epochs],
        objective: f64::NAN,
        budget: f64::INFINITY,
        budget_used: 0.0,
        proven_optimal: false,
        vhat: vec![vec![0.0; grid.len()]; epochs],
        terminal,
        delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixed_resolution_grid;
    use crate::problems::{tiger, tiger_costs};

    #[test]
    fn percent_over_cases() {
        assert_eq!(percent_over(51.0, 50.0).unwrap(), 2.0);
        assert_eq!(percent_over(49.0, 50.0).unwrap(), 0.0);
        assert_eq!(percent_over(50.0, 50.0).unwrap(), 0.0);
        assert!(percent_over(1.0, 0.0).is_err());
    }

    #[test]
    fn open_left_at_corner_is_deterministic() {
        let m = tiger();
        let g = fixed_resolution_grid(2, 2).unwrap();
        let corner = g.index_of(&[0.0, 1.0]).unwrap();
        let mut delta = vec![0.0; g.len()];
        delta[corner] = 1.0;
        let open_left = m.action_index("open-left").unwrap();
        let p = constant_policy(&g, HorizonKind::Finite { horizon: 2 }, 1.0, 3, open_left, delta, Some(Terminal::Model));
        let spec = ConstraintSpec::new(tiger_costs(&m), 50.0);
        let r = simulate_policy(&m, &spec, &p, &g, &SimConfig { episodes: 10_000, ..SimConfig::default() }).unwrap();
        assert_eq!((r.v_hat, r.c_hat, r.v_se), (10.0, 1.0, 0.0));
    }

    #[test]
    fn fingerprint_mismatch() {
        let m = tiger();
        let g = fixed_resolution_grid(2, 2).unwrap();
        let other = fixed_resolution_grid(2, 3).unwrap();
        let p = constant_policy(&other, HorizonKind::Infinite, 0.9, 3, 0, vec![1.0, 0.0, 0.0, 0.0], None);
        let spec = ConstraintSpec::new(tiger_costs(&m), 5.0);
        assert!(matches!(simulate_policy(&m, &spec, &p, &g, &SimConfig::default()), Err(SimError::Fingerprint { .. })));
    }
}

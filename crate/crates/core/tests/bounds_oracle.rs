use cpomdp::bounds::{alpha_value, lb_alpha_vectors, prune, random_beliefs, ub_at, ub_values, AlphaVector, BoundHorizon, LbOptions};
use cpomdp::dynamics::{finite_horizon_dynamics, Terminal};
use cpomdp::grid::build_grid_set;
use cpomdp::interpolation::WeightCache;
use cpomdp::model::PomdpModel;
use cpomdp::problems::instance;

/// Exact finite-horizon value by expanding the full belief tree, straight from the model tables.
fn tree_value(m: &PomdpModel, b: &[f64], steps: usize) -> f64 {
    let n = m.num_states();
    let immediate = |a: usize| (0..n).map(|s| b[s] * m.reward[a][s]).sum::<f64>();
    if steps == 0 {
        return (0..m.num_actions()).map(immediate).fold(f64::NEG_INFINITY, f64::max);
    }
    (0..m.num_actions())
        .map(|a| {
            let mut future = 0.0;
            for o in 0..m.num_observations() {
                let mut next = vec![0.0; n];
                for (j, nx) in next.iter_mut().enumerate() {
                    let reach: f64 = (0..n).map(|i| b[i] * m.trans[a][i][j]).sum();
                    *nx = reach * m.obs[a][j][o];
                }
                let z: f64 = next.iter().sum();
                if z > 1e-14 {
                    next.iter_mut().for_each(|x| *x /= z);
                    future += z * tree_value(m, &next, steps - 1);
                }
            }
            immediate(a) + m.discount * future
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn finite(name: &str) -> PomdpModel {
    let mut m = instance(name).unwrap().model;
    m.discount = 1.0;
    m
}

#[test]
fn exact_values_lie_between_the_bounds() {
    for (name, horizon) in [("tiger", 4), ("paint", 4), ("mcc", 3), ("query", 3)] {
        let m = finite(name);
        let grid = build_grid_set(m.num_states(), 60).unwrap();
        let h = BoundHorizon::Finite { horizon, terminal: Terminal::BestImmediate };
        let cache = WeightCache::new();
        let ub = ub_values(&m, &grid, &h, &cache).unwrap();
        let lb = lb_alpha_vectors(&m, &grid, &h, LbOptions::default()).unwrap();
        for b in random_beliefs(m.num_states(), 25, 3) {
            let exact = tree_value(&m, &b, horizon - 1);
            let (l, u) = (lb.value(&b), ub_at(&m, &grid, &ub, &cache, &b));
            assert!(l <= exact + 1e-9, "{name}: LB {l} above exact {exact}");
            assert!(exact <= u + 1e-9, "{name}: exact {exact} above UB {u}");
        }
    }
}

#[test]
fn upper_bound_at_grid_points_is_the_grid_value_table() {
    let m = finite("paint");
    let grid = build_grid_set(m.num_states(), 40).unwrap();
    let cache = WeightCache::new();
    let h = BoundHorizon::Finite { horizon: 6, terminal: Terminal::BestImmediate };
    let ub = ub_values(&m, &grid, &h, &cache).unwrap();
    let dynamics = finite_horizon_dynamics(&m, &grid, 6, &Terminal::BestImmediate, &cache).unwrap();
    for (k, p) in grid.points.iter().enumerate() {
        assert!((ub_at(&m, &grid, &ub, &cache, p) - dynamics.vhat[0][k]).abs() < 1e-9);
    }
}

#[test]
fn pruning_keeps_the_upper_envelope() {
    for name in ["tiger", "paint", "4x3"] {
        let m = finite(name);
        let grid = build_grid_set(m.num_states(), m.num_states() + 20).unwrap();
        let h = BoundHorizon::Finite { horizon: 4, terminal: Terminal::BestImmediate };
        let full = lb_alpha_vectors(&m, &grid, &h, LbOptions { prune: false }).unwrap();
        for set in &full.sets {
            let pruned = prune(set.clone(), &grid);
            assert!(pruned.len() <= set.len());
            for b in random_beliefs(m.num_states(), 200, 11) {
                let (a, p) = (alpha_value(set, &b), alpha_value(&pruned, &b));
                assert!((a - p).abs() < 1e-9, "{name}: {a} vs {p}");
            }
        }
    }
}

#[test]
fn prune_drops_a_dominated_vector_and_an_envelope_loser() {
    let grid = build_grid_set(2, 5).unwrap();
    let v = |c: [f64; 2]| AlphaVector { coeffs: c.to_vec(), action: None };
    // [0.4, 0.4] is never above max([1, 0], [0, 1]) on the simplex
    let kept = prune(vec![v([1.0, 0.0]), v([0.0, 1.0]), v([0.5, -1.0]), v([0.4, 0.4])], &grid);
    let mut coeffs: Vec<Vec<f64>> = kept.into_iter().map(|a| a.coeffs).collect();
    coeffs.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert_eq!(coeffs, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
}

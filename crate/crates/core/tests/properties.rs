use cpomdp::bounds::{lb_alpha_vectors, ub_at, ub_values, BoundHorizon, LbOptions};
use cpomdp::dynamics::{finite_horizon_dynamics, Terminal};
use cpomdp::grid::{build_grid_set, fixed_resolution_grid, grid_set_size};
use cpomdp::interpolation::interpolation_weights;
use cpomdp::itlp::{solve_itlp, ItlpError, ItlpOptions};
use cpomdp::model::{ConstraintSpec, PomdpModel};
use cpomdp::simulator::percent_over;
use proptest::prelude::*;

fn normalize(row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    row.into_iter().map(|x| x / s).collect()
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(normalize)
}

fn belief(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|mut v| {
        v[0] += 1e-3;
        normalize(v)
    })
}

/// Random model with 2-3 states, 2-3 actions and 2 observations, plus a cost matrix.
fn small_model() -> impl Strategy<Value = (PomdpModel, Vec<Vec<f64>>)> {
    (2usize..=3, 2usize..=3).prop_flat_map(|(n, a)| {
        let trans = prop::collection::vec(prop::collection::vec(distribution(n), n), a);
        let obs = prop::collection::vec(prop::collection::vec(distribution(2), n), a);
        let reward = prop::collection::vec(prop::collection::vec(-5.0f64..5.0, n), a);
        let cost = prop::collection::vec(prop::collection::vec(0.0f64..2.0, n), a);
        (trans, obs, reward, cost).prop_map(move |(trans, obs, reward, cost)| {
            let m = PomdpModel {
                states: (0..n).map(|i| format!("s{i}")).collect(),
                actions: (0..a).map(|i| format!("a{i}")).collect(),
                observations: vec!["o0".into(), "o1".into()],
                trans,
                obs,
                reward,
                terminal_reward: vec![0.0; n],
                discount: 1.0,
                start: None,
            };
            (m, cost)
        })
    })
}

proptest! {
    #[test]
    fn sized_grids_hold_valid_beliefs(n in 2usize..8, extra in 0usize..40) {
        let g = build_grid_set(n, n + extra).unwrap();
        prop_assert_eq!(g.len(), n + extra);
        for p in &g.points {
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_size_matches_count(n in 2usize..6, rho in 1u32..5) {
        prop_assert_eq!(fixed_resolution_grid(n, rho).unwrap().len() as u128, grid_set_size(n, rho).unwrap());
    }

    #[test]
    fn interpolation_reconstructs_the_target(b in belief(3), values in prop::collection::vec(-10.0f64..10.0, 10)) {
        let g = fixed_resolution_grid(3, 3).unwrap();
        let w = interpolation_weights(&g, &values, &b).unwrap();
        let total: f64 = w.beta.iter().map(|&(_, x)| x).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(w.beta.iter().all(|&(_, x)| x >= -1e-12));
        for (x, y) in w.reconstruct(&g).iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn percent_over_is_never_negative(c in 0.0f64..100.0, budget in 0.01f64..100.0) {
        let p = percent_over(c, budget).unwrap();
        prop_assert!(p >= 0.0);
        prop_assert_eq!(p == 0.0, c <= budget);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transition_rows_are_distributions((m, _) in small_model()) {
        let g = build_grid_set(m.num_states(), m.num_states() + 4).unwrap();
        let d = finite_horizon_dynamics(&m, &g, 4, &Terminal::BestImmediate, &Default::default()).unwrap();
        prop_assert!(d.max_row_error() < 1e-9);
    }

    #[test]
    fn lower_bound_never_exceeds_upper((m, _) in small_model(), b in belief(3)) {
        let b = &b[..m.num_states()];
        let b: Vec<f64> = normalize(b.to_vec());
        let g = build_grid_set(m.num_states(), m.num_states() + 6).unwrap();
        let h = BoundHorizon::Finite { horizon: 4, terminal: Terminal::BestImmediate };
        let cache = Default::default();
        let ub = ub_values(&m, &g, &h, &cache).unwrap();
        let lb = lb_alpha_vectors(&m, &g, &h, LbOptions::default()).unwrap();
        prop_assert!(lb.value(&b) <= ub_at(&m, &g, &ub, &cache, &b) + 1e-9);
    }

    #[test]
    fn relaxation_value_grows_with_budget((m, cost) in small_model(), lo in 0.0f64..3.0, step in 0.0f64..3.0) {
        let g = build_grid_set(m.num_states(), m.num_states() + 3).unwrap();
        let d = finite_horizon_dynamics(&m, &g, 3, &Terminal::BestImmediate, &Default::default()).unwrap();
        let value = |b: f64| match solve_itlp(&m, &ConstraintSpec::new(cost.clone(), b), &g, &d, &ItlpOptions::default()) {
            Ok((p, form, sol)) => {
                assert!(form.max_flow_residual(&sol.values) < 1e-7);
                Some(p.objective)
            }
            Err(ItlpError::Infeasible) => None,
            Err(e) => panic!("{e}"),
        };
        let (a, b) = (value(lo), value(lo + step));
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!(b >= a - 1e-7),
            (Some(_), None) => prop_assert!(false, "feasibility lost as the budget grew"),
            _ => {}
        }
    }
}

//! Stochastic, deterministic and threshold policies on the same budget.

use cpomdp::dynamics::{finite_horizon_dynamics, Terminal};
use cpomdp::grid::fixed_resolution_grid;
use cpomdp::interpolation::WeightCache;
use cpomdp::itlp::{dominance_pairs, solve_itlp, ItlpOptions};
use cpomdp::model::{ConstraintSpec, DeltaSpec};
use cpomdp::problems::{tiger, tiger_costs};

fn main() {
    let mut model = tiger();
    model.discount = 1.0;
    let grid = fixed_resolution_grid(2, 4).unwrap();
    let d = finite_horizon_dynamics(&model, &grid, 4, &Terminal::BestImmediate, &WeightCache::new()).unwrap();
    let spec = ConstraintSpec::new(tiger_costs(&model), 4.5).with_delta(DeltaSpec::Uniform);
    let open_left = model.action_index("open-left").unwrap();
    println!("dominance chain: {:?}", dominance_pairs(&grid, false));

    let variants = [
        ("stochastic", ItlpOptions::default()),
        ("deterministic", ItlpOptions { deterministic: true, ..ItlpOptions::default() }),
        ("threshold", ItlpOptions { threshold: vec![(open_left, false)], ..ItlpOptions::default() }),
    ];
    for (name, opts) in variants {
        match solve_itlp(&model, &spec, &grid, &d, &opts) {
            Ok((policy, _, sol)) => {
                println!("{name:<14} value {:>9.4}  cost {:.3}  status {:?}", policy.objective, policy.budget_used, sol.status);
                let acts: Vec<String> = policy.action_dist[0]
                    .iter()
                    .map(|row| {
                        let a = (0..row.len()).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
                        model.actions[a].clone()
                    })
                    .collect();
                println!("{:<14} first-epoch actions {acts:?}", "");
            }
            Err(e) => println!("{name:<14} {e}"),
        }
    }
}

//! Reward/cost trade-off: one set of dynamics, many budgets solved in parallel.

use cpomdp::dynamics::infinite_horizon_dynamics;
use cpomdp::grid::build_grid_set;
use cpomdp::interpolation::WeightCache;
use cpomdp::itlp::{solve_itlp, ItlpOptions};
use cpomdp::problems::{instantiate, BudgetLevel, HorizonType};
use rayon::prelude::*;

fn main() {
    let inst = instantiate("tiger", BudgetLevel::Small, HorizonType::Infinite).unwrap();
    let grid = build_grid_set(2, inst.grid_size).unwrap();
    let d = infinite_horizon_dynamics(&inst.model, &grid, 1e-6, 10_000, &WeightCache::new()).unwrap();
    let budgets: Vec<f64> = (0..10).map(|i| 10.0 + i as f64).collect();
    let rows: Vec<(f64, String)> = budgets
        .par_iter()
        .map(|&b| {
            let spec = inst.spec.clone().with_budget(b);
            let out = match solve_itlp(&inst.model, &spec, &grid, &d, &ItlpOptions::default()) {
                Ok((p, _, _)) => format!("value {:>9.3}  cost used {:>7.3}", p.objective, p.budget_used),
                Err(e) => e.to_string(),
            };
            (b, out)
        })
        .collect();
    for (b, out) in rows {
        println!("budget {b:>5}: {out}");
    }
}

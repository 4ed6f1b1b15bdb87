//! Upper and lower bounds on the unconstrained value, and their gap.

use cpomdp::bounds::{evaluate_gap, lb_alpha_vectors, random_beliefs, ub_at, ub_values, BoundHorizon, LbOptions};
use cpomdp::dynamics::Terminal;
use cpomdp::grid::build_grid_set;
use cpomdp::interpolation::WeightCache;
use cpomdp::problems::instance;

fn main() {
    for name in ["tiger", "paint", "query"] {
        let rec = instance(name).unwrap();
        let mut model = rec.model.clone();
        model.discount = 1.0;
        let grid = build_grid_set(model.num_states(), 100).unwrap();
        let horizon = BoundHorizon::Finite { horizon: 10, terminal: Terminal::BestImmediate };
        let cache = WeightCache::new();
        let ub = ub_values(&model, &grid, &horizon, &cache).unwrap();
        let lb = lb_alpha_vectors(&model, &grid, &horizon, LbOptions::default()).unwrap();
        let b0 = &rec.initial_belief.probs;
        println!(
            "{name}: start belief LB {:.4} UB {:.4}, {} α-vectors at the first epoch",
            lb.value(b0),
            ub_at(&model, &grid, &ub, &cache, b0),
            lb.sets[0].len()
        );
        let report = evaluate_gap(&model, &grid, &lb, &ub, &random_beliefs(model.num_states(), 50, 1), Some(1));
        if let Some(s) = report.stats {
            println!("  gap % over 50 beliefs: min {:.2} mean {:.2} median {:.2} max {:.2}", s.min, s.mean, s.median, s.max);
        }
    }
}

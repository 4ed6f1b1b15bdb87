//! Value-aware interpolation weights for an off-grid belief.

use cpomdp::grid::fixed_resolution_grid;
use cpomdp::interpolation::{interpolation_weights, WeightCache};

fn main() {
    let grid = fixed_resolution_grid(3, 2).unwrap();
    let b = [0.2, 0.3, 0.5];
    // two value tables give two different convex combinations of the same belief
    let flat = vec![0.0; grid.len()];
    let tilted: Vec<f64> = grid.points.iter().map(|p| 10.0 * p[0] - 5.0 * p[1] * p[2]).collect();
    for (name, values) in [("flat", &flat), ("tilted", &tilted)] {
        let w = interpolation_weights(&grid, values, &b).unwrap();
        println!("{name}: objective {:.4}", w.objective);
        for &(k, beta) in &w.beta {
            println!("  β = {beta:.4} on {:?}", grid.points[k]);
        }
        println!("  reconstructs {:?}", w.reconstruct(&grid));
    }

    let cache = WeightCache::new();
    let fp = cpomdp::interpolation::fingerprint_values(&tilted);
    cache.weights(&grid, &tilted, fp, &b).unwrap();
    cache.weights(&grid, &tilted, fp, &b).unwrap();
    println!("cache holds {} entry after two identical lookups", cache.len());
}

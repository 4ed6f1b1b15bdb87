//! Grid transition rows and value tables for tiger on three grid points.

use cpomdp::dynamics::{finite_horizon_dynamics, infinite_horizon_dynamics, Terminal};
use cpomdp::grid::fixed_resolution_grid;
use cpomdp::interpolation::WeightCache;
use cpomdp::problems::tiger;

fn main() {
    let mut model = tiger();
    let grid = fixed_resolution_grid(2, 2).unwrap();
    let cache = WeightCache::new();

    let d = finite_horizon_dynamics(&model, &grid, 3, &Terminal::BestImmediate, &cache).unwrap();
    println!("finite horizon 3, grid {:?}", grid.points);
    for (t, table) in d.vhat.iter().enumerate() {
        println!("  V[{t}] = {table:?}");
    }
    for (a, name) in model.actions.iter().enumerate() {
        println!("  f at the last decision, {name}:");
        for row in d.dense(1, a) {
            println!("    {row:?}");
        }
    }

    model.discount = 0.9;
    let d = infinite_horizon_dynamics(&model, &grid, 1e-8, 10_000, &cache).unwrap();
    println!("\ninfinite horizon, discount 0.9: {} sweeps, residual {:.1e}", d.iterations, d.residual);
    println!("  V = {:?}", d.vhat[0]);
    println!("  greedy actions {:?}", d.greedy[0]);
}

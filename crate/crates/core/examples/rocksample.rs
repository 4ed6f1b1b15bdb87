//! Rocksample at 1000 grid points: transitions, LP and simulation.

use std::time::Instant;

use cpomdp::dynamics::finite_horizon_dynamics;
use cpomdp::grid::build_grid_set;
use cpomdp::interpolation::WeightCache;
use cpomdp::itlp::{solve_itlp, ItlpOptions};
use cpomdp::problems::{instantiate, BudgetLevel, HorizonType};
use cpomdp::simulator::{simulate_policy, SimConfig};

fn main() {
    let inst = instantiate("rocksample", BudgetLevel::Large, HorizonType::Finite).unwrap();
    println!(
        "{} states, {} actions, {} observations",
        inst.model.num_states(),
        inst.model.num_actions(),
        inst.model.num_observations()
    );
    let t = Instant::now();
    let grid = build_grid_set(inst.model.num_states(), inst.grid_size).unwrap();
    let d = finite_horizon_dynamics(&inst.model, &grid, 5, &inst.terminal, &WeightCache::new()).unwrap();
    println!("transitions for |G|={} in {:.2?}", grid.len(), t.elapsed());
    let t = Instant::now();
    let (policy, form, sol) = solve_itlp(&inst.model, &inst.spec, &grid, &d, &ItlpOptions::default()).unwrap();
    println!("LP with {} variables solved in {:.2?} ({:?}): {:.4}", form.lp.num_vars(), t.elapsed(), sol.backend, sol.objective);
    let r = simulate_policy(&inst.model, &inst.spec, &policy, &grid, &SimConfig::default()).unwrap();
    println!("simulated V̂ {:.3} ± {:.3}, Ĉ {:.3} vs budget {}, {:.2}% over", r.v_hat, r.v_se, r.c_hat, r.budget, r.percent_over);
}

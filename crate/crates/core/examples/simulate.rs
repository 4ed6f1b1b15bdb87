//! Solve a budgeted policy and estimate its reward and cost by simulation.

use cpomdp::dynamics::finite_horizon_dynamics;
use cpomdp::grid::build_grid_set;
use cpomdp::interpolation::WeightCache;
use cpomdp::itlp::{solve_itlp, ItlpOptions};
use cpomdp::problems::{instantiate, BudgetLevel, HorizonType};
use cpomdp::simulator::{simulate_policy, SimConfig, Selection};

fn main() {
    let inst = instantiate("paint", BudgetLevel::Medium, HorizonType::Finite).unwrap();
    let grid = build_grid_set(inst.model.num_states(), inst.grid_size).unwrap();
    let d = finite_horizon_dynamics(&inst.model, &grid, inst.horizon.unwrap(), &inst.terminal, &WeightCache::new()).unwrap();
    let (policy, _, _) = solve_itlp(&inst.model, &inst.spec, &grid, &d, &ItlpOptions::default()).unwrap();
    for selection in [Selection::Interpolated, Selection::Nearest] {
        let cfg = SimConfig { episodes: 5_000, seed: 42, selection, ..SimConfig::default() };
        let r = simulate_policy(&inst.model, &inst.spec, &policy, &grid, &cfg).unwrap();
        println!(
            "{selection:?}: V̂ {:.3} ± {:.3} (LP {:.3}), Ĉ {:.3} ± {:.3} against budget {}, {:.2}% over",
            r.v_hat, r.v_se, r.lp_value, r.c_hat, r.c_se, r.budget, r.percent_over
        );
    }
}

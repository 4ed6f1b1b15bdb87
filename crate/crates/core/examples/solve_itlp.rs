//! Occupancy LP for tiger with a budget, and its LP text export.

use cpomdp::dynamics::finite_horizon_dynamics;
use cpomdp::grid::build_grid_set;
use cpomdp::interpolation::WeightCache;
use cpomdp::itlp::{solve_itlp, ItlpOptions};
use cpomdp::problems::{instantiate, BudgetLevel, HorizonType};
use cpomdp_lp::export_lp;

fn main() {
    let inst = instantiate("tiger", BudgetLevel::Medium, HorizonType::Finite).unwrap();
    let grid = build_grid_set(2, 50).unwrap();
    let horizon = inst.horizon.unwrap();
    let d = finite_horizon_dynamics(&inst.model, &grid, horizon, &inst.terminal, &WeightCache::new()).unwrap();
    let (policy, form, sol) = solve_itlp(&inst.model, &inst.spec, &grid, &d, &ItlpOptions::default()).unwrap();
    println!(
        "T={horizon}, |G|={}, {} variables, {} rows, backend {:?}",
        grid.len(),
        form.lp.num_vars(),
        form.lp.num_constraints(),
        sol.backend
    );
    println!("objective {:.4}, budget {} used {:.4}", sol.objective, inst.spec.budget, policy.budget_used);
    println!("largest flow residual {:.1e}", form.max_flow_residual(&sol.values));

    let k = grid.nearest(&inst.initial_belief.probs);
    println!("action distribution at the start belief's grid point, first epoch:");
    for (a, p) in policy.action_dist[0][k].iter().enumerate() {
        println!("  {:<11} {p:.3}", inst.model.actions[a]);
    }

    let text = export_lp(&form.lp);
    println!("\nLP export, first lines:\n{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
}

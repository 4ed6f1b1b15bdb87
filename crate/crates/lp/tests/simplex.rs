use cpomdp_lp::{
    solve_lp, solve_lp_with, Backend, LinearProgram, Relation, Sense, SolverOptions, Status, VarId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense() -> SolverOptions {
    SolverOptions { backend: Some(Backend::DenseSimplex), ..SolverOptions::default() }
}

fn sparse() -> SolverOptions {
    SolverOptions { backend: Some(Backend::Sparse), ..SolverOptions::default() }
}

#[test]
fn single_upper_row() {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0).unwrap();
    lp.add_constraint("c0", [(x, 1.0)], Relation::Le, 3.0).unwrap();
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.value(x) - 3.0).abs() < 1e-12);
    assert!((sol.objective - 3.0).abs() < 1e-12);
    assert!((sol.duals.as_ref().unwrap()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn interpolation_instance_picks_cheaper_vertex() {
    // grid [0,1],[.5,.5],[1,0] with values (10,-1,10), target [0.15,0.85]
    let grid = [[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]];
    let values = [10.0, -1.0, 10.0];
    let target = [0.15, 0.85];
    let mut lp = LinearProgram::new(Sense::Minimize);
    let b: Vec<VarId> = (0..3).map(|k| lp.add_var(format!("b{k}"), 0.0, f64::INFINITY, values[k]).unwrap()).collect();
    for i in 0..2 {
        lp.add_constraint(format!("s{i}"), (0..3).map(|k| (b[k], grid[k][i])), Relation::Eq, target[i]).unwrap();
    }
    lp.add_constraint("sum", b.iter().map(|&v| (v, 1.0)), Relation::Eq, 1.0).unwrap();
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.objective - 6.7).abs() < 1e-9);
    let got: Vec<f64> = b.iter().map(|&v| sol.value(v)).collect();
    for (g, w) in got.iter().zip([0.7, 0.3, 0.0]) {
        assert!((g - w).abs() < 1e-9, "{got:?}");
    }
}

#[test]
fn detects_infeasible_and_unbounded() {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0).unwrap();
    lp.add_constraint("a", [(x, 1.0)], Relation::Ge, 2.0).unwrap();
    lp.add_constraint("b", [(x, 1.0)], Relation::Le, 1.0).unwrap();
    assert_eq!(solve_lp_with(&lp, &dense()).unwrap().status, Status::Infeasible);
    assert_eq!(solve_lp_with(&lp, &sparse()).unwrap().status, Status::Infeasible);

    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0).unwrap();
    let y = lp.add_var("y", 0.0, f64::INFINITY, 0.0).unwrap();
    lp.add_constraint("a", [(x, 1.0), (y, -1.0)], Relation::Le, 1.0).unwrap();
    assert_eq!(solve_lp_with(&lp, &dense()).unwrap().status, Status::Unbounded);
}

#[test]
fn free_negative_and_fixed_variables() {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0).unwrap();
    let y = lp.add_var("y", f64::NEG_INFINITY, 4.0, -1.0).unwrap();
    let z = lp.add_var("z", 2.0, 2.0, 5.0).unwrap();
    let w = lp.add_var("w", -1.0, 1.0, 1.0).unwrap();
    lp.add_constraint("r", [(x, 1.0), (y, 1.0)], Relation::Ge, -3.0).unwrap();
    lp.add_constraint("s", [(x, 1.0), (z, 1.0), (w, 1.0)], Relation::Ge, 0.0).unwrap();
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    lp.verify(&sol.values, 1e-7).unwrap();
    // y at its upper bound 4; x = -7 pushes w to +1 to keep row s satisfied at x + 2 + w >= 0 -> x >= -3
    // so the optimum trades x against w: x = -3, w = 1 gives 1*-3 -4 +10 +1 = 4; x=-7 infeasible.
    let other = solve_lp_with(&lp, &sparse()).unwrap();
    assert!((sol.objective - other.objective).abs() < 1e-7);
}

#[test]
fn duplicate_terms_are_merged() {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0).unwrap();
    let c = lp.add_constraint("c", [(x, 1.0), (x, 1.0)], Relation::Le, 4.0).unwrap();
    assert_eq!(lp.constraint(c).coeffs, vec![(0, 2.0)]);
    assert!(lp.add_var("x", 0.0, 1.0, 0.0).is_err());
}

#[test]
fn redundant_equalities_are_tolerated() {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0).unwrap();
    let y = lp.add_var("y", 0.0, f64::INFINITY, 2.0).unwrap();
    lp.add_constraint("a", [(x, 1.0), (y, 1.0)], Relation::Eq, 1.0).unwrap();
    lp.add_constraint("b", [(x, 2.0), (y, 2.0)], Relation::Eq, 2.0).unwrap();
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.objective - 1.0).abs() < 1e-12);
}

/// Random bounded, feasible LP: max c.x, Ax <= b with A >= 0, b > 0, x >= 0,
/// plus a few equality rows that hold at a known interior point.
fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearProgram {
    let mut lp = LinearProgram::new(if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize });
    let vars: Vec<VarId> =
        (0..n).map(|j| lp.add_var(format!("x{j}"), 0.0, f64::INFINITY, rng.gen_range(-5.0..5.0)).unwrap()).collect();
    let point: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    for i in 0..m {
        let row: Vec<(VarId, f64)> = vars.iter().map(|&v| (v, rng.gen_range(0.1..3.0))).collect();
        let act: f64 = row.iter().map(|&(v, a)| a * point[v.0]).sum();
        lp.add_constraint(format!("u{i}"), row, Relation::Le, act + rng.gen_range(0.5..4.0)).unwrap();
    }
    for i in 0..m / 3 {
        let row: Vec<(VarId, f64)> = vars.iter().map(|&v| (v, rng.gen_range(-2.0..2.0))).collect();
        let act: f64 = row.iter().map(|&(v, a)| a * point[v.0]).sum();
        lp.add_constraint(format!("e{i}"), row, Relation::Eq, act).unwrap();
    }
    for i in 0..m / 3 {
        let row: Vec<(VarId, f64)> = vars.iter().map(|&v| (v, rng.gen_range(0.0..2.0))).collect();
        let act: f64 = row.iter().map(|&(v, a)| a * point[v.0]).sum();
        lp.add_constraint(format!("g{i}"), row, Relation::Ge, act - rng.gen_range(0.0..1.0)).unwrap();
    }
    lp
}

#[test]
fn strong_duality_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(2..9);
        let m = rng.gen_range(1..7);
        let lp = random_lp(&mut rng, n, m);
        let sol = solve_lp_with(&lp, &dense()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        lp.verify(&sol.values, 1e-7).unwrap();
        let duals = sol.duals.as_ref().unwrap();
        let dual_obj: f64 = lp.constraints().iter().zip(duals).map(|(c, y)| c.rhs * y).sum();
        assert!((dual_obj - sol.objective).abs() < 1e-6, "primal {} dual {}", sol.objective, dual_obj);
        // dual feasibility: reduced costs have the right sign for x >= 0
        let sign = if lp.sense() == Sense::Maximize { 1.0 } else { -1.0 };
        for j in 0..lp.num_vars() {
            let col: f64 = lp.constraints().iter().zip(duals).map(|(c, y)| c.coefficient(VarId(j)) * y).sum();
            assert!(sign * (lp.objective()[j] - col) <= 1e-6);
        }
    }
}

#[test]
fn dense_and_sparse_backends_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let n = rng.gen_range(2..15);
        let m = rng.gen_range(1..10);
        let lp = random_lp(&mut rng, n, m);
        let a = solve_lp_with(&lp, &dense()).unwrap();
        let b = solve_lp_with(&lp, &sparse()).unwrap();
        assert_eq!(a.status, b.status);
        assert!((a.objective - b.objective).abs() < 1e-6 * (1.0 + a.objective.abs()));
        lp.verify(&b.values, 1e-6).unwrap();
        let yb = b.duals.as_ref().unwrap();
        let dual_obj: f64 = lp.constraints().iter().zip(yb).map(|(c, y)| c.rhs * y).sum();
        assert!((dual_obj - b.objective).abs() < 1e-6 * (1.0 + b.objective.abs()));
    }
}

#[test]
fn solving_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lp = random_lp(&mut rng, 12, 8);
    let a = solve_lp(&lp).unwrap();
    let b = solve_lp(&lp).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.duals, b.duals);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn optimal_points_pass_the_row_recheck(seed in 0u64..10_000, n in 2usize..10, m in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = random_lp(&mut rng, n, m);
        let sol = solve_lp(&lp).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        prop_assert!(lp.verify(&sol.values, 1e-7).is_ok());
        prop_assert!((lp.objective_value(&sol.values) - sol.objective).abs() < 1e-7);
    }
}

use cpomdp_lp::{solve_mip, solve_relaxed, LinearProgram, Relation, Sense, SolverOptions, Status, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn integral_relaxation_is_returned_as_is() {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let a = lp.add_binary("a", 3.0).unwrap();
    let b = lp.add_binary("b", 2.0).unwrap();
    lp.add_constraint("c", [(a, 1.0), (b, 1.0)], Relation::Le, 2.0).unwrap();
    let relaxed = solve_relaxed(&lp, &SolverOptions::default());
    let sol = solve_mip(&lp);
    assert_eq!(sol.status, Status::Optimal);
    assert_eq!(sol.values, relaxed.values);
    assert_eq!(sol.nodes, 1);
}

fn knapsack(rng: &mut ChaCha8Rng, n: usize) -> (LinearProgram, Vec<f64>, Vec<f64>, f64) {
    let value: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
    let weight: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..6.0)).collect();
    let cap = weight.iter().sum::<f64>() * 0.45;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let vars: Vec<VarId> = (0..n).map(|j| lp.add_binary(format!("t{j}"), value[j]).unwrap()).collect();
    lp.add_constraint("cap", vars.iter().zip(&weight).map(|(&v, &w)| (v, w)), Relation::Le, cap).unwrap();
    (lp, value, weight, cap)
}

#[test]
fn knapsack_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let n = rng.gen_range(3..11);
        let (lp, value, weight, cap) = knapsack(&mut rng, n);
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << n) {
            let (mut v, mut w) = (0.0, 0.0);
            for j in 0..n {
                if mask >> j & 1 == 1 {
                    v += value[j];
                    w += weight[j];
                }
            }
            if w <= cap + 1e-9 {
                best = best.max(v);
            }
        }
        let sol = solve_mip(&lp);
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - best).abs() < 1e-6, "{} vs {best}", sol.objective);
        lp.verify(&sol.values, 1e-7).unwrap();
        let relaxed = solve_relaxed(&lp, &SolverOptions::default());
        assert!(sol.objective <= relaxed.objective + 1e-9);
    }
}

#[test]
fn mixed_continuous_and_binary() {
    // x <= 10 theta, x <= 4, maximize x - 3 theta  ->  theta = 1, x = 4, objective 1
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var("x", 0.0, 4.0, 1.0).unwrap();
    let t = lp.add_binary("theta", -3.0).unwrap();
    lp.add_constraint("link", [(x, 1.0), (t, -10.0)], Relation::Le, 0.0).unwrap();
    let sol = solve_mip(&lp);
    assert!((sol.objective - 1.0).abs() < 1e-9);
    assert_eq!(sol.value(t), 1.0);
}

#[test]
fn infeasible_mip_and_node_cap() {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let a = lp.add_binary("a", 1.0).unwrap();
    let b = lp.add_binary("b", 1.0).unwrap();
    lp.add_constraint("half", [(a, 1.0), (b, 1.0)], Relation::Eq, 1.5).unwrap();
    assert_eq!(solve_mip(&lp).status, Status::Infeasible);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (lp, ..) = knapsack(&mut rng, 14);
    let opts = SolverOptions { node_limit: 3, ..SolverOptions::default() };
    let sol = cpomdp_lp::solve_mip_with(&lp, &opts);
    assert!(matches!(sol.status, Status::NodeLimit | Status::Optimal));
}

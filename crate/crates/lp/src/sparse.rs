//! Large continuous programs go through HiGHS (dual simplex on sparse columns).

use highs::{HighsModelStatus, RowProblem, Sense as HSense};

use crate::model::{Backend, LinearProgram, Relation, Sense, Solution, Status};
use crate::Tolerances;

pub(crate) fn solve(lp: &LinearProgram, bounds: &[(f64, f64)], tol: &Tolerances) -> Solution {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = lp
        .objective()
        .iter()
        .zip(bounds)
        .map(|(&c, &(lo, hi))| pb.add_column(c, lo..=hi))
        .collect();
    for con in lp.constraints() {
        let terms: Vec<_> = con.coeffs.iter().map(|&(j, a)| (cols[j], a)).collect();
        match con.relation {
            Relation::Le => pb.add_row(..=con.rhs, &terms),
            Relation::Eq => pb.add_row(con.rhs..=con.rhs, &terms),
            Relation::Ge => pb.add_row(con.rhs.., &terms),
        }
    }
    let sense = match lp.sense() {
        Sense::Minimize => HSense::Minimise,
        Sense::Maximize => HSense::Maximise,
    };
    let mut model = pb.optimise(sense);
    model.make_quiet();
    model.set_option("threads", 1);
    model.set_option("primal_feasibility_tolerance", tol.feasibility.min(1e-9));
    model.set_option("dual_feasibility_tolerance", tol.optimality);
    if let Some(cap) = tol.max_iterations {
        model.set_option("simplex_iteration_limit", cap.min(i32::MAX as usize) as i32);
    }
    let solved = model.solve();
    let status = match solved.status() {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => Status::Optimal,
        HighsModelStatus::Infeasible => Status::Infeasible,
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => Status::Unbounded,
        _ => Status::IterationLimit,
    };
    if status != Status::Optimal {
        return Solution::failed(status, Backend::Sparse);
    }
    let sol = solved.get_solution();
    let values: Vec<f64> = sol.columns().iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect();
    let objective = lp.objective_value(&values);
    Solution {
        status,
        values,
        objective,
        duals: Some(sol.dual_rows().to_vec()),
        iterations: solved.simplex_iteration_count().max(0) as usize,
        nodes: 0,
        backend: Backend::Sparse,
    }
}

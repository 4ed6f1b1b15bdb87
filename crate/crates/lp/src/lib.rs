//! Linear programs over named variables, a dense tableau simplex for small
//! programs, HiGHS for large ones, binary branch-and-bound, and an LP
//! text-format writer.
//!
//! ```
//! use cpomdp_lp::{LinearProgram, Relation, Sense, solve_lp};
//!
//! let mut lp = LinearProgram::new(Sense::Maximize);
//! let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0).unwrap();
//! lp.add_constraint("c0", [(x, 1.0)], Relation::Le, 3.0).unwrap();
//! let sol = solve_lp(&lp).unwrap();
//! assert!((sol.objective - 3.0).abs() < 1e-12);
//! ```

mod dense;
mod export;
mod mip;
mod model;
mod sparse;

pub use export::export_lp;
pub use model::{
    Backend, ConstrId, Constraint, LinearProgram, Relation, Sense, Solution, Status, VarId, VarKind, Variable,
    Violation,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("variable `{name}` has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("variable index {0} does not belong to this program")]
    UnknownVariable(usize),
    #[error("program has binary variables; use solve_mip")]
    HasBinaries,
}

#[derive(Debug, Clone)]
pub struct Tolerances {
    pub pivot: f64,
    pub feasibility: f64,
    pub optimality: f64,
    pub max_iterations: Option<usize>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { pivot: 1e-9, feasibility: 1e-7, optimality: 1e-9, max_iterations: None }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tolerances: Tolerances,
    /// Programs with more columns than this use the sparse backend.
    pub dense_var_limit: usize,
    /// Upper bound on dense tableau cells before switching to the sparse backend.
    pub dense_cell_limit: usize,
    pub backend: Option<Backend>,
    pub node_limit: usize,
    pub integrality: f64,
    pub mip_gap_abs: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerances: Tolerances::default(),
            dense_var_limit: 5_000,
            dense_cell_limit: 4_000_000,
            backend: None,
            node_limit: 100_000,
            integrality: 1e-6,
            mip_gap_abs: 1e-9,
        }
    }
}

pub(crate) fn solve_relaxation(lp: &LinearProgram, bounds: &[(f64, f64)], opts: &SolverOptions) -> Solution {
    let backend = opts.backend.unwrap_or_else(|| {
        let (cols, cells) = dense::tableau_cells(lp, bounds);
        if cols > opts.dense_var_limit || cells > opts.dense_cell_limit {
            Backend::Sparse
        } else {
            Backend::DenseSimplex
        }
    });
    match backend {
        Backend::DenseSimplex => {
            let sol = dense::solve(lp, bounds, &opts.tolerances);
            let drifted = sol.status == Status::Optimal && lp.verify(&sol.values, 1e-6).is_err();
            if drifted && opts.backend.is_none() {
                return sparse::solve(lp, bounds, &opts.tolerances);
            }
            sol
        }
        Backend::Sparse => sparse::solve(lp, bounds, &opts.tolerances),
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<Solution, LpError> {
    solve_lp_with(lp, &SolverOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<Solution, LpError> {
    if lp.has_binaries() {
        return Err(LpError::HasBinaries);
    }
    let bounds: Vec<(f64, f64)> = lp.variables().iter().map(|v| (v.lower, v.upper)).collect();
    Ok(solve_relaxation(lp, &bounds, opts))
}

/// Solves the continuous relaxation with binaries treated as `[0, 1]`.
pub fn solve_relaxed(lp: &LinearProgram, opts: &SolverOptions) -> Solution {
    let bounds: Vec<(f64, f64)> = lp.variables().iter().map(|v| (v.lower, v.upper)).collect();
    solve_relaxation(lp, &bounds, opts)
}

pub fn solve_mip(lp: &LinearProgram) -> Solution {
    solve_mip_with(lp, &SolverOptions::default())
}

pub fn solve_mip_with(lp: &LinearProgram, opts: &SolverOptions) -> Solution {
    mip::solve(lp, opts)
}

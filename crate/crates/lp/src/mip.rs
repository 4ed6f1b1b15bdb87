//! Best-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{LinearProgram, Sense, Solution, Status, VarKind};
use crate::{solve_relaxation, SolverOptions};

struct Node {
    bound: f64,
    seq: usize,
    bounds: Vec<(f64, f64)>,
    branch: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Most fractional binary; ties go to the lowest index.
fn branching_var(lp: &LinearProgram, values: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in lp.variables().iter().enumerate() {
        if v.kind != VarKind::Binary {
            continue;
        }
        let x = values[j];
        let dist = (x - x.floor()).min(x.ceil() - x);
        if dist <= tol {
            continue;
        }
        if best.map_or(true, |(_, d)| dist > d + 1e-12) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

pub(crate) fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Solution {
    let sign = match lp.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let root_bounds: Vec<(f64, f64)> = lp.variables().iter().map(|v| (v.lower, v.upper)).collect();
    let root = solve_relaxation(lp, &root_bounds, opts);
    if root.status != Status::Optimal {
        return root;
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut nodes = 1usize;
    let mut iterations = root.iterations;
    let backend = root.backend;
    let mut incumbent: Option<Solution> = None;
    let mut pending = vec![(root_bounds, root)];
    let mut hit_cap = false;
    loop {
        for (bounds, sol) in pending.drain(..) {
            let score = sign * sol.objective;
            if let Some(inc) = &incumbent {
                if score <= sign * inc.objective + opts.mip_gap_abs {
                    continue;
                }
            }
            match branching_var(lp, &sol.values, opts.integrality) {
                None => {
                    let mut values = sol.values.clone();
                    for (j, v) in lp.variables().iter().enumerate() {
                        if v.kind == VarKind::Binary {
                            values[j] = values[j].round();
                        }
                    }
                    let objective = lp.objective_value(&values);
                    incumbent = Some(Solution { values, objective, duals: None, ..sol });
                }
                Some(j) => {
                    heap.push(Node { bound: score, seq, bounds, branch: j });
                    seq += 1;
                }
            }
        }
        let Some(node) = heap.pop() else { break };
        if let Some(inc) = &incumbent {
            if node.bound <= sign * inc.objective + opts.mip_gap_abs {
                continue;
            }
        }
        if nodes >= opts.node_limit {
            hit_cap = true;
            break;
        }
        let j = node.branch;
        for fixed in [1.0, 0.0] {
            let mut child = node.bounds.clone();
            child[j] = (fixed, fixed);
            nodes += 1;
            let sol = solve_relaxation(lp, &child, opts);
            iterations += sol.iterations;
            if sol.status == Status::Optimal {
                pending.push((child, sol));
            }
        }
    }
    match incumbent {
        Some(mut inc) => {
            inc.status = if hit_cap { Status::NodeLimit } else { Status::Optimal };
            inc.nodes = nodes;
            inc.iterations = iterations;
            inc
        }
        None => {
            let mut s = Solution::failed(if hit_cap { Status::NodeLimit } else { Status::Infeasible }, backend);
            s.nodes = nodes;
            s.iterations = iterations;
            s
        }
    }
}

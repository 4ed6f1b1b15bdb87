//! Dense two-phase tableau simplex: Dantzig pricing, Harris ratio test, Bland's rule on stalls.

use crate::model::{Backend, LinearProgram, Relation, Sense, Solution, Status};
use crate::Tolerances;

/// How an original variable is expressed through nonnegative tableau columns.
#[derive(Debug, Clone)]
struct ColumnMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    dead: Vec<bool>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        let row_start = r * w;
        for v in &mut self.data[row_start..row_start + w] {
            *v /= p;
        }
        self.data[row_start + c] = 1.0;
        let nz: Vec<usize> = (0..w).filter(|&j| self.data[row_start + j] != 0.0).collect();
        let pivot_row: Vec<f64> = nz.iter().map(|&j| self.data[row_start + j]).collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            let base = i * w;
            for (&j, &pv) in nz.iter().zip(&pivot_row) {
                self.data[base + j] -= f * pv;
            }
            self.data[base + c] = 0.0;
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (&j, &pv) in nz.iter().zip(&pivot_row) {
                self.cost[j] -= f * pv;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Pivots on the current cost row. The most negative reduced cost enters
    /// and a two-pass (Harris) ratio test picks the largest pivot among rows
    /// within the feasibility tolerance of the minimum ratio. A long run of
    /// degenerate pivots switches to Bland's rule until progress resumes.
    /// `allowed` bounds the entering column range.
    fn optimize(&mut self, allowed: usize, tol: &Tolerances, iters: &mut usize, cap: usize) -> Status {
        let mut degenerate = 0usize;
        let bland_after = 50 + self.rows;
        loop {
            let bland = degenerate >= bland_after;
            let mut entering: Option<usize> = None;
            for j in 0..allowed {
                if self.cost[j] < -tol.optimality {
                    if bland {
                        entering = Some(j);
                        break;
                    }
                    if entering.map(|b| self.cost[j] < self.cost[b]).unwrap_or(true) {
                        entering = Some(j);
                    }
                }
            }
            let Some(c) = entering else {
                return Status::Optimal;
            };
            let mut theta = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if !self.dead[i] && a > tol.pivot {
                    let slack = if bland { 0.0 } else { 1e-2 * tol.feasibility };
                    theta = theta.min((self.rhs(i).max(0.0) + slack) / a);
                }
            }
            if theta == f64::INFINITY {
                return Status::Unbounded;
            }
            let mut r: Option<usize> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if self.dead[i] || a <= tol.pivot {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                if ratio > theta + 1e-12 * (1.0 + theta) {
                    continue;
                }
                r = match r {
                    None => Some(i),
                    Some(b) if bland && self.basis[i] < self.basis[b] => Some(i),
                    Some(b) if !bland && a > self.at(b, c) => Some(i),
                    keep => keep,
                };
            }
            let r = r.expect("a row attains the minimum ratio");
            if *iters >= cap {
                return Status::IterationLimit;
            }
            *iters += 1;
            if self.rhs(r).max(0.0) / self.at(r, c) > 1e-12 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            self.pivot(r, c);
        }
    }
}

pub(crate) fn solve(lp: &LinearProgram, bounds: &[(f64, f64)], tol: &Tolerances) -> Solution {
    let n = lp.num_vars();
    let mut maps: Vec<ColumnMap> = Vec::with_capacity(n);
    let mut ncols = 0usize;
    // (column, upper) rows for finite ranges after shifting.
    let mut range_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in bounds.iter().take(n) {
        if lo.is_finite() && hi.is_finite() && hi - lo <= 0.0 {
            maps.push(ColumnMap { offset: lo, cols: Vec::new() });
        } else if lo.is_finite() {
            maps.push(ColumnMap { offset: lo, cols: vec![(ncols, 1.0)] });
            if hi.is_finite() {
                range_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(ColumnMap { offset: hi, cols: vec![(ncols, -1.0)] });
            ncols += 1;
        } else {
            maps.push(ColumnMap { offset: 0.0, cols: vec![(ncols, 1.0), (ncols + 1, -1.0)] });
            ncols += 2;
        }
    }

    let sign = match lp.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost_struct = vec![0.0; ncols];
    for (j, m) in maps.iter().enumerate() {
        for &(c, s) in &m.cols {
            cost_struct[c] += sign * lp.objective()[j] * s;
        }
    }

    // Internal rows: sparse coefficients over structural columns, relation, rhs,
    // and the multiplier mapping the internal row back to the original one.
    struct Row {
        coeffs: Vec<(usize, f64)>,
        rel: Relation,
        rhs: f64,
        mult: f64,
        origin: Option<usize>,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut infeasible = false;
    for (ci, con) in lp.constraints().iter().enumerate() {
        let mut rhs = con.rhs;
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for &(j, a) in &con.coeffs {
            rhs -= a * maps[j].offset;
            for &(c, s) in &maps[j].cols {
                coeffs.push((c, a * s));
            }
        }
        coeffs.sort_by_key(|&(c, _)| c);
        let scale = coeffs.iter().fold(0.0f64, |m, &(_, a)| m.max(a.abs()));
        if scale <= tol.pivot {
            let ok = match con.relation {
                Relation::Le => rhs >= -tol.feasibility,
                Relation::Ge => rhs <= tol.feasibility,
                Relation::Eq => rhs.abs() <= tol.feasibility,
            };
            if !ok {
                infeasible = true;
            }
            rows.push(Row { coeffs: Vec::new(), rel: Relation::Eq, rhs: 0.0, mult: 0.0, origin: Some(ci) });
            continue;
        }
        let mut mult = 1.0 / scale;
        let mut rel = con.relation;
        if rhs * mult < 0.0 {
            mult = -mult;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        let coeffs = coeffs.into_iter().map(|(c, a)| (c, a * mult)).collect();
        rows.push(Row { coeffs, rel, rhs: rhs * mult, mult, origin: Some(ci) });
    }
    for &(c, u) in &range_rows {
        rows.push(Row { coeffs: vec![(c, 1.0)], rel: Relation::Le, rhs: u, mult: 1.0, origin: None });
    }
    if infeasible {
        return Solution::failed(Status::Infeasible, Backend::DenseSimplex);
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.rel != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.rel != Relation::Le).count();
    let artificial_start = ncols + n_slack;
    let total = artificial_start + n_art;
    let width = total + 1;
    let mut t = Tableau {
        rows: m,
        width,
        data: vec![0.0; m * width],
        cost: vec![0.0; width],
        basis: vec![0; m],
        dead: vec![false; m],
    };
    let mut unit_col = vec![0usize; m];
    let mut next_slack = ncols;
    let mut next_art = artificial_start;
    for (i, r) in rows.iter().enumerate() {
        let base = i * width;
        for &(c, a) in &r.coeffs {
            t.data[base + c] += a;
        }
        t.data[base + total] = r.rhs;
        match r.rel {
            Relation::Le => {
                t.data[base + next_slack] = 1.0;
                t.basis[i] = next_slack;
                unit_col[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                t.data[base + next_slack] = -1.0;
                next_slack += 1;
                t.data[base + next_art] = 1.0;
                t.basis[i] = next_art;
                unit_col[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                t.data[base + next_art] = 1.0;
                t.basis[i] = next_art;
                unit_col[i] = next_art;
                next_art += 1;
            }
        }
        if r.coeffs.is_empty() {
            t.dead[i] = true;
        }
    }

    let cap = tol.max_iterations.unwrap_or(50_000 + 50 * (m + total));
    let mut iters = 0usize;

    if n_art > 0 {
        for i in 0..m {
            if t.basis[i] >= artificial_start {
                let base = i * width;
                for j in 0..width {
                    if j < artificial_start || j == total {
                        t.cost[j] -= t.data[base + j];
                    }
                }
            }
        }
        let status = t.optimize(artificial_start, tol, &mut iters, cap);
        if status == Status::IterationLimit {
            return Solution::failed(status, Backend::DenseSimplex);
        }
        let max_rhs = rows.iter().fold(1.0f64, |a, r| a.max(r.rhs.abs()));
        if -t.cost[total] > tol.feasibility * max_rhs {
            return Solution::failed(Status::Infeasible, Backend::DenseSimplex);
        }
        for i in 0..m {
            if t.basis[i] < artificial_start || t.dead[i] {
                continue;
            }
            let base = i * width;
            let candidate = (0..artificial_start)
                .filter(|&j| t.data[base + j].abs() > tol.pivot)
                .max_by(|&x, &y| t.data[base + x].abs().total_cmp(&t.data[base + y].abs()));
            match candidate {
                Some(c) => t.pivot(i, c),
                None => {
                    t.dead[i] = true;
                    for j in 0..artificial_start {
                        t.data[base + j] = 0.0;
                    }
                }
            }
        }
    }

    t.cost.iter_mut().for_each(|v| *v = 0.0);
    t.cost[..ncols].copy_from_slice(&cost_struct);
    for i in 0..m {
        let cb = if t.basis[i] < ncols { cost_struct[t.basis[i]] } else { 0.0 };
        if cb == 0.0 {
            continue;
        }
        let base = i * width;
        for j in 0..width {
            t.cost[j] -= cb * t.data[base + j];
        }
    }
    let status = t.optimize(artificial_start, tol, &mut iters, cap);
    if status != Status::Optimal {
        let mut s = Solution::failed(status, Backend::DenseSimplex);
        s.iterations = iters;
        return s;
    }

    let mut col_value = vec![0.0; total];
    for i in 0..m {
        if t.basis[i] < total {
            col_value[t.basis[i]] = t.rhs(i);
        }
    }
    let mut values = Vec::with_capacity(n);
    for (j, map) in maps.iter().enumerate() {
        let mut x = map.offset;
        for &(c, s) in &map.cols {
            x += s * col_value[c];
        }
        let (lo, hi) = bounds[j];
        values.push(x.clamp(lo, hi));
    }
    let mut duals = vec![0.0; lp.num_constraints()];
    for (i, r) in rows.iter().enumerate() {
        if let Some(ci) = r.origin {
            let y_internal = -t.cost[unit_col[i]];
            duals[ci] = sign * r.mult * y_internal;
        }
    }
    let objective = lp.objective_value(&values);
    Solution {
        status: Status::Optimal,
        values,
        objective,
        duals: Some(duals),
        iterations: iters,
        nodes: 0,
        backend: Backend::DenseSimplex,
    }
}

/// Rough tableau footprint, used to decide whether the dense path is sensible.
pub(crate) fn tableau_cells(lp: &LinearProgram, bounds: &[(f64, f64)]) -> (usize, usize) {
    let mut cols = 0usize;
    let mut extra_rows = 0usize;
    for &(lo, hi) in bounds {
        if lo.is_finite() && hi.is_finite() && hi <= lo {
            continue;
        }
        if !lo.is_finite() && !hi.is_finite() {
            cols += 2;
        } else {
            cols += 1;
            if lo.is_finite() && hi.is_finite() {
                extra_rows += 1;
            }
        }
    }
    let rows = lp.num_constraints() + extra_rows;
    (cols, rows * (cols + 2 * rows + 1))
}

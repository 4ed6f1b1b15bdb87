use std::collections::HashMap;

use crate::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstrId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sorted by variable index, one entry per variable, zero coefficients dropped.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    pub fn coefficient(&self, var: VarId) -> f64 {
        match self.coeffs.binary_search_by_key(&var.0, |&(j, _)| j) {
            Ok(pos) => self.coeffs[pos].1,
            Err(_) => 0.0,
        }
    }
}

/// A linear or mixed-binary program over named variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    sense: Sense,
    vars: Vec<Variable>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    by_name: HashMap<String, usize>,
    row_names: HashMap<String, usize>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            vars: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
            by_name: HashMap::new(),
            row_names: HashMap::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstrId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).map(|&j| VarId(j))
    }

    pub fn constraint_by_name(&self, name: &str) -> Option<ConstrId> {
        self.row_names.get(name).map(|&i| ConstrId(i))
    }

    pub fn has_binaries(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        obj: f64,
    ) -> Result<VarId, LpError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(LpError::InvalidBounds { name, lower, upper });
        }
        if !obj.is_finite() {
            return Err(LpError::NonFinite { context: format!("objective coefficient of {name}") });
        }
        self.push_var(Variable { name, lower, upper, kind: VarKind::Continuous }, obj)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> Result<VarId, LpError> {
        let name = name.into();
        if !obj.is_finite() {
            return Err(LpError::NonFinite { context: format!("objective coefficient of {name}") });
        }
        self.push_var(Variable { name, lower: 0.0, upper: 1.0, kind: VarKind::Binary }, obj)
    }

    /// Empty names are allowed and are not registered for lookup.
    fn push_var(&mut self, var: Variable, obj: f64) -> Result<VarId, LpError> {
        let id = self.vars.len();
        if !var.name.is_empty() {
            if self.by_name.contains_key(&var.name) {
                return Err(LpError::DuplicateName(var.name));
            }
            self.by_name.insert(var.name.clone(), id);
        }
        self.vars.push(var);
        self.objective.push(obj);
        Ok(VarId(id))
    }

    pub fn set_objective_coefficient(&mut self, var: VarId, obj: f64) {
        self.objective[var.0] = obj;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    /// Adds a row; repeated variables are merged by summing their coefficients.
    pub fn add_constraint<I>(
        &mut self,
        name: impl Into<String>,
        terms: I,
        relation: Relation,
        rhs: f64,
    ) -> Result<ConstrId, LpError>
    where
        I: IntoIterator<Item = (VarId, f64)>,
    {
        let name = name.into();
        if !name.is_empty() && self.row_names.contains_key(&name) {
            return Err(LpError::DuplicateName(name));
        }
        if !rhs.is_finite() {
            return Err(LpError::NonFinite { context: format!("right-hand side of {name}") });
        }
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for (v, a) in terms {
            if v.0 >= self.vars.len() {
                return Err(LpError::UnknownVariable(v.0));
            }
            if !a.is_finite() {
                return Err(LpError::NonFinite { context: format!("coefficient of {} in {name}", self.vars[v.0].name) });
            }
            coeffs.push((v.0, a));
        }
        coeffs.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, a) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        let id = self.constraints.len();
        if !name.is_empty() {
            self.row_names.insert(name.clone(), id);
        }
        self.constraints.push(Constraint { name, coeffs: merged, relation, rhs });
        Ok(ConstrId(id))
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Row-by-row recheck of a candidate point, independent of how it was produced.
    pub fn verify(&self, values: &[f64], tol: f64) -> Result<(), Violation> {
        if values.len() != self.vars.len() {
            return Err(Violation::Length { expected: self.vars.len(), found: values.len() });
        }
        for (j, v) in self.vars.iter().enumerate() {
            let x = values[j];
            if !x.is_finite() || x < v.lower - tol || x > v.upper + tol {
                return Err(Violation::Bound { var: v.name.clone(), value: x });
            }
            if v.kind == VarKind::Binary && (x - x.round()).abs() > tol {
                return Err(Violation::Integrality { var: v.name.clone(), value: x });
            }
        }
        for c in &self.constraints {
            let lhs = c.activity(values);
            let excess = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            if excess > tol {
                return Err(Violation::Row { row: c.name.clone(), lhs, rhs: c.rhs });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },
    #[error("variable {var} = {value} violates its bounds")]
    Bound { var: String, value: f64 },
    #[error("binary variable {var} = {value} is fractional")]
    Integrality { var: String, value: f64 },
    #[error("row {row}: lhs {lhs} against rhs {rhs}")]
    Row { row: String, lhs: f64, rhs: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// Branch-and-bound stopped at its node cap; `values` holds the incumbent if any.
    NodeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    DenseSimplex,
    Sparse,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Row duals in the sign convention of the original sense; `None` when the
    /// backend does not report them or the problem is a MIP.
    pub duals: Option<Vec<f64>>,
    pub iterations: usize,
    pub nodes: usize,
    pub backend: Backend,
}

impl Solution {
    pub(crate) fn failed(status: Status, backend: Backend) -> Self {
        Solution {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            duals: None,
            iterations: 0,
            nodes: 0,
            backend,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn named_values(&self, lp: &LinearProgram) -> std::collections::BTreeMap<String, f64> {
        lp.variables()
            .iter()
            .zip(&self.values)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect()
    }

    pub fn dual(&self, row: ConstrId) -> Option<f64> {
        self.duals.as_ref().map(|d| d[row.0])
    }
}

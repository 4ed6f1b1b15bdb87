//! POMDP and constraint data plus the exact belief-space primitives.

use std::collections::HashSet;
use std::fmt;

pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("observation {observation} has zero probability after action {action}")]
    ZeroProbabilityObservation { action: usize, observation: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("belief is not a distribution: {0}")]
    InvalidBelief(String),
}

/// A discrete POMDP with stationary tensors.
///
/// `trans[a][i][j]`, `obs[a][j][o]`, `reward[a][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub trans: Vec<Vec<Vec<f64>>>,
    pub obs: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub terminal_reward: Vec<f64>,
    pub discount: f64,
    /// Starting distribution from the model file, if it declared one.
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub probs: Vec<f64>,
}

impl BeliefState {
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.is_empty() {
            return Err(ModelError::InvalidBelief("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -PROB_TOL) {
            return Err(ModelError::InvalidBelief(format!("entry {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(ModelError::InvalidBelief(format!("sums to {sum}")));
        }
        Ok(BeliefState { probs })
    }

    pub fn uniform(n: usize) -> Self {
        BeliefState { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        BeliefState { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Initial weight over grid points; resolved once the grid exists.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSpec {
    Uniform,
    Point(usize),
    Weights(Vec<f64>),
    /// Point mass on the grid point closest (in L1) to this belief.
    Nearest(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    /// `cost[a][i]`
    pub cost: Vec<Vec<f64>>,
    pub budget: f64,
    pub delta: DeltaSpec,
}

impl ConstraintSpec {
    pub fn new(cost: Vec<Vec<f64>>, budget: f64) -> Self {
        ConstraintSpec { cost, budget, delta: DeltaSpec::Uniform }
    }

    pub fn with_delta(mut self, delta: DeltaSpec) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    pub fn expected_cost(&self, b: &[f64], a: usize) -> f64 {
        dot(b, &self.cost[a])
    }

    /// Resolves δ against grid points; errors if weights are malformed.
    pub fn resolve_delta(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let k = points.len();
        let delta = match &self.delta {
            DeltaSpec::Uniform => vec![1.0 / k as f64; k],
            DeltaSpec::Point(p) => {
                if *p >= k {
                    return Err(ModelError::Invalid(format!("delta point {p} outside grid of size {k}")));
                }
                let mut d = vec![0.0; k];
                d[*p] = 1.0;
                d
            }
            DeltaSpec::Weights(w) => {
                if w.len() != k {
                    return Err(ModelError::Invalid(format!("delta has {} weights for {k} grid points", w.len())));
                }
                w.clone()
            }
            DeltaSpec::Nearest(b) => {
                let best = points
                    .iter()
                    .enumerate()
                    .map(|(i, g)| (i, g.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()))
                    .min_by(|x, y| x.1.total_cmp(&y.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                let mut d = vec![0.0; k];
                d[best] = 1.0;
                d
            }
        };
        let sum: f64 = delta.iter().sum();
        if delta.iter().any(|&d| d < 0.0 || !d.is_finite()) || (sum - 1.0).abs() > PROB_TOL {
            return Err(ModelError::Invalid(format!("delta must be a distribution (sum {sum})")));
        }
        Ok(delta)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Transition,
    Observation,
    Reward,
    Terminal,
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Table::Transition => "transition",
            Table::Observation => "observation",
            Table::Reward => "reward",
            Table::Terminal => "terminal reward",
        })
    }
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelIssue {
    RowSum { table: Table, action: usize, row: usize, sum: f64 },
    Negative { table: Table, action: usize, row: usize, col: usize, value: f64 },
    NonFinite { table: Table, action: usize, row: usize, col: usize },
    Shape { table: Table, expected: usize, found: usize },
    EmptyLabels(&'static str),
    DuplicateLabel { kind: &'static str, label: String },
    Discount(f64),
}

impl fmt::Display for ModelIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelIssue::RowSum { table, action, row, sum } => {
                write!(f, "{table} row (action {action}, state {row}) sums to {sum}")
            }
            ModelIssue::Negative { table, action, row, col, value } => {
                write!(f, "{table} entry (action {action}, {row}, {col}) is negative: {value}")
            }
            ModelIssue::NonFinite { table, action, row, col } => {
                write!(f, "{table} entry (action {action}, {row}, {col}) is not finite")
            }
            ModelIssue::Shape { table, expected, found } => {
                write!(f, "{table} has dimension {found}, expected {expected}")
            }
            ModelIssue::EmptyLabels(kind) => write!(f, "no {kind} declared"),
            ModelIssue::DuplicateLabel { kind, label } => write!(f, "duplicate {kind} label `{label}`"),
            ModelIssue::Discount(d) => write!(f, "discount {d} outside [0, 1]"),
        }
    }
}

fn check_labels(kind: &'static str, labels: &[String], out: &mut Vec<ModelIssue>) {
    if labels.is_empty() {
        out.push(ModelIssue::EmptyLabels(kind));
    }
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            out.push(ModelIssue::DuplicateLabel { kind, label: l.clone() });
        }
    }
}

fn check_stochastic(table: Table, tensor: &[Vec<Vec<f64>>], rows: usize, cols: usize, out: &mut Vec<ModelIssue>) {
    for (a, mat) in tensor.iter().enumerate() {
        if mat.len() != rows {
            out.push(ModelIssue::Shape { table, expected: rows, found: mat.len() });
            continue;
        }
        for (i, row) in mat.iter().enumerate() {
            if row.len() != cols {
                out.push(ModelIssue::Shape { table, expected: cols, found: row.len() });
                continue;
            }
            let mut bad = false;
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    out.push(ModelIssue::NonFinite { table, action: a, row: i, col: j });
                    bad = true;
                } else if p < 0.0 {
                    out.push(ModelIssue::Negative { table, action: a, row: i, col: j, value: p });
                    bad = true;
                }
            }
            let sum: f64 = row.iter().sum();
            if !bad && (sum - 1.0).abs() > PROB_TOL {
                out.push(ModelIssue::RowSum { table, action: a, row: i, sum });
            }
        }
    }
}

/// Returns every invariant violation; an empty list means the model is valid.
pub fn validate_model(model: &PomdpModel) -> Vec<ModelIssue> {
    let mut out = Vec::new();
    let (ns, na, no) = (model.states.len(), model.actions.len(), model.observations.len());
    check_labels("state", &model.states, &mut out);
    check_labels("action", &model.actions, &mut out);
    check_labels("observation", &model.observations, &mut out);
    if !(0.0..=1.0).contains(&model.discount) {
        out.push(ModelIssue::Discount(model.discount));
    }
    for (table, len) in [(Table::Transition, model.trans.len()), (Table::Observation, model.obs.len()), (Table::Reward, model.reward.len())] {
        if len != na {
            out.push(ModelIssue::Shape { table, expected: na, found: len });
        }
    }
    check_stochastic(Table::Transition, &model.trans, ns, ns, &mut out);
    check_stochastic(Table::Observation, &model.obs, ns, no, &mut out);
    for (a, row) in model.reward.iter().enumerate() {
        if row.len() != ns {
            out.push(ModelIssue::Shape { table: Table::Reward, expected: ns, found: row.len() });
        }
        for (i, r) in row.iter().enumerate() {
            if !r.is_finite() {
                out.push(ModelIssue::NonFinite { table: Table::Reward, action: a, row: i, col: 0 });
            }
        }
    }
    if model.terminal_reward.len() != ns {
        out.push(ModelIssue::Shape { table: Table::Terminal, expected: ns, found: model.terminal_reward.len() });
    }
    out
}

impl PomdpModel {
    /// Builds a model and rejects it if any invariant fails.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
        trans: Vec<Vec<Vec<f64>>>,
        obs: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        discount: f64,
    ) -> Result<Self, ModelError> {
        let ns = states.len();
        let model = PomdpModel {
            states,
            actions,
            observations,
            trans,
            obs,
            reward,
            terminal_reward: vec![0.0; ns],
            discount,
            start: None,
        };
        let issues = validate_model(&model);
        if let Some(first) = issues.first() {
            return Err(ModelError::Invalid(first.to_string()));
        }
        Ok(model)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == label)
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn observation_index(&self, label: &str) -> Option<usize> {
        self.observations.iter().position(|s| s == label)
    }

    /// Σ_i b_i p[a][i][·]
    pub fn predict(&self, b: &[f64], a: usize) -> Vec<f64> {
        let n = self.num_states();
        let mut out = vec![0.0; n];
        for (i, &bi) in b.iter().enumerate() {
            if bi == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(&self.trans[a][i]) {
                *o += bi * p;
            }
        }
        out
    }

    pub fn observation_probability(&self, b: &[f64], a: usize, o: usize) -> f64 {
        let pred = self.predict(b, a);
        pred.iter().enumerate().map(|(j, pj)| pj * self.obs[a][j][o]).sum()
    }

    pub fn expected_reward(&self, b: &[f64], a: usize) -> f64 {
        dot(b, &self.reward[a])
    }

    pub fn belief_update(&self, b: &[f64], a: usize, o: usize) -> Result<Vec<f64>, ModelError> {
        let pred = self.predict(b, a);
        posterior(&pred, &self.obs[a], o).ok_or(ModelError::ZeroProbabilityObservation { action: a, observation: o })
    }

    /// All observation branches at once: `(P(o | b, a), b')` with `None` for
    /// impossible observations.
    pub fn branches(&self, b: &[f64], a: usize) -> Vec<(f64, Option<Vec<f64>>)> {
        let pred = self.predict(b, a);
        (0..self.num_observations())
            .map(|o| {
                let p: f64 = pred.iter().enumerate().map(|(j, pj)| pj * self.obs[a][j][o]).sum();
                (p, posterior(&pred, &self.obs[a], o))
            })
            .collect()
    }

    pub fn best_immediate_reward(&self, b: &[f64]) -> f64 {
        (0..self.num_actions()).map(|a| self.expected_reward(b, a)).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn posterior(pred: &[f64], z: &[Vec<f64>], o: usize) -> Option<Vec<f64>> {
    let mut post: Vec<f64> = pred.iter().enumerate().map(|(j, pj)| pj * z[j][o]).collect();
    let total: f64 = post.iter().sum();
    if total <= 0.0 {
        return None;
    }
    for p in &mut post {
        *p /= total;
    }
    Some(post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::tiger;

    #[test]
    fn tiger_listen_update() {
        let m = tiger();
        let b = m.belief_update(&[0.5, 0.5], 0, 0).unwrap();
        assert!((b[0] - 0.85).abs() < 1e-12 && (b[1] - 0.15).abs() < 1e-12);
        let b = m.belief_update(&[1.0, 0.0], 0, 0).unwrap();
        assert_eq!(b, vec![1.0, 0.0]);
        let b = m.belief_update(&[0.85, 0.15], 1, 1).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let m = tiger();
        let err = m.belief_update(&[1.0, 0.0], 0, 1);
        assert!(err.is_ok());
        let mut det = m.clone();
        det.obs[0] = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(
            det.belief_update(&[1.0, 0.0], 0, 1),
            Err(ModelError::ZeroProbabilityObservation { action: 0, observation: 1 })
        );
    }

    #[test]
    fn observation_probabilities() {
        let m = tiger();
        assert!((m.observation_probability(&[0.5, 0.5], 0, 0) - 0.5).abs() < 1e-12);
        assert!((m.observation_probability(&[1.0, 0.0], 0, 0) - 0.85).abs() < 1e-12);
    }

    #[test]
    fn expected_rewards() {
        let m = tiger();
        assert!((m.expected_reward(&[0.5, 0.5], 1) + 45.0).abs() < 1e-12);
        assert!((m.expected_reward(&[0.0, 1.0], 1) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_name_the_bad_row() {
        assert!(validate_model(&tiger()).is_empty());
        let mut m = tiger();
        m.trans[0][0] = vec![0.5, 0.6];
        let issues = validate_model(&m);
        assert_eq!(issues.len(), 1);
        match &issues[0] {
            ModelIssue::RowSum { table: Table::Transition, action: 0, row: 0, sum } => {
                assert!((sum - 1.1).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut m = tiger();
        m.obs[0][1] = vec![1.2, -0.2];
        assert!(matches!(validate_model(&m)[0], ModelIssue::Negative { table: Table::Observation, .. }));
    }

    #[test]
    fn delta_resolution() {
        let pts = vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]];
        let spec = ConstraintSpec::new(vec![vec![0.0; 2]; 3], 1.0);
        assert_eq!(spec.clone().with_delta(DeltaSpec::Point(1)).resolve_delta(&pts).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(spec.clone().with_delta(DeltaSpec::Nearest(vec![0.6, 0.4])).resolve_delta(&pts).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(spec.with_delta(DeltaSpec::Point(3)).resolve_delta(&pts).is_err());
    }
}

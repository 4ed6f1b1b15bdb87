//! Constraint sidecar: costs, budget, terminal rewards and the initial grid weights.
//!
//! ```text
//! budget: 21.0
//! cost: listen : * 2
//! cost: open-left : * 1
//! terminal: * 0
//! delta: point 1
//! ```

use std::fmt::Write;

use super::{tokenize, ParseDiagnostic, Token};
use crate::model::{ConstraintSpec, DeltaSpec, PomdpModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub spec: ConstraintSpec,
    pub terminal: Vec<f64>,
}

impl Sidecar {
    pub fn apply_terminal(&self, model: &mut PomdpModel) {
        model.terminal_reward = self.terminal.clone();
    }
}

fn resolve(tok: &Token, labels: &[String], kind: &str) -> Result<Vec<usize>, ParseDiagnostic> {
    if tok.text == "*" {
        return Ok((0..labels.len()).collect());
    }
    if let Some(i) = labels.iter().position(|l| *l == tok.text) {
        return Ok(vec![i]);
    }
    match tok.text.parse::<usize>() {
        Ok(i) if i < labels.len() => Ok(vec![i]),
        _ => Err(ParseDiagnostic::error(tok.line, tok.col, format!("unknown {kind} `{}`", tok.text))),
    }
}

fn float(tok: &Token) -> Result<f64, ParseDiagnostic> {
    match tok.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseDiagnostic::error(tok.line, tok.col, format!("malformed number `{}`", tok.text))),
    }
}

fn arity(line: &[Token], want: usize, form: &str) -> Result<(), ParseDiagnostic> {
    if line.len() != want {
        let t = line.last().unwrap_or(&line[0]);
        return Err(ParseDiagnostic::error(t.line, t.col, format!("expected `{form}`")));
    }
    Ok(())
}

fn sidecar_line(
    line: &[Token],
    model: &PomdpModel,
    cost: &mut [Vec<f64>],
    terminal: &mut [f64],
    budget: &mut Option<f64>,
    delta: &mut DeltaSpec,
) -> Result<(), ParseDiagnostic> {
    let head = &line[0];
    if line.len() < 2 || line[1].text != ":" {
        return Err(ParseDiagnostic::error(head.line, head.col, format!("expected `{}:`", head.text)));
    }
    match head.text.as_str() {
        "budget" => {
            arity(line, 3, "budget: <float>")?;
            let b = float(&line[2])?;
            if b < 0.0 {
                return Err(ParseDiagnostic::error(line[2].line, line[2].col, "budget must be non-negative"));
            }
            *budget = Some(b);
        }
        "cost" => {
            arity(line, 6, "cost: <action|*> : <state|*> <float>")?;
            if line[3].text != ":" {
                return Err(ParseDiagnostic::error(line[3].line, line[3].col, "expected `:` between action and state"));
            }
            let acts = resolve(&line[2], &model.actions, "action")?;
            let states = resolve(&line[4], &model.states, "state")?;
            let v = float(&line[5])?;
            for &a in &acts {
                for &i in &states {
                    cost[a][i] = v;
                }
            }
        }
        "terminal" => {
            arity(line, 4, "terminal: <state|*> <float>")?;
            let states = resolve(&line[2], &model.states, "state")?;
            let v = float(&line[3])?;
            for &i in &states {
                terminal[i] = v;
            }
        }
        "delta" => {
            let kind = line.get(2).ok_or_else(|| ParseDiagnostic::error(head.line, head.col, "missing delta kind"))?;
            *delta = match kind.text.as_str() {
                "uniform" => {
                    arity(line, 3, "delta: uniform")?;
                    DeltaSpec::Uniform
                }
                "point" => {
                    arity(line, 4, "delta: point <k>")?;
                    let k = line[3]
                        .text
                        .parse::<usize>()
                        .map_err(|_| ParseDiagnostic::error(line[3].line, line[3].col, "grid index must be a non-negative integer"))?;
                    DeltaSpec::Point(k)
                }
                "weights" => {
                    let w = line[3..].iter().map(float).collect::<Result<Vec<_>, _>>()?;
                    if w.is_empty() || w.iter().any(|&x| x < 0.0) {
                        return Err(ParseDiagnostic::error(kind.line, kind.col, "weights must be non-negative and non-empty"));
                    }
                    DeltaSpec::Weights(w)
                }
                other => {
                    return Err(ParseDiagnostic::error(kind.line, kind.col, format!("unknown delta kind `{other}`")))
                }
            };
        }
        other => return Err(ParseDiagnostic::error(head.line, head.col, format!("unknown directive `{other}`"))),
    }
    Ok(())
}

/// Parses a sidecar against `model` (for label resolution).
pub fn parse_constraint_sidecar(text: &str, model: &PomdpModel) -> Result<Sidecar, Vec<ParseDiagnostic>> {
    let toks = tokenize(text);
    let mut lines: Vec<Vec<Token>> = Vec::new();
    for t in toks {
        match lines.last_mut() {
            Some(l) if l[0].line == t.line => l.push(t),
            _ => lines.push(vec![t]),
        }
    }
    let mut cost = vec![vec![0.0; model.num_states()]; model.num_actions()];
    let mut terminal = vec![0.0; model.num_states()];
    let mut budget = None;
    let mut delta = DeltaSpec::Uniform;
    let mut errors = Vec::new();
    for line in &lines {
        if let Err(e) = sidecar_line(line, model, &mut cost, &mut terminal, &mut budget, &mut delta) {
            errors.push(e);
        }
    }
    if budget.is_none() && errors.is_empty() {
        let line = lines.last().map(|l| l[0].line).unwrap_or(1);
        errors.push(ParseDiagnostic::error(line, 1, "missing required `budget:` line"));
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Sidecar { spec: ConstraintSpec { cost, budget: budget.unwrap(), delta }, terminal })
}

pub fn serialize_sidecar(model: &PomdpModel, spec: &ConstraintSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "budget: {}", spec.budget);
    for (a, row) in spec.cost.iter().enumerate() {
        if row.iter().all(|&c| c == row[0]) {
            let _ = writeln!(out, "cost: {} : * {}", model.actions[a], row[0]);
        } else {
            for (i, c) in row.iter().enumerate() {
                let _ = writeln!(out, "cost: {} : {} {c}", model.actions[a], model.states[i]);
            }
        }
    }
    for (i, r) in model.terminal_reward.iter().enumerate() {
        if *r != 0.0 {
            let _ = writeln!(out, "terminal: {} {r}", model.states[i]);
        }
    }
    match &spec.delta {
        DeltaSpec::Uniform => out.push_str("delta: uniform\n"),
        DeltaSpec::Point(k) => {
            let _ = writeln!(out, "delta: point {k}");
        }
        DeltaSpec::Weights(w) => {
            let _ = writeln!(out, "delta: weights {}", w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
        }
        DeltaSpec::Nearest(_) => out.push_str("# delta: nearest grid point to the initial belief\ndelta: uniform\n"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::tiger;

    #[test]
    fn tiger_small_budget() {
        let m = tiger();
        let s = parse_constraint_sidecar(
            "budget: 21.0\ncost: listen : * 2\ncost: open-left : * 1\ncost: open-right : * 1\n",
            &m,
        )
        .unwrap();
        assert_eq!(s.spec.budget, 21.0);
        assert_eq!(s.spec.cost, vec![vec![2.0, 2.0], vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(s.spec.delta, DeltaSpec::Uniform);
    }

    #[test]
    fn budget_is_required() {
        let errs = parse_constraint_sidecar("cost: * : * 0\n", &tiger()).unwrap_err();
        assert!(errs[0].message.contains("budget"));
    }

    #[test]
    fn point_delta_and_bad_inputs() {
        let m = tiger();
        let s = parse_constraint_sidecar("budget: 3\ndelta: point 1\n", &m).unwrap();
        let pts = vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]];
        assert_eq!(s.spec.resolve_delta(&pts).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(parse_constraint_sidecar("budget: -1\n", &m).is_err());
        assert!(parse_constraint_sidecar("budget: 1\ncost: jump : * 1\n", &m).is_err());
        assert!(parse_constraint_sidecar("budget: 1x\n", &m).is_err());
    }

    #[test]
    fn round_trip() {
        let mut m = tiger();
        m.terminal_reward = vec![10.0, -1.0];
        let spec = ConstraintSpec::new(vec![vec![2.0, 2.0], vec![1.0, 0.5], vec![1.0, 1.0]], 3.5)
            .with_delta(DeltaSpec::Weights(vec![0.25, 0.75]));
        let text = serialize_sidecar(&m, &spec);
        let back = parse_constraint_sidecar(&text, &m).unwrap();
        assert_eq!(back.spec, spec);
        assert_eq!(back.terminal, m.terminal_reward);
    }
}

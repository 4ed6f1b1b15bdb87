//! Reader and writer for the `.pomdp` text format, plus the constraint sidecar.

mod sidecar;

use std::fmt;
use std::fmt::Write;

pub use sidecar::{parse_constraint_sidecar, serialize_sidecar, Sidecar};

use crate::model::{validate_model, PomdpModel, PROB_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub severity: Severity,
    pub message: String,
}

impl ParseDiagnostic {
    fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic { line, column, severity: Severity::Error, message: message.into() }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Rows whose sums are off by at most this much are renormalized.
    pub tolerance: f64,
    /// Largest accepted |A|·|S|·|S|·|O| (reward tensor before collapsing).
    pub max_cells: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { tolerance: PROB_TOL, max_cells: 50_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub text: String,
    pub line: usize,
    pub col: usize,
}

/// Splits on whitespace, treats `:` as its own token and drops `#` comments.
pub(crate) fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut cur = String::new();
        let mut start = 0usize;
        for (ci, ch) in line.chars().enumerate() {
            if ch.is_whitespace() || ch == ':' {
                if !cur.is_empty() {
                    out.push(Token { text: std::mem::take(&mut cur), line: ln + 1, col: start + 1 });
                }
                if ch == ':' {
                    out.push(Token { text: ":".into(), line: ln + 1, col: ci + 1 });
                }
            } else {
                if cur.is_empty() {
                    start = ci;
                }
                cur.push(ch);
            }
        }
        if !cur.is_empty() {
            out.push(Token { text: cur, line: ln + 1, col: start + 1 });
        }
    }
    out
}

const DIRECTIVES: [&str; 9] = ["discount", "values", "states", "actions", "observations", "start", "T", "O", "R"];

struct Dims {
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    opts: &'a ParseOptions,
    discount: Option<f64>,
    cost_values: bool,
    states: Option<Vec<String>>,
    actions: Option<Vec<String>>,
    observations: Option<Vec<String>>,
    start: Option<Vec<f64>>,
    trans: Vec<Vec<Vec<f64>>>,
    obs: Vec<Vec<Vec<f64>>>,
    /// Flattened r[a][i][j][o].
    reward: Vec<f64>,
    trans_line: Vec<Vec<usize>>,
    obs_line: Vec<Vec<usize>>,
    allocated: bool,
}

type PResult<T> = Result<T, ParseDiagnostic>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn at_directive(&self, pos: usize) -> bool {
        match (self.toks.get(pos), self.toks.get(pos + 1)) {
            (Some(t), Some(n)) if DIRECTIVES.contains(&t.text.as_str()) => {
                n.text == ":" || (t.text == "start" && (n.text == "include" || n.text == "exclude"))
            }
            _ => false,
        }
    }

    fn end_pos(&self) -> (usize, usize) {
        self.toks.last().map(|t| (t.line, t.col + t.text.len())).unwrap_or((1, 1))
    }

    fn next(&mut self, what: &str) -> PResult<&'a Token> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => {
                let (l, c) = self.end_pos();
                Err(ParseDiagnostic::error(l, c, format!("unexpected end of input, expected {what}")))
            }
        }
    }

    fn expect_colon(&mut self) -> PResult<()> {
        let t = self.next("`:`")?;
        if t.text != ":" {
            return Err(ParseDiagnostic::error(t.line, t.col, format!("expected `:`, found `{}`", t.text)));
        }
        Ok(())
    }

    fn number(&mut self) -> PResult<f64> {
        let t = self.next("a number")?;
        match t.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ParseDiagnostic::error(t.line, t.col, format!("expected a number, found `{}`", t.text))),
        }
    }

    fn numbers(&mut self, n: usize) -> PResult<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if self.at_directive(self.pos) || self.peek().is_none() {
                let (l, c) = self.peek().map(|t| (t.line, t.col)).unwrap_or_else(|| self.end_pos());
                return Err(ParseDiagnostic::error(l, c, format!("expected {n} numbers, found {k}")));
            }
            out.push(self.number()?);
        }
        Ok(out)
    }

    /// After a fixed-size block, anything other than a new directive is an arity error.
    fn expect_directive_or_end(&self) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            Some(_) if self.at_directive(self.pos) => Ok(()),
            Some(t) => Err(ParseDiagnostic::error(t.line, t.col, format!("too many entries: unexpected `{}`", t.text))),
        }
    }

    fn label_list(&mut self) -> PResult<Vec<String>> {
        let mut items = Vec::new();
        while let Some(t) = self.peek() {
            let next_is_colon = self.toks.get(self.pos + 1).map(|n| n.text == ":").unwrap_or(false);
            if self.at_directive(self.pos) || (next_is_colon && t.text != ":") {
                break;
            }
            items.push(t);
            self.pos += 1;
        }
        if items.is_empty() {
            let (l, c) = self.peek().map(|t| (t.line, t.col)).unwrap_or_else(|| self.end_pos());
            return Err(ParseDiagnostic::error(l, c, "empty declaration"));
        }
        if items.len() == 1 {
            if let Ok(n) = items[0].text.parse::<usize>() {
                if n == 0 || n > 1_000_000 {
                    return Err(ParseDiagnostic::error(items[0].line, items[0].col, format!("invalid count {n}")));
                }
                return Ok((0..n).map(|i| i.to_string()).collect());
            }
        }
        let labels: Vec<String> = items.iter().map(|t| t.text.clone()).collect();
        for (k, t) in items.iter().enumerate() {
            if t.text == ":" || labels[..k].contains(&t.text) {
                return Err(ParseDiagnostic::error(t.line, t.col, format!("invalid or duplicate label `{}`", t.text)));
            }
        }
        Ok(labels)
    }

    fn dims(&self, tok: &Token) -> PResult<Dims> {
        match (&self.states, &self.actions, &self.observations) {
            (Some(s), Some(a), Some(o)) => Ok(Dims { states: s.clone(), actions: a.clone(), observations: o.clone() }),
            _ => Err(ParseDiagnostic::error(
                tok.line,
                tok.col,
                "states, actions and observations must be declared before T/O/R",
            )),
        }
    }

    fn allocate(&mut self, tok: &Token) -> PResult<Dims> {
        let d = self.dims(tok)?;
        if !self.allocated {
            let (ns, na, no) = (d.states.len(), d.actions.len(), d.observations.len());
            let cells = na.saturating_mul(ns).saturating_mul(ns).saturating_mul(no);
            if cells > self.opts.max_cells {
                return Err(ParseDiagnostic::error(tok.line, tok.col, format!("model too large ({cells} reward cells)")));
            }
            self.trans = vec![vec![vec![0.0; ns]; ns]; na];
            self.obs = vec![vec![vec![0.0; no]; ns]; na];
            self.reward = vec![0.0; cells];
            self.trans_line = vec![vec![0; ns]; na];
            self.obs_line = vec![vec![0; ns]; na];
            self.allocated = true;
        }
        Ok(d)
    }

    /// A label, a numeric index, or `*`.
    fn reference(&mut self, labels: &[String], kind: &str) -> PResult<Vec<usize>> {
        let t = self.next(kind)?;
        if t.text == "*" {
            return Ok((0..labels.len()).collect());
        }
        if let Some(i) = labels.iter().position(|l| *l == t.text) {
            return Ok(vec![i]);
        }
        if let Ok(i) = t.text.parse::<usize>() {
            if i < labels.len() {
                return Ok(vec![i]);
            }
        }
        Err(ParseDiagnostic::error(t.line, t.col, format!("undefined {kind} `{}`", t.text)))
    }

    fn maybe_colon(&mut self) -> bool {
        if self.peek().map(|t| t.text == ":").unwrap_or(false) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        if self.peek().map(|t| t.text == word).unwrap_or(false) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn directive(&mut self) -> PResult<()> {
        let head = self.next("a directive")?;
        if !self.at_directive(self.pos - 1) {
            return Err(ParseDiagnostic::error(head.line, head.col, format!("unknown directive `{}`", head.text)));
        }
        match head.text.as_str() {
            "discount" => {
                self.expect_colon()?;
                let t = self.peek();
                let d = self.number()?;
                if !(0.0..=1.0).contains(&d) {
                    let t = t.unwrap();
                    return Err(ParseDiagnostic::error(t.line, t.col, format!("discount {d} outside [0, 1]")));
                }
                self.discount = Some(d);
            }
            "values" => {
                self.expect_colon()?;
                let t = self.next("`reward` or `cost`")?;
                self.cost_values = match t.text.as_str() {
                    "reward" => false,
                    "cost" => true,
                    other => return Err(ParseDiagnostic::error(t.line, t.col, format!("unknown values kind `{other}`"))),
                };
            }
            "states" => {
                self.expect_colon()?;
                self.states = Some(self.label_list()?);
            }
            "actions" => {
                self.expect_colon()?;
                self.actions = Some(self.label_list()?);
            }
            "observations" => {
                self.expect_colon()?;
                self.observations = Some(self.label_list()?);
            }
            "start" => self.start(head)?,
            "T" => self.transition(head)?,
            "O" => self.observation(head)?,
            "R" => self.reward_entry(head)?,
            _ => unreachable!(),
        }
        Ok(())
    }

    fn start(&mut self, head: &Token) -> PResult<()> {
        let Some(states) = self.states.clone() else {
            return Err(ParseDiagnostic::error(head.line, head.col, "start declared before states"));
        };
        let ns = states.len();
        let include = self.keyword("include");
        let exclude = !include && self.keyword("exclude");
        self.expect_colon()?;
        if include || exclude {
            let mut chosen = vec![false; ns];
            while self.peek().is_some() && !self.at_directive(self.pos) {
                for i in self.reference(&states, "state")? {
                    chosen[i] = true;
                }
            }
            let keep: Vec<bool> = chosen.iter().map(|&c| c == include).collect();
            let count = keep.iter().filter(|&&k| k).count();
            if count == 0 {
                return Err(ParseDiagnostic::error(head.line, head.col, "start set is empty"));
            }
            self.start = Some(keep.iter().map(|&k| if k { 1.0 / count as f64 } else { 0.0 }).collect());
            return Ok(());
        }
        if self.keyword("uniform") {
            self.start = Some(vec![1.0 / ns as f64; ns]);
            return Ok(());
        }
        // One token that is a label (or a bare index when there is more than one state).
        let single = self.peek().map(|t| {
            states.contains(&t.text) || (ns > 1 && t.text.parse::<usize>().is_ok() && self.at_directive(self.pos + 1))
        });
        if single == Some(true) && (self.at_directive(self.pos + 1) || self.pos + 1 >= self.toks.len()) {
            let i = self.reference(&states, "state")?[0];
            let mut p = vec![0.0; ns];
            p[i] = 1.0;
            self.start = Some(p);
            return Ok(());
        }
        let line = self.peek().map(|t| t.line).unwrap_or(head.line);
        let p = self.numbers(ns)?;
        self.expect_directive_or_end()?;
        self.start = Some(self.normalized(p, line, "start distribution")?);
        Ok(())
    }

    fn normalized(&self, mut p: Vec<f64>, line: usize, what: &str) -> PResult<Vec<f64>> {
        if p.iter().any(|&x| x < 0.0) {
            return Err(ParseDiagnostic::error(line, 1, format!("{what} has a negative entry")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > self.opts.tolerance {
            return Err(ParseDiagnostic::error(line, 1, format!("{what} sums to {s}")));
        }
        p.iter_mut().for_each(|x| *x /= s);
        Ok(p)
    }

    fn transition(&mut self, head: &Token) -> PResult<()> {
        self.expect_colon()?;
        let d = self.allocate(head)?;
        let ns = d.states.len();
        let acts = self.reference(&d.actions, "action")?;
        if self.maybe_colon() {
            let from = self.reference(&d.states, "state")?;
            if self.maybe_colon() {
                let to = self.reference(&d.states, "state")?;
                let p = self.number()?;
                self.expect_directive_or_end()?;
                for &a in &acts {
                    for &i in &from {
                        for &j in &to {
                            self.trans[a][i][j] = p;
                        }
                        self.trans_line[a][i] = head.line;
                    }
                }
                return Ok(());
            }
            let row = if self.keyword("uniform") { vec![1.0 / ns as f64; ns] } else { self.numbers(ns)? };
            self.expect_directive_or_end()?;
            for &a in &acts {
                for &i in &from {
                    self.trans[a][i] = row.clone();
                    self.trans_line[a][i] = head.line;
                }
            }
            return Ok(());
        }
        let mat: Vec<Vec<f64>> = if self.keyword("uniform") {
            vec![vec![1.0 / ns as f64; ns]; ns]
        } else if self.keyword("identity") {
            (0..ns).map(|i| (0..ns).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
        } else {
            let flat = self.numbers(ns * ns)?;
            flat.chunks(ns).map(|c| c.to_vec()).collect()
        };
        self.expect_directive_or_end()?;
        for &a in &acts {
            self.trans[a] = mat.clone();
            self.trans_line[a] = vec![head.line; ns];
        }
        Ok(())
    }

    fn observation(&mut self, head: &Token) -> PResult<()> {
        self.expect_colon()?;
        let d = self.allocate(head)?;
        let (ns, no) = (d.states.len(), d.observations.len());
        let acts = self.reference(&d.actions, "action")?;
        if self.maybe_colon() {
            let to = self.reference(&d.states, "state")?;
            if self.maybe_colon() {
                let os = self.reference(&d.observations, "observation")?;
                let p = self.number()?;
                self.expect_directive_or_end()?;
                for &a in &acts {
                    for &j in &to {
                        for &o in &os {
                            self.obs[a][j][o] = p;
                        }
                        self.obs_line[a][j] = head.line;
                    }
                }
                return Ok(());
            }
            let row = if self.keyword("uniform") { vec![1.0 / no as f64; no] } else { self.numbers(no)? };
            self.expect_directive_or_end()?;
            for &a in &acts {
                for &j in &to {
                    self.obs[a][j] = row.clone();
                    self.obs_line[a][j] = head.line;
                }
            }
            return Ok(());
        }
        let mat: Vec<Vec<f64>> = if self.keyword("uniform") {
            vec![vec![1.0 / no as f64; no]; ns]
        } else {
            let flat = self.numbers(ns * no)?;
            flat.chunks(no).map(|c| c.to_vec()).collect()
        };
        self.expect_directive_or_end()?;
        for &a in &acts {
            self.obs[a] = mat.clone();
            self.obs_line[a] = vec![head.line; ns];
        }
        Ok(())
    }

    fn reward_entry(&mut self, head: &Token) -> PResult<()> {
        self.expect_colon()?;
        let d = self.allocate(head)?;
        let (ns, no) = (d.states.len(), d.observations.len());
        let acts = self.reference(&d.actions, "action")?;
        if !self.maybe_colon() {
            let t = self.peek().unwrap_or(head);
            return Err(ParseDiagnostic::error(t.line, t.col, "R: needs at least an action and a start state"));
        }
        let from = self.reference(&d.states, "state")?;
        let idx = |a: usize, i: usize, j: usize, o: usize| ((a * ns + i) * ns + j) * no + o;
        if self.maybe_colon() {
            let to = self.reference(&d.states, "state")?;
            if self.maybe_colon() {
                let os = self.reference(&d.observations, "observation")?;
                let v = self.number()?;
                self.expect_directive_or_end()?;
                for &a in &acts {
                    for &i in &from {
                        for &j in &to {
                            for &o in &os {
                                self.reward[idx(a, i, j, o)] = v;
                            }
                        }
                    }
                }
                return Ok(());
            }
            let row = self.numbers(no)?;
            self.expect_directive_or_end()?;
            for &a in &acts {
                for &i in &from {
                    for &j in &to {
                        for (o, &v) in row.iter().enumerate() {
                            self.reward[idx(a, i, j, o)] = v;
                        }
                    }
                }
            }
            return Ok(());
        }
        let flat = self.numbers(ns * no)?;
        self.expect_directive_or_end()?;
        for &a in &acts {
            for &i in &from {
                for j in 0..ns {
                    for o in 0..no {
                        self.reward[idx(a, i, j, o)] = flat[j * no + o];
                    }
                }
            }
        }
        Ok(())
    }

    fn skip_to_directive(&mut self) {
        while self.pos < self.toks.len() && !self.at_directive(self.pos) {
            self.pos += 1;
        }
    }
}

/// Parses `.pomdp` text; on success also returns warnings.
pub fn parse_pomdp_with(
    text: &str,
    opts: &ParseOptions,
) -> Result<(PomdpModel, Vec<ParseDiagnostic>), Vec<ParseDiagnostic>> {
    let toks = tokenize(text);
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        opts,
        discount: None,
        cost_values: false,
        states: None,
        actions: None,
        observations: None,
        start: None,
        trans: Vec::new(),
        obs: Vec::new(),
        reward: Vec::new(),
        trans_line: Vec::new(),
        obs_line: Vec::new(),
        allocated: false,
    };
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    while p.pos < toks.len() {
        if let Err(e) = p.directive() {
            errors.push(e);
            if errors.len() >= 50 {
                break;
            }
            p.skip_to_directive();
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let (l, c) = p.end_pos();
    let (Some(states), Some(actions), Some(observations)) = (p.states.clone(), p.actions.clone(), p.observations.clone())
    else {
        return Err(vec![ParseDiagnostic::error(l, c, "missing states, actions or observations declaration")]);
    };
    if !p.allocated {
        return Err(vec![ParseDiagnostic::error(l, c, "no T: or O: entries")]);
    }
    let (ns, na, no) = (states.len(), actions.len(), observations.len());
    for (name, tensor, lines) in [("T", &mut p.trans, &p.trans_line), ("O", &mut p.obs, &p.obs_line)] {
        for a in 0..na {
            for i in 0..ns {
                let row = &mut tensor[a][i];
                let line = lines[a][i].max(1);
                if let Some(x) = row.iter().find(|x| **x < 0.0) {
                    errors.push(ParseDiagnostic::error(line, 1, format!("{name} row ({}, {}) has negative entry {x}", actions[a], states[i])));
                    continue;
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > opts.tolerance {
                    errors.push(ParseDiagnostic::error(line, 1, format!("{name} row ({}, {}) sums to {s}", actions[a], states[i])));
                } else if s != 1.0 {
                    row.iter_mut().for_each(|x| *x /= s);
                    if (s - 1.0).abs() > PROB_TOL {
                        warnings.push(ParseDiagnostic {
                            line,
                            column: 1,
                            severity: Severity::Warning,
                            message: format!("{name} row ({}, {}) renormalized from {s}", actions[a], states[i]),
                        });
                    }
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let sign = if p.cost_values { -1.0 } else { 1.0 };
    let mut reward = vec![vec![0.0; ns]; na];
    for a in 0..na {
        for i in 0..ns {
            let mut w = 0.0;
            for j in 0..ns {
                let pij = p.trans[a][i][j];
                if pij == 0.0 {
                    continue;
                }
                let base = ((a * ns + i) * ns + j) * no;
                let rs = &p.reward[base..base + no];
                if rs.iter().all(|&r| r == rs[0]) {
                    w += pij * rs[0];
                } else {
                    w += pij * (0..no).map(|o| p.obs[a][j][o] * rs[o]).sum::<f64>();
                }
            }
            reward[a][i] = sign * w;
        }
    }
    let model = PomdpModel {
        states,
        actions,
        observations,
        trans: p.trans,
        obs: p.obs,
        reward,
        terminal_reward: vec![0.0; ns],
        discount: p.discount.unwrap_or(1.0),
        start: p.start,
    };
    let issues = validate_model(&model);
    if !issues.is_empty() {
        return Err(issues.iter().map(|i| ParseDiagnostic::error(1, 1, i.to_string())).collect());
    }
    Ok((model, warnings))
}

pub fn parse_pomdp(text: &str) -> Result<PomdpModel, Vec<ParseDiagnostic>> {
    parse_pomdp_with(text, &ParseOptions::default()).map(|(m, _)| m)
}

fn label_decl(labels: &[String]) -> String {
    let counted = labels.iter().enumerate().all(|(i, l)| *l == i.to_string());
    if counted {
        labels.len().to_string()
    } else {
        labels.join(" ")
    }
}

fn row_text(row: &[f64]) -> String {
    row.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

fn is_uniform(row: &[f64]) -> bool {
    let u = 1.0 / row.len() as f64;
    row.iter().all(|&x| x == u)
}

/// Writes `model` in `.pomdp` syntax with deterministic ordering.
pub fn serialize_model(model: &PomdpModel) -> String {
    let mut out = String::new();
    let ns = model.num_states();
    let _ = writeln!(out, "discount: {}", model.discount);
    out.push_str("values: reward\n");
    let _ = writeln!(out, "states: {}", label_decl(&model.states));
    let _ = writeln!(out, "actions: {}", label_decl(&model.actions));
    let _ = writeln!(out, "observations: {}", label_decl(&model.observations));
    if let Some(start) = &model.start {
        if is_uniform(start) {
            out.push_str("start: uniform\n");
        } else {
            let _ = writeln!(out, "start: {}", row_text(start));
        }
    }
    for (a, name) in model.actions.iter().enumerate() {
        out.push('\n');
        let mat = &model.trans[a];
        let identity = (0..ns).all(|i| (0..ns).all(|j| mat[i][j] == if i == j { 1.0 } else { 0.0 }));
        if identity {
            let _ = writeln!(out, "T: {name}\nidentity");
        } else if mat.iter().all(|r| is_uniform(r)) {
            let _ = writeln!(out, "T: {name}\nuniform");
        } else {
            for (i, row) in mat.iter().enumerate() {
                if is_uniform(row) {
                    let _ = writeln!(out, "T: {name} : {}\nuniform", model.states[i]);
                } else {
                    let _ = writeln!(out, "T: {name} : {}\n{}", model.states[i], row_text(row));
                }
            }
        }
    }
    for (a, name) in model.actions.iter().enumerate() {
        out.push('\n');
        let mat = &model.obs[a];
        if mat.iter().all(|r| is_uniform(r)) {
            let _ = writeln!(out, "O: {name}\nuniform");
        } else {
            for (j, row) in mat.iter().enumerate() {
                let _ = writeln!(out, "O: {name} : {}\n{}", model.states[j], row_text(row));
            }
        }
    }
    out.push('\n');
    for (a, name) in model.actions.iter().enumerate() {
        for (i, &w) in model.reward[a].iter().enumerate() {
            if w != 0.0 {
                let _ = writeln!(out, "R: {name} : {} : * : * {w}", model.states[i]);
            }
        }
    }
    out
}

//! Line-oriented text format for problems.
//!
//! ```text
//! smd 1
//! nodes N labels P
//! grid H W                      # optional, required by star priors
//! unary j v_0 ... v_{P-1}       # N lines
//! edges M
//! edge i j c_0 ... c_{P-1}      # M lines
//! constraint eq|le RHS K [name]
//! term j p w                    # K lines
//! star p center beta
//! ```
//!
//! Indices are 0-based and `#` starts a comment. Numbers are written with 17
//! significant digits so a save/load round trip is exact.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use smd_core::constraints::Weight;
use smd_core::shape::build_parent_map;
use smd_core::{ConstraintKind, GridShape, LinearConstraint, MrfProblem, StarPrior};

use crate::error::{Error, Result};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_problem(problem: &MrfProblem) -> Result<String> {
    let mut out = String::new();
    let n = problem.node_count();
    writeln!(out, "smd 1").unwrap();
    writeln!(out, "nodes {} labels {}", n, problem.label_count()).unwrap();
    if let Some(g) = problem.grid() {
        writeln!(out, "grid {} {}", g.height, g.width).unwrap();
    }
    for j in 0..n {
        out.push_str(&format!("unary {j}"));
        for &v in problem.unary_row(j) {
            out.push(' ');
            out.push_str(&num(v));
        }
        out.push('\n');
    }
    writeln!(out, "edges {}", problem.edge_count()).unwrap();
    for (e, &(i, j)) in problem.edges().iter().enumerate() {
        out.push_str(&format!("edge {i} {j}"));
        for &c in problem.strengths(e) {
            out.push(' ');
            out.push_str(&num(c));
        }
        out.push('\n');
    }
    for c in problem.constraints() {
        let kind = match c.kind() {
            ConstraintKind::Equality => "eq",
            ConstraintKind::Inequality => "le",
        };
        write!(out, "constraint {kind} {} {}", num(c.rhs()), c.weights().len()).unwrap();
        if !c.name().is_empty() {
            if c.name().split_whitespace().count() != 1 || c.name().contains('#') {
                return Err(Error::Config(format!(
                    "constraint name {:?} cannot be stored",
                    c.name()
                )));
            }
            write!(out, " {}", c.name()).unwrap();
        }
        out.push('\n');
        for w in c.weights() {
            writeln!(out, "term {} {} {}", w.node, w.label, num(w.value)).unwrap();
        }
    }
    for s in problem.star_priors() {
        let grid = problem
            .grid()
            .ok_or_else(|| Error::Config("star priors can only be stored for grid problems".into()))?;
        let expected = build_parent_map(grid, grid.coords(s.center()))?;
        if expected != s.parents() {
            return Err(Error::Config(
                "star prior with a custom parent map cannot be stored".into(),
            ));
        }
        writeln!(out, "star {} {} {}", s.label(), s.center(), num(s.beta())).unwrap();
    }
    Ok(out)
}

pub fn save_problem(problem: &MrfProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_problem(problem)?).map_err(|e| Error::io(path, e))
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<MrfProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_problem(&text)
}

struct Line<'a> {
    number: usize,
    tokens: Vec<&'a str>,
}

impl Line<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.number, message)
    }

    fn keyword(&self) -> &str {
        self.tokens[0]
    }

    fn arity(&self, expected: usize) -> Result<()> {
        if self.tokens.len() != expected {
            return Err(self.err(format!(
                "`{}` expects {} fields, found {}",
                self.keyword(),
                expected - 1,
                self.tokens.len() - 1
            )));
        }
        Ok(())
    }

    fn field<T: FromStr>(&self, index: usize, what: &str) -> Result<T> {
        let token = self
            .tokens
            .get(index)
            .ok_or_else(|| self.err(format!("missing {what}")))?;
        token
            .parse()
            .map_err(|_| self.err(format!("invalid {what} `{token}`")))
    }

    fn values(&self, from: usize, count: usize, what: &str) -> Result<Vec<f64>> {
        self.arity(from + count)?;
        (from..from + count).map(|k| self.field(k, what)).collect()
    }
}

fn core_at(line: usize) -> impl Fn(smd_core::Error) -> Error {
    move |e| Error::parse(line, e.to_string())
}

pub fn parse_problem(text: &str) -> Result<MrfProblem> {
    let mut lines = text.lines().enumerate().filter_map(|(k, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        (!tokens.is_empty()).then_some(Line {
            number: k + 1,
            tokens,
        })
    });
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty problem file"))?;
    if header.tokens != ["smd", "1"] {
        return Err(header.err("expected header `smd 1`"));
    }
    let dims = lines
        .next()
        .ok_or_else(|| Error::parse(header.number + 1, "missing `nodes N labels P`"))?;
    if dims.tokens.len() != 4 || dims.tokens[0] != "nodes" || dims.tokens[2] != "labels" {
        return Err(dims.err("expected `nodes N labels P`"));
    }
    let n: usize = dims.field(1, "node count")?;
    let labels: usize = dims.field(3, "label count")?;

    let mut grid = None;
    let mut unary: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut declared_edges: Option<(usize, usize)> = None;
    let mut edges: Vec<(usize, usize, usize, Vec<f64>)> = Vec::new();
    let mut seen_edges = HashSet::new();
    let mut constraints = Vec::new();
    let mut stars = Vec::new();
    let mut pending: Option<(usize, ConstraintKind, f64, usize, String, Vec<Weight>)> = None;

    for line in lines {
        if let Some(c) = pending.as_mut() {
            if line.keyword() == "term" {
                line.arity(4)?;
                c.5.push(Weight {
                    node: line.field(1, "node")?,
                    label: line.field(2, "label")?,
                    value: line.field(3, "weight")?,
                });
                if c.5.len() == c.3 {
                    constraints.push(pending.take().unwrap());
                }
                continue;
            }
            return Err(line.err(format!(
                "constraint starting on line {} has {} of {} terms",
                c.0,
                c.5.len(),
                c.3
            )));
        }
        match line.keyword() {
            "grid" => {
                line.arity(3)?;
                grid = Some((line.number, GridShape::new(line.field(1, "height")?, line.field(2, "width")?)));
            }
            "unary" => {
                let j: usize = line.field(1, "node")?;
                if j >= n {
                    return Err(line.err(format!("node {j} out of range for {n} nodes")));
                }
                if unary[j].is_some() {
                    return Err(line.err(format!("second unary line for node {j}")));
                }
                unary[j] = Some(line.values(2, labels, "unary value")?);
            }
            "edges" => {
                line.arity(2)?;
                if declared_edges.is_some() {
                    return Err(line.err("second `edges` line"));
                }
                declared_edges = Some((line.number, line.field(1, "edge count")?));
            }
            "edge" => {
                if declared_edges.is_none() {
                    return Err(line.err("`edge` before `edges M`"));
                }
                let i: usize = line.field(1, "node")?;
                let j: usize = line.field(2, "node")?;
                if !seen_edges.insert((i.min(j), i.max(j))) {
                    return Err(line.err(format!("duplicate edge ({i}, {j})")));
                }
                edges.push((line.number, i, j, line.values(3, labels, "strength")?));
            }
            "constraint" => {
                if line.tokens.len() != 4 && line.tokens.len() != 5 {
                    return Err(line.err("expected `constraint eq|le RHS K [name]`"));
                }
                let kind = match line.tokens[1] {
                    "eq" => ConstraintKind::Equality,
                    "le" => ConstraintKind::Inequality,
                    other => return Err(line.err(format!("unknown constraint kind `{other}`"))),
                };
                let rhs: f64 = line.field(2, "right-hand side")?;
                let count: usize = line.field(3, "term count")?;
                let name = line.tokens.get(4).unwrap_or(&"").to_string();
                let c = (line.number, kind, rhs, count, name, Vec::with_capacity(count));
                if count == 0 {
                    constraints.push(c);
                } else {
                    pending = Some(c);
                }
            }
            "star" => {
                line.arity(4)?;
                stars.push((
                    line.number,
                    line.field::<usize>(1, "label")?,
                    line.field::<usize>(2, "center")?,
                    line.field::<f64>(3, "beta")?,
                ));
            }
            other => return Err(line.err(format!("unknown keyword `{other}`"))),
        }
    }
    if let Some(c) = pending {
        return Err(Error::parse(c.0, format!("constraint has {} of {} terms", c.5.len(), c.3)));
    }
    if let Some(missing) = unary.iter().position(Option::is_none) {
        return Err(Error::parse(dims.number, format!("no unary line for node {missing}")));
    }
    if let Some((number, m)) = declared_edges {
        if m != edges.len() {
            return Err(Error::parse(number, format!("declared {m} edges, found {}", edges.len())));
        }
    }

    let flat: Vec<f64> = unary.into_iter().flatten().flatten().collect();
    let mut problem = MrfProblem::new(n, labels, flat).map_err(core_at(dims.number))?;
    if let Some((number, g)) = grid {
        problem.set_grid(g).map_err(core_at(number))?;
    }
    for (number, i, j, c) in edges {
        problem.add_edge(i, j, &c).map_err(core_at(number))?;
    }
    for (number, kind, rhs, _, name, weights) in constraints {
        let c = LinearConstraint::new(kind, weights, rhs, name).map_err(core_at(number))?;
        problem.add_constraint(c).map_err(core_at(number))?;
    }
    for (number, label, center, beta) in stars {
        let g = problem
            .grid()
            .ok_or_else(|| Error::parse(number, "star prior needs a `grid` line"))?;
        let prior = StarPrior::on_grid(label, g, center, beta).map_err(core_at(number))?;
        problem.add_star_prior(prior).map_err(core_at(number))?;
    }
    Ok(problem)
}

/// One label index per line.
pub fn write_labeling(labeling: &smd_core::Labeling) -> String {
    let mut out = String::with_capacity(labeling.len() * 3);
    for &l in labeling.as_slice() {
        writeln!(out, "{l}").unwrap();
    }
    out
}

pub fn parse_labeling(text: &str) -> Result<smd_core::Labeling> {
    let mut labels = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        labels.push(
            body.parse()
                .map_err(|_| Error::parse(k + 1, format!("invalid label `{body}`")))?,
        );
    }
    Ok(smd_core::Labeling::new(labels))
}

//! Associative multi-label MRF energies.
//!
//! The energy of a labeling `t` is
//!
//! ```text
//! E(t) = sum_j theta_j(t_j) - sum_{(i,j)} [t_i = t_j] C_{ij, t_i} + star-prior terms
//! ```
//!
//! with every `C_{ij,p} >= 0`. Labels and nodes are 0-based.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::constraints::LinearConstraint;
use crate::error::{Error, Result};
use crate::shape::StarPrior;

/// Pixel-grid layout of the nodes, row-major (`node = row * width + col`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub height: usize,
    pub width: usize,
}

impl GridShape {
    pub fn new(height: usize, width: usize) -> Self {
        GridShape { height, width }
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node / self.width, node % self.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrfProblem {
    node_count: usize,
    label_count: usize,
    /// node-major, `node_count * label_count`
    unary: Vec<f64>,
    /// canonical `(i, j)` with `i < j`
    edges: Vec<(usize, usize)>,
    /// edge-major, `edges.len() * label_count`
    assoc: Vec<f64>,
    edge_set: BTreeSet<(usize, usize)>,
    constraints: Vec<LinearConstraint>,
    star_priors: Vec<StarPrior>,
    grid: Option<GridShape>,
}

impl MrfProblem {
    /// Creates a problem without edges. `unary` is node-major.
    pub fn new(node_count: usize, label_count: usize, unary: Vec<f64>) -> Result<Self> {
        if label_count < 2 {
            return Err(Error::TooFewLabels(label_count));
        }
        if unary.len() != node_count * label_count {
            return Err(Error::DimensionMismatch {
                what: "unary table",
                expected: node_count * label_count,
                got: unary.len(),
            });
        }
        if unary.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("unary table"));
        }
        Ok(MrfProblem {
            node_count,
            label_count,
            unary,
            edges: Vec::new(),
            assoc: Vec::new(),
            edge_set: BTreeSet::new(),
            constraints: Vec::new(),
            star_priors: Vec::new(),
            grid: None,
        })
    }

    /// Adds an undirected edge with per-label strengths `C_{ij,p}`.
    /// The edge is stored as `(min, max)`; returns its index.
    pub fn add_edge(&mut self, i: usize, j: usize, strengths: &[f64]) -> Result<usize> {
        for &v in &[i, j] {
            if v >= self.node_count {
                return Err(Error::NodeOutOfRange {
                    index: v,
                    count: self.node_count,
                });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        if strengths.len() != self.label_count {
            return Err(Error::DimensionMismatch {
                what: "edge strengths",
                expected: self.label_count,
                got: strengths.len(),
            });
        }
        for (label, &value) in strengths.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite("edge strengths"));
            }
            if value < 0.0 {
                return Err(Error::NegativeStrength { i, j, label, value });
            }
        }
        let key = (i.min(j), i.max(j));
        if !self.edge_set.insert(key) {
            return Err(Error::DuplicateEdge { i: key.0, j: key.1 });
        }
        self.edges.push(key);
        self.assoc.extend_from_slice(strengths);
        Ok(self.edges.len() - 1)
    }

    /// Adds an edge whose strength is shared by all labels (generalized Potts).
    pub fn add_potts_edge(&mut self, i: usize, j: usize, strength: f64) -> Result<usize> {
        let strengths = vec![strength; self.label_count];
        self.add_edge(i, j, &strengths)
    }

    pub fn add_constraint(&mut self, constraint: LinearConstraint) -> Result<()> {
        constraint.check_dimensions(self.node_count, self.label_count)?;
        self.constraints.push(constraint);
        Ok(())
    }

    pub fn add_star_prior(&mut self, prior: StarPrior) -> Result<()> {
        if prior.label() >= self.label_count {
            return Err(Error::LabelOutOfRange {
                label: prior.label(),
                count: self.label_count,
            });
        }
        if prior.parents().len() != self.node_count {
            return Err(Error::DimensionMismatch {
                what: "star prior parent map",
                expected: self.node_count,
                got: prior.parents().len(),
            });
        }
        self.star_priors.push(prior);
        Ok(())
    }

    pub fn set_grid(&mut self, grid: GridShape) -> Result<()> {
        if grid.len() != self.node_count {
            return Err(Error::DimensionMismatch {
                what: "grid shape",
                expected: self.node_count,
                got: grid.len(),
            });
        }
        self.grid = Some(grid);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn unary(&self, node: usize, label: usize) -> f64 {
        self.unary[node * self.label_count + label]
    }

    pub fn unary_row(&self, node: usize) -> &[f64] {
        &self.unary[node * self.label_count..(node + 1) * self.label_count]
    }

    pub fn strength(&self, edge: usize, label: usize) -> f64 {
        self.assoc[edge * self.label_count + label]
    }

    pub fn strengths(&self, edge: usize) -> &[f64] {
        &self.assoc[edge * self.label_count..(edge + 1) * self.label_count]
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn star_priors(&self) -> &[StarPrior] {
        &self.star_priors
    }

    pub fn grid(&self) -> Option<GridShape> {
        self.grid
    }

    /// Adjacency lists of the MRF graph (star-prior links excluded).
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    pub fn check_labeling(&self, labeling: &Labeling) -> Result<()> {
        if labeling.len() != self.node_count {
            return Err(Error::DimensionMismatch {
                what: "labeling",
                expected: self.node_count,
                got: labeling.len(),
            });
        }
        if let Some(&label) = labeling.as_slice().iter().find(|&&l| l >= self.label_count) {
            return Err(Error::LabelOutOfRange {
                label,
                count: self.label_count,
            });
        }
        Ok(())
    }

    /// Energy of a labeling, star-prior penalties included. A labeling that
    /// breaks a star prior has infinite energy.
    pub fn energy(&self, labeling: &Labeling) -> Result<f64> {
        self.check_labeling(labeling)?;
        let t = labeling.as_slice();
        let mut total = 0.0;
        for (j, &label) in t.iter().enumerate() {
            total += self.unary(j, label);
        }
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            if t[i] == t[j] {
                total -= self.strength(e, t[i]);
            }
        }
        for prior in &self.star_priors {
            total += prior.penalty(|node| t[node] == prior.label());
        }
        Ok(total)
    }

    /// Literal evaluation of the indicator form; rows of `y` need not sum to one.
    pub fn energy_indicator(&self, y: &IndicatorMatrix) -> Result<f64> {
        if y.node_count() != self.node_count || y.label_count() != self.label_count {
            return Err(Error::DimensionMismatch {
                what: "indicator matrix",
                expected: self.node_count * self.label_count,
                got: y.node_count() * y.label_count(),
            });
        }
        let mut total = 0.0;
        for j in 0..self.node_count {
            for p in 0..self.label_count {
                if y.get(j, p) {
                    total += self.unary(j, p);
                }
            }
        }
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            for p in 0..self.label_count {
                if y.get(i, p) && y.get(j, p) {
                    total -= self.strength(e, p);
                }
            }
        }
        for prior in &self.star_priors {
            total += prior.penalty(|node| y.get(node, prior.label()));
        }
        Ok(total)
    }
}

/// One label per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labeling(Vec<usize>);

impl Labeling {
    pub fn new(labels: Vec<usize>) -> Self {
        Labeling(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn get(&self, node: usize) -> usize {
        self.0[node]
    }

    pub fn indicator(&self, label_count: usize) -> IndicatorMatrix {
        indicator_of(self, label_count)
    }

    /// Number of nodes carrying each label.
    pub fn class_sizes(&self, label_count: usize) -> Vec<usize> {
        let mut sizes = vec![0; label_count];
        for &l in &self.0 {
            sizes[l] += 1;
        }
        sizes
    }
}

impl From<Vec<usize>> for Labeling {
    fn from(v: Vec<usize>) -> Self {
        Labeling(v)
    }
}

/// Binary matrix `y[j][p]`, node-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    node_count: usize,
    label_count: usize,
    data: Vec<bool>,
}

impl IndicatorMatrix {
    pub fn zeros(node_count: usize, label_count: usize) -> Self {
        IndicatorMatrix {
            node_count,
            label_count,
            data: vec![false; node_count * label_count],
        }
    }

    /// Builds the matrix from per-label columns.
    pub fn from_columns(columns: &[&[bool]]) -> Result<Self> {
        let label_count = columns.len();
        let node_count = columns.first().map_or(0, |c| c.len());
        let mut y = IndicatorMatrix::zeros(node_count, label_count);
        for (p, col) in columns.iter().enumerate() {
            if col.len() != node_count {
                return Err(Error::DimensionMismatch {
                    what: "indicator column",
                    expected: node_count,
                    got: col.len(),
                });
            }
            for (j, &v) in col.iter().enumerate() {
                y.set(j, p, v);
            }
        }
        Ok(y)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn get(&self, node: usize, label: usize) -> bool {
        self.data[node * self.label_count + label]
    }

    pub fn set(&mut self, node: usize, label: usize, value: bool) {
        self.data[node * self.label_count + label] = value;
    }

    pub fn row(&self, node: usize) -> &[bool] {
        &self.data[node * self.label_count..(node + 1) * self.label_count]
    }

    pub fn row_sum(&self, node: usize) -> usize {
        self.row(node).iter().filter(|&&v| v).count()
    }

    /// Recovers the labeling when every row has exactly one entry set.
    pub fn labeling(&self) -> Option<Labeling> {
        (0..self.node_count)
            .map(|j| {
                let row = self.row(j);
                let mut set = row.iter().enumerate().filter(|(_, &v)| v);
                match (set.next(), set.next()) {
                    (Some((p, _)), None) => Some(p),
                    _ => None,
                }
            })
            .collect::<Option<Vec<_>>>()
            .map(Labeling)
    }
}

/// `y[j][p] = 1` iff `t_j = p`.
pub fn indicator_of(labeling: &Labeling, label_count: usize) -> IndicatorMatrix {
    let mut y = IndicatorMatrix::zeros(labeling.len(), label_count);
    for (j, &p) in labeling.as_slice().iter().enumerate() {
        y.set(j, p, true);
    }
    y
}

//! Exact minimization of submodular binary pairwise energies by s-t min-cut.
//!
//! The flow network uses the search-tree augmenting scheme of Boykov and
//! Kolmogorov. Node `j` ends on the source side iff `y_j = 1`; the returned
//! minimizer is the one whose set of ones is minimal (the nodes reachable
//! from the source in the final residual network).
//!
//! A solved [`CutResult`] keeps its residual network. Min-marginals and
//! unary updates restart the search from that residual flow instead of from
//! zero: raising or lowering a terminal capacity keeps the current flow
//! feasible, so only the few new augmenting paths have to be found.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `E(y_i, y_j)` as a 2x2 table; `e01` is the cost of `y_i = 0, y_j = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseTerm {
    pub i: usize,
    pub j: usize,
    pub e00: f64,
    pub e01: f64,
    pub e10: f64,
    pub e11: f64,
}

impl PairwiseTerm {
    pub fn new(i: usize, j: usize, e00: f64, e01: f64, e10: f64, e11: f64) -> Self {
        PairwiseTerm {
            i,
            j,
            e00,
            e01,
            e10,
            e11,
        }
    }

    /// Potts-style term costing `weight` when the endpoints disagree.
    pub fn potts(i: usize, j: usize, weight: f64) -> Self {
        PairwiseTerm::new(i, j, 0.0, weight, weight, 0.0)
    }

    pub fn value(&self, yi: bool, yj: bool) -> f64 {
        match (yi, yj) {
            (false, false) => self.e00,
            (false, true) => self.e01,
            (true, false) => self.e10,
            (true, true) => self.e11,
        }
    }

    pub fn is_submodular(&self) -> bool {
        self.e00 + self.e11 <= self.e01 + self.e10
    }

    fn abs_sum(&self) -> f64 {
        self.e00.abs() + self.e01.abs() + self.e10.abs() + self.e11.abs()
    }
}

/// `E(y) = offset + sum_j a_j y_j + sum_terms E_ij(y_i, y_j)` over `y in {0,1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryEnergy {
    pub unary: Vec<f64>,
    pub pairwise: Vec<PairwiseTerm>,
    pub offset: f64,
}

impl BinaryEnergy {
    pub fn new(node_count: usize) -> Self {
        BinaryEnergy {
            unary: vec![0.0; node_count],
            pairwise: Vec::new(),
            offset: 0.0,
        }
    }

    pub fn with_unary(unary: Vec<f64>) -> Self {
        BinaryEnergy {
            unary,
            pairwise: Vec::new(),
            offset: 0.0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.unary.len()
    }

    pub fn add_term(&mut self, term: PairwiseTerm) {
        self.pairwise.push(term);
    }

    pub fn evaluate(&self, y: &[bool]) -> f64 {
        let mut total = self.offset;
        for (a, &v) in self.unary.iter().zip(y) {
            if v {
                total += a;
            }
        }
        for t in &self.pairwise {
            total += t.value(y[t.i], y[t.j]);
        }
        total
    }

    /// Upper bound on any cut in the reduced network; clamping a node with
    /// this capacity can never be paid at an optimum.
    pub fn dominance_bound(&self) -> f64 {
        1.0 + self.unary.iter().map(|a| a.abs()).sum::<f64>()
            + self.pairwise.iter().map(PairwiseTerm::abs_sum).sum::<f64>()
    }

    /// Checks indices, finiteness and the submodularity inequality.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if self.unary.iter().any(|a| !a.is_finite()) || !self.offset.is_finite() {
            return Err(Error::NonFinite("binary energy unary"));
        }
        for (index, t) in self.pairwise.iter().enumerate() {
            for v in [t.i, t.j] {
                if v >= n {
                    return Err(Error::NodeOutOfRange { index: v, count: n });
                }
            }
            if t.i == t.j {
                return Err(Error::SelfLoop(t.i));
            }
            if ![t.e00, t.e01, t.e10, t.e11].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("binary energy pairwise term"));
            }
            let slack = t.e01 + t.e10 - t.e00 - t.e11;
            if slack < -1e-12 * (1.0 + t.abs_sum()) {
                return Err(Error::NonSubmodular { index });
            }
        }
        Ok(())
    }
}

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;

/// Residual network plus the search-tree state of the augmenting algorithm.
#[derive(Debug, Clone)]
struct FlowGraph {
    /// CSR offsets into the arc arrays
    first: Vec<u32>,
    head: Vec<u32>,
    sister: Vec<u32>,
    cap: Vec<f64>,
    /// source residual minus sink residual
    tr: Vec<f64>,
    parent: Vec<u32>,
    in_sink: Vec<bool>,
    ts: Vec<u32>,
    dist: Vec<u32>,
    queued: Vec<bool>,
    active: VecDeque<u32>,
    orphans: VecDeque<u32>,
    time: u32,
}

impl FlowGraph {
    /// `arcs` are `(from, to, capacity)`; each gets a zero-capacity sister.
    fn build(tr: Vec<f64>, arcs: &[(usize, usize, f64)]) -> Self {
        let n = tr.len();
        let mut degree = vec![0u32; n + 1];
        for &(u, v, _) in arcs {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut first = vec![0u32; n + 1];
        for v in 0..n {
            first[v + 1] = first[v] + degree[v];
        }
        let m = first[n] as usize;
        let mut fill: Vec<u32> = first[..n].to_vec();
        let mut head = vec![0u32; m];
        let mut sister = vec![0u32; m];
        let mut cap = vec![0.0; m];
        for &(u, v, c) in arcs {
            let a = fill[u];
            fill[u] += 1;
            let b = fill[v];
            fill[v] += 1;
            head[a as usize] = v as u32;
            head[b as usize] = u as u32;
            sister[a as usize] = b;
            sister[b as usize] = a;
            cap[a as usize] = c;
        }
        FlowGraph {
            first,
            head,
            sister,
            cap,
            tr,
            parent: vec![NONE; n],
            in_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            queued: vec![false; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
        }
    }

    fn node_count(&self) -> usize {
        self.tr.len()
    }

    fn arcs(&self, v: usize) -> core::ops::Range<usize> {
        self.first[v] as usize..self.first[v + 1] as usize
    }

    fn activate(&mut self, v: usize) {
        if !self.queued[v] {
            self.queued[v] = true;
            self.active.push_back(v as u32);
        }
    }

    /// Runs augmentation to a maximum flow from the current residual state.
    fn solve(&mut self) {
        let n = self.node_count();
        self.active.clear();
        self.orphans.clear();
        self.time = 0;
        for v in 0..n {
            self.parent[v] = NONE;
            self.queued[v] = false;
            self.ts[v] = 0;
            self.dist[v] = 0;
            if self.tr[v] != 0.0 {
                self.parent[v] = TERMINAL;
                self.in_sink[v] = self.tr[v] < 0.0;
                self.dist[v] = 1;
                self.activate(v);
            }
        }

        while let Some(i) = self.active.pop_front() {
            let i = i as usize;
            self.queued[i] = false;
            if self.parent[i] == NONE {
                continue;
            }
            let Some(middle) = self.grow(i) else {
                continue;
            };
            self.time += 1;
            self.augment(middle);
            while let Some(x) = self.orphans.pop_front() {
                self.adopt(x as usize);
            }
            // i may still have unexplored residual arcs
            if self.parent[i] != NONE && !self.queued[i] {
                self.queued[i] = true;
                self.active.push_front(i as u32);
            }
        }
    }

    /// Scans the arcs of active node `i`; returns the source-to-sink arc of
    /// an augmenting path if the two trees touch.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let sink_side = self.in_sink[i];
        for a in self.arcs(i) {
            let j = self.head[a] as usize;
            // residual arc pointing from the source tree toward the sink
            let toward = if sink_side { self.sister[a] as usize } else { a };
            if self.cap[toward] <= 0.0 {
                continue;
            }
            if self.parent[j] == NONE {
                self.in_sink[j] = sink_side;
                self.parent[j] = self.sister[a];
                self.ts[j] = self.ts[i];
                self.dist[j] = self.dist[i] + 1;
                self.activate(j);
            } else if self.in_sink[j] != sink_side {
                return Some(toward);
            } else if self.ts[j] <= self.ts[i] && self.dist[j] > self.dist[i] {
                self.parent[j] = self.sister[a];
                self.ts[j] = self.ts[i];
                self.dist[j] = self.dist[i] + 1;
            }
        }
        None
    }

    fn augment(&mut self, middle: usize) {
        let u = self.head[self.sister[middle] as usize] as usize;
        let v = self.head[middle] as usize;

        let mut bottleneck = self.cap[middle];
        let mut x = u;
        while self.parent[x] != TERMINAL {
            let a = self.parent[x] as usize;
            bottleneck = bottleneck.min(self.cap[self.sister[a] as usize]);
            x = self.head[a] as usize;
        }
        bottleneck = bottleneck.min(self.tr[x]);
        let mut x = v;
        while self.parent[x] != TERMINAL {
            let a = self.parent[x] as usize;
            bottleneck = bottleneck.min(self.cap[a]);
            x = self.head[a] as usize;
        }
        bottleneck = bottleneck.min(-self.tr[x]);

        self.cap[self.sister[middle] as usize] += bottleneck;
        self.cap[middle] -= bottleneck;

        let mut x = u;
        while self.parent[x] != TERMINAL {
            let a = self.parent[x] as usize;
            let s = self.sister[a] as usize;
            self.cap[a] += bottleneck;
            self.cap[s] -= bottleneck;
            let next = self.head[a] as usize;
            if self.cap[s] <= 0.0 {
                self.parent[x] = ORPHAN;
                self.orphans.push_back(x as u32);
            }
            x = next;
        }
        self.tr[x] -= bottleneck;
        if self.tr[x] <= 0.0 {
            self.parent[x] = ORPHAN;
            self.orphans.push_back(x as u32);
        }

        let mut x = v;
        while self.parent[x] != TERMINAL {
            let a = self.parent[x] as usize;
            let s = self.sister[a] as usize;
            self.cap[s] += bottleneck;
            self.cap[a] -= bottleneck;
            let next = self.head[a] as usize;
            if self.cap[a] <= 0.0 {
                self.parent[x] = ORPHAN;
                self.orphans.push_back(x as u32);
            }
            x = next;
        }
        self.tr[x] += bottleneck;
        if self.tr[x] >= 0.0 {
            self.parent[x] = ORPHAN;
            self.orphans.push_back(x as u32);
        }
    }

    /// Finds a new parent for orphan `x` or returns it to the free set.
    fn adopt(&mut self, x: usize) {
        let sink_side = self.in_sink[x];
        let mut best: Option<(usize, u32)> = None;
        for a in self.arcs(x) {
            let j = self.head[a] as usize;
            let residual = if sink_side {
                self.cap[a]
            } else {
                self.cap[self.sister[a] as usize]
            };
            if residual <= 0.0 || self.parent[j] == NONE || self.in_sink[j] != sink_side {
                continue;
            }
            // walk to the root to make sure j still hangs from a terminal
            let mut y = j;
            let mut d = 0u32;
            let valid = loop {
                if self.ts[y] == self.time {
                    d += self.dist[y];
                    break true;
                }
                let pa = self.parent[y];
                d += 1;
                if pa == TERMINAL {
                    self.ts[y] = self.time;
                    self.dist[y] = 1;
                    break true;
                }
                if pa == ORPHAN {
                    break false;
                }
                y = self.head[pa as usize] as usize;
            };
            if !valid {
                continue;
            }
            if best.is_none_or(|(_, best_d)| d < best_d) {
                best = Some((a, d));
            }
            let mut y = j;
            let mut dd = d;
            while self.ts[y] != self.time {
                self.ts[y] = self.time;
                self.dist[y] = dd;
                dd -= 1;
                y = self.head[self.parent[y] as usize] as usize;
            }
        }

        if let Some((a, d)) = best {
            self.parent[x] = a as u32;
            self.ts[x] = self.time;
            self.dist[x] = d + 1;
            return;
        }

        for a in self.arcs(x) {
            let j = self.head[a] as usize;
            let pa = self.parent[j];
            if pa == NONE || self.in_sink[j] != sink_side {
                continue;
            }
            let residual = if sink_side {
                self.cap[a]
            } else {
                self.cap[self.sister[a] as usize]
            };
            if residual > 0.0 {
                self.activate(j);
            }
            if pa != TERMINAL && pa != ORPHAN && self.head[pa as usize] as usize == x {
                self.parent[j] = ORPHAN;
                self.orphans.push_back(j as u32);
            }
        }
        self.parent[x] = NONE;
    }

    fn source_side(&self) -> Vec<bool> {
        (0..self.node_count())
            .map(|v| self.parent[v] != NONE && !self.in_sink[v])
            .collect()
    }
}

/// Reduces the energy to a flow network. Node `j` on the source side means
/// `y_j = 1`, so an arc `u -> v` is cut when `y_u = 1, y_v = 0`.
fn reduce(energy: &BinaryEnergy) -> FlowGraph {
    // linear coefficient: cost(y=1) - cost(y=0)
    let mut lin = energy.unary.clone();
    let mut arcs = Vec::with_capacity(energy.pairwise.len());
    for t in &energy.pairwise {
        // E = e00 + (e10 - e00) y_i + (e11 - e10) y_j + w (1 - y_i) y_j
        lin[t.i] += t.e10 - t.e00;
        lin[t.j] += t.e11 - t.e10;
        let w = t.e01 + t.e10 - t.e00 - t.e11;
        if w > 0.0 {
            arcs.push((t.j, t.i, w));
        }
    }
    let tr = lin.into_iter().map(|l| -l).collect();
    FlowGraph::build(tr, &arcs)
}

/// A minimizer of a [`BinaryEnergy`] together with its solved flow network.
#[derive(Debug, Clone)]
pub struct CutResult {
    energy: BinaryEnergy,
    graph: FlowGraph,
    argmin: Vec<bool>,
    min_value: f64,
    clamp: f64,
}

impl CutResult {
    fn from_graph(energy: BinaryEnergy, mut graph: FlowGraph) -> Self {
        graph.solve();
        let argmin = graph.source_side();
        let min_value = energy.evaluate(&argmin);
        let clamp = energy.dominance_bound();
        CutResult {
            energy,
            graph,
            argmin,
            min_value,
            clamp,
        }
    }

    pub fn argmin(&self) -> &[bool] {
        &self.argmin
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn energy(&self) -> &BinaryEnergy {
        &self.energy
    }

    /// Minimizer and value with node `node` fixed to `value`.
    pub fn clamped(&self, node: usize, value: bool) -> (Vec<bool>, f64) {
        if self.argmin[node] == value {
            return (self.argmin.clone(), self.min_value);
        }
        let mut graph = self.graph.clone();
        if value {
            graph.tr[node] += self.clamp;
        } else {
            graph.tr[node] -= self.clamp;
        }
        graph.solve();
        let y = graph.source_side();
        debug_assert_eq!(y[node], value);
        let v = self.energy.evaluate(&y);
        (y, v)
    }

    /// `[min over y_node = 0, min over y_node = 1]`.
    pub fn min_marginal(&self, node: usize) -> [f64; 2] {
        let other = !self.argmin[node];
        let (_, v) = self.clamped(node, other);
        if other {
            [self.min_value, v]
        } else {
            [v, self.min_value]
        }
    }

    /// Adds `delta` to the unary coefficient of each listed node and
    /// re-solves from the current residual flow.
    pub fn shift_unary(&mut self, shifts: &[(usize, f64)]) {
        for &(node, delta) in shifts {
            self.energy.unary[node] += delta;
            self.graph.tr[node] -= delta;
        }
        self.graph.solve();
        self.argmin = self.graph.source_side();
        self.min_value = self.energy.evaluate(&self.argmin);
        self.clamp = self.energy.dominance_bound();
    }
}

/// Global minimizer of a submodular binary energy.
pub fn minimize(energy: &BinaryEnergy) -> Result<CutResult> {
    energy.validate()?;
    let graph = reduce(energy);
    Ok(CutResult::from_graph(energy.clone(), graph))
}

/// `m[j] = [min E | y_j = 0, min E | y_j = 1]` for every node.
pub fn min_marginals(energy: &BinaryEnergy) -> Result<Vec<[f64; 2]>> {
    let cut = minimize(energy)?;
    Ok((0..energy.node_count()).map(|j| cut.min_marginal(j)).collect())
}

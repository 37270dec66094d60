//! Optimal label sets of the subproblems, agreement conditions and primal
//! reconstruction.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::SubproblemSolution;
use crate::error::{Error, Result};
use crate::problem::{Labeling, MrfProblem};

/// Values of `y_jp` attained by some minimizer of subproblem `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelSet {
    Zero,
    One,
    Both,
}

impl LabelSet {
    pub fn from_min_marginal(m: [f64; 2], tol: f64) -> Self {
        let low = m[0].min(m[1]) + tol;
        match (m[0] <= low, m[1] <= low) {
            (true, true) => LabelSet::Both,
            (false, true) => LabelSet::One,
            _ => LabelSet::Zero,
        }
    }

    pub fn contains(self, value: bool) -> bool {
        match self {
            LabelSet::Both => true,
            LabelSet::One => value,
            LabelSet::Zero => !value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSetTable {
    node_count: usize,
    label_count: usize,
    sets: Vec<LabelSet>,
}

impl LabelSetTable {
    /// Table from node-major sets.
    pub fn new(node_count: usize, label_count: usize, sets: Vec<LabelSet>) -> Result<Self> {
        if sets.len() != node_count * label_count {
            return Err(Error::DimensionMismatch {
                what: "label set table",
                expected: node_count * label_count,
                got: sets.len(),
            });
        }
        Ok(LabelSetTable {
            node_count,
            label_count,
            sets,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn get(&self, node: usize, label: usize) -> LabelSet {
        self.sets[node * self.label_count + label]
    }

    pub fn row(&self, node: usize) -> &[LabelSet] {
        &self.sets[node * self.label_count..(node + 1) * self.label_count]
    }

    /// `j` with `Z_jp = {0, 1}` for some `p`.
    pub fn is_free_somewhere(&self, node: usize) -> bool {
        self.row(node).contains(&LabelSet::Both)
    }
}

pub fn label_sets(solutions: &[SubproblemSolution], tol: f64) -> LabelSetTable {
    let label_count = solutions.len();
    let node_count = solutions.first().map_or(0, |s| s.argmin().len());
    let mut sets = Vec::with_capacity(node_count * label_count);
    for j in 0..node_count {
        for s in solutions {
            sets.push(LabelSet::from_min_marginal(s.min_marginal(j), tol));
        }
    }
    LabelSetTable {
        node_count,
        label_count,
        sets,
    }
}

pub fn strong_agreement(table: &LabelSetTable) -> bool {
    (0..table.node_count).all(|j| {
        let row = table.row(j);
        row.iter().filter(|&&z| z == LabelSet::One).count() == 1
            && row.iter().all(|&z| z != LabelSet::Both)
    })
}

fn node_weakly_agrees(row: &[LabelSet]) -> bool {
    if !row.iter().any(|z| z.contains(true)) {
        return false;
    }
    row.iter().filter(|&&z| z == LabelSet::One).count() <= 1
}

pub fn weak_agreement(table: &LabelSetTable) -> bool {
    (0..table.node_count).all(|j| node_weakly_agrees(table.row(j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agreement {
    Strong,
    Weak,
    None,
}

impl fmt::Display for Agreement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agreement::Strong => "strong",
            Agreement::Weak => "weak",
            Agreement::None => "none",
        })
    }
}

/// Same answer as building the full table and testing both conditions, but
/// min-marginals are only computed where the argmins alone do not decide.
pub fn agreement_status(solutions: &[SubproblemSolution], tol: f64) -> Agreement {
    let node_count = solutions.first().map_or(0, |s| s.argmin().len());
    let row_sum = |j: usize| solutions.iter().filter(|s| s.argmin()[j]).count();
    let set = |j: usize, s: &SubproblemSolution| LabelSet::from_min_marginal(s.min_marginal(j), tol);

    let mut weak = true;
    let mut single = true;
    for j in 0..node_count {
        match row_sum(j) {
            // the argmins themselves pick a label
            1 => {}
            0 => {
                single = false;
                if !solutions.iter().any(|s| set(j, s).contains(true)) {
                    weak = false;
                    break;
                }
            }
            _ => {
                single = false;
                // every selected label has 1 in Z; at most one may exclude 0
                let forced = solutions
                    .iter()
                    .filter(|s| s.argmin()[j] && set(j, s) == LabelSet::One)
                    .count();
                if forced > 1 {
                    weak = false;
                    break;
                }
            }
        }
    }
    if !weak {
        return Agreement::None;
    }
    if single
        && (0..node_count).all(|j| solutions.iter().all(|s| set(j, s) != LabelSet::Both))
    {
        return Agreement::Strong;
    }
    Agreement::Weak
}

/// The labeling selected by the argmins when every node picks exactly one
/// label.
pub fn selected_labeling(solutions: &[SubproblemSolution]) -> Option<Labeling> {
    let node_count = solutions.first().map_or(0, |s| s.argmin().len());
    let mut labels = Vec::with_capacity(node_count);
    for j in 0..node_count {
        let mut chosen = None;
        for s in solutions {
            if s.argmin()[j] {
                if chosen.is_some() {
                    return None;
                }
                chosen = Some(s.label());
            }
        }
        labels.push(chosen?);
    }
    Some(Labeling::new(labels))
}

/// Connected components of `members` in the graph given by `neighbors`, each
/// sorted, ordered by smallest node.
fn components(neighbors: &[Vec<usize>], members: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; members.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..members.len() {
        if !members[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &u in &neighbors[v] {
                if members[u] && !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Free nodes `{j : Z_jp = {0, 1}}` of every label and their connected
/// components in the problem graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeDecomposition {
    free: Vec<Vec<bool>>,
    components: Vec<Vec<Vec<usize>>>,
}

impl FreeDecomposition {
    pub fn new(problem: &MrfProblem, table: &LabelSetTable) -> Self {
        let neighbors = problem.neighbors();
        let mut free = Vec::with_capacity(table.label_count);
        let mut comps = Vec::with_capacity(table.label_count);
        for p in 0..table.label_count {
            let members: Vec<bool> = (0..table.node_count)
                .map(|j| table.get(j, p) == LabelSet::Both)
                .collect();
            comps.push(components(&neighbors, &members));
            free.push(members);
        }
        FreeDecomposition {
            free,
            components: comps,
        }
    }

    pub fn is_free(&self, node: usize, label: usize) -> bool {
        self.free[label][node]
    }

    pub fn components(&self, label: usize) -> &[Vec<usize>] {
        &self.components[label]
    }
}

/// Checks that setting the free nodes of `solution` to all ones or all zeros,
/// jointly and per connected component, keeps the subproblem at its minimum.
/// Components follow the subproblem's own pairwise terms.
pub fn free_flip_check(solution: &SubproblemSolution, tol: f64) -> bool {
    let energy = solution.energy();
    let n = energy.node_count();
    let mut neighbors = vec![Vec::new(); n];
    for t in &energy.pairwise {
        neighbors[t.i].push(t.j);
        neighbors[t.j].push(t.i);
    }
    let free: Vec<bool> = (0..n)
        .map(|j| LabelSet::from_min_marginal(solution.min_marginal(j), tol) == LabelSet::Both)
        .collect();
    let base = solution.value();
    let close = |v: f64| (v - base).abs() <= 1e-9 * (1.0 + base.abs());
    let mut groups = components(&neighbors, &free);
    groups.push((0..n).filter(|&j| free[j]).collect());
    groups.iter().all(|group| {
        [false, true].iter().all(|&value| {
            let mut y = solution.argmin().to_vec();
            for &j in group {
                y[j] = value;
            }
            close(energy.evaluate(&y))
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reconstruction {
    Labeling(Labeling),
    /// Nodes no disjoint cover by free components could reach.
    Conflict(Vec<usize>),
}

const COVER_STATE_LIMIT: usize = 1000;

struct CoverSearch<'a> {
    pieces: &'a [(usize, &'a [usize])],
    by_node: Vec<Vec<usize>>,
    covered: Vec<bool>,
    chosen: Vec<usize>,
    states: usize,
}

impl CoverSearch<'_> {
    fn run(&mut self, need: &[usize]) -> bool {
        let Some(&next) = need.iter().find(|&&j| !self.covered[j]) else {
            return true;
        };
        for k in 0..self.by_node[next].len() {
            let piece = self.by_node[next][k];
            let nodes = self.pieces[piece].1;
            if nodes.iter().any(|&j| self.covered[j]) {
                continue;
            }
            self.states += 1;
            if self.states > COVER_STATE_LIMIT {
                return false;
            }
            for &j in nodes {
                self.covered[j] = true;
            }
            self.chosen.push(piece);
            if self.run(need) {
                return true;
            }
            self.chosen.pop();
            for &j in nodes {
                self.covered[j] = false;
            }
        }
        false
    }
}

/// Labels the nodes outside any free set by their unique `Z = {1}` label and
/// covers the rest by disjoint free components, each taking its own label.
pub fn reconstruct_primal(table: &LabelSetTable, free: &FreeDecomposition) -> Result<Reconstruction> {
    if !weak_agreement(table) {
        return Err(Error::WeakAgreementViolated);
    }
    let n = table.node_count;
    let mut labels = vec![usize::MAX; n];
    let mut need = Vec::new();
    for (j, label) in labels.iter_mut().enumerate() {
        if table.is_free_somewhere(j) {
            need.push(j);
        } else if let Some(p) = table.row(j).iter().position(|&z| z == LabelSet::One) {
            *label = p;
        }
    }
    // a component may take label p only where no other label is forced to 1
    let mut pieces: Vec<(usize, &[usize])> = Vec::new();
    for p in 0..table.label_count {
        for comp in free.components(p) {
            let admissible = comp.iter().all(|&j| {
                table
                    .row(j)
                    .iter()
                    .enumerate()
                    .all(|(q, &z)| q == p || z != LabelSet::One)
            });
            if admissible {
                pieces.push((p, comp));
            }
        }
    }
    pieces.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    let mut by_node = vec![Vec::new(); n];
    for (k, (_, nodes)) in pieces.iter().enumerate() {
        for &j in *nodes {
            by_node[j].push(k);
        }
    }
    let mut search = CoverSearch {
        pieces: &pieces,
        by_node,
        covered: vec![false; n],
        chosen: Vec::new(),
        states: 0,
    };
    if !search.run(&need) {
        let uncovered = need.into_iter().filter(|&j| !search.covered[j]).collect();
        return Ok(Reconstruction::Conflict(uncovered));
    }
    for &k in &search.chosen {
        let (p, nodes) = pieces[k];
        for &j in nodes {
            labels[j] = p;
        }
    }
    debug_assert!(labels.iter().all(|&l| l != usize::MAX));
    Ok(Reconstruction::Labeling(Labeling::new(labels)))
}

/// Fallback primal: nodes selected by exactly one subproblem keep that label;
/// each connected group of nodes selected by several subproblems gets one
/// label drawn from the union of their selections; unselected nodes take the
/// label with the cheapest `y_jp = 1` min-marginal.
pub fn heuristic_primal(problem: &MrfProblem, solutions: &[SubproblemSolution], seed: u64) -> Labeling {
    let n = problem.node_count();
    let selected: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            solutions
                .iter()
                .filter(|s| s.argmin()[j])
                .map(SubproblemSolution::label)
                .collect()
        })
        .collect();
    let mut labels = vec![0usize; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conflicting: Vec<bool> = selected.iter().map(|s| s.len() >= 2).collect();
    for comp in components(&problem.neighbors(), &conflicting) {
        let mut union: Vec<usize> = comp.iter().flat_map(|&j| selected[j].iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        let label = union[rng.random_range(0..union.len())];
        for j in comp {
            labels[j] = label;
        }
    }
    for j in 0..n {
        match selected[j].len() {
            0 => {
                let mut best = (f64::INFINITY, 0);
                for s in solutions {
                    let v = s.min_marginal(j)[1];
                    if v < best.0 {
                        best = (v, s.label());
                    }
                }
                labels[j] = best.1;
            }
            1 => labels[j] = selected[j][0],
            _ => {}
        }
    }
    Labeling::new(labels)
}

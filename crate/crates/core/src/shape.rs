//! Star-shape priors on a pixel grid.
//!
//! Every non-center pixel `i` is linked to a parent `j` lying between `i` and
//! the center. A segment is star-shaped when `y_i = 1` implies `y_j = 1` along
//! every such link. The prior adds the term
//!
//! ```text
//! S(y_i, y_j) = 0 if y_i = y_j, infinity if y_i = 1 and y_j = 0, beta if y_i = 0 and y_j = 1
//! ```
//!
//! to the binary subproblem of its label; infinity is realized as a finite
//! capacity that dominates every other cut.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::maxflow::PairwiseTerm;
use crate::problem::GridShape;

/// Neighbor scan order used to break ties: E, W, N, S, NE, NW, SE, SW.
const NEIGHBORS: [(i64, i64); 8] = [
    (0, 1),
    (0, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (-1, -1),
    (1, 1),
    (1, -1),
];

/// Squared distance from `point` to the segment `[a, b]`, as an exact
/// fraction `num / den`.
fn segment_distance2(point: (i64, i64), a: (i64, i64), b: (i64, i64)) -> (i128, i128) {
    let (px, py) = ((point.0 - a.0) as i128, (point.1 - a.1) as i128);
    let (dx, dy) = ((b.0 - a.0) as i128, (b.1 - a.1) as i128);
    let len2 = dx * dx + dy * dy;
    let dot = px * dx + py * dy;
    if dot <= 0 || len2 == 0 {
        (px * px + py * py, 1)
    } else if dot >= len2 {
        let (qx, qy) = (px - dx, py - dy);
        (qx * qx + qy * qy, 1)
    } else {
        let cross = px * dy - py * dx;
        (cross * cross, len2)
    }
}

/// Parent of every pixel on the discrete ray toward `center` (`None` at the
/// center). `center` is `(row, col)`.
pub fn build_parent_map(grid: GridShape, center: (usize, usize)) -> Result<Vec<Option<usize>>> {
    if center.0 >= grid.height || center.1 >= grid.width {
        return Err(Error::InvalidArgument("star center outside the grid"));
    }
    let c = (center.0 as i64, center.1 as i64);
    let dist2 = |p: (i64, i64)| (p.0 - c.0).pow(2) + (p.1 - c.1).pow(2);
    let mut parents = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let (r, col) = grid.coords(node);
        let here = (r as i64, col as i64);
        if here == c {
            parents.push(None);
            continue;
        }
        let mut best: Option<((i128, i128), usize)> = None;
        for (dr, dc) in NEIGHBORS {
            let n = (here.0 + dr, here.1 + dc);
            if n.0 < 0 || n.1 < 0 || n.0 >= grid.height as i64 || n.1 >= grid.width as i64 {
                continue;
            }
            if dist2(n) >= dist2(here) {
                continue;
            }
            let d = segment_distance2(n, c, here);
            let better = match best {
                None => true,
                Some(((num, den), _)) => d.0 * den < num * d.1,
            };
            if better {
                best = Some((d, grid.node(n.0 as usize, n.1 as usize)));
            }
        }
        // the diagonal/axis step toward the center always qualifies
        parents.push(best.map(|(_, p)| p));
    }
    Ok(parents)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarPrior {
    label: usize,
    center: usize,
    beta: f64,
    parents: Vec<Option<usize>>,
}

impl StarPrior {
    /// Star prior for `label` centered at node `center` of `grid`.
    pub fn on_grid(label: usize, grid: GridShape, center: usize, beta: f64) -> Result<Self> {
        if center >= grid.len() {
            return Err(Error::NodeOutOfRange {
                index: center,
                count: grid.len(),
            });
        }
        let parents = build_parent_map(grid, grid.coords(center))?;
        StarPrior::with_parents(label, center, beta, parents)
    }

    /// Star prior from an explicit parent map. The map must be rooted at
    /// `center` and free of cycles.
    pub fn with_parents(
        label: usize,
        center: usize,
        beta: f64,
        parents: Vec<Option<usize>>,
    ) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidArgument("star prior beta must be finite and >= 0"));
        }
        let n = parents.len();
        if center >= n {
            return Err(Error::NodeOutOfRange {
                index: center,
                count: n,
            });
        }
        if parents[center].is_some() {
            return Err(Error::InvalidArgument("star center must not have a parent"));
        }
        for (node, parent) in parents.iter().enumerate() {
            match parent {
                None if node != center => {
                    return Err(Error::InvalidArgument("star parent map has a second root"))
                }
                Some(p) if *p >= n => {
                    return Err(Error::NodeOutOfRange { index: *p, count: n })
                }
                _ => {}
            }
        }
        // every walk must reach the center within n steps
        for start in 0..n {
            let mut v = start;
            let mut steps = 0;
            while let Some(p) = parents[v] {
                v = p;
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidArgument("star parent map has a cycle"));
                }
            }
        }
        Ok(StarPrior {
            label,
            center,
            beta,
            parents,
        })
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    /// `(child, parent)` links.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (i, p)))
    }

    /// Pairwise terms `(child, parent, 0, beta, big_m, 0)`.
    pub fn star_terms(&self, big_m: f64) -> Vec<PairwiseTerm> {
        self.links()
            .map(|(i, j)| PairwiseTerm::new(i, j, 0.0, self.beta, big_m, 0.0))
            .collect()
    }

    /// Prior energy of the segment `{j : inside(j)}`: infinite if it is not
    /// star-shaped, `beta` per link that leaves the segment outward otherwise.
    pub fn penalty(&self, inside: impl Fn(usize) -> bool) -> f64 {
        let mut total = 0.0;
        for (i, j) in self.links() {
            match (inside(i), inside(j)) {
                (true, false) => return f64::INFINITY,
                (false, true) => total += self.beta,
                _ => {}
            }
        }
        total
    }

    /// Whether `segment` is closed under taking parents (and therefore
    /// contains the center when nonempty).
    pub fn is_star_shaped(&self, segment: &[bool]) -> bool {
        self.links().all(|(i, j)| !segment[i] || segment[j])
    }
}

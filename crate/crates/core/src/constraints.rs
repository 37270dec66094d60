//! Global linear constraints on the label indicators:
//! `sum_{j,p} w_jp y_jp = c` (equality) or `<= d` (inequality).

use alloc::string::String;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::problem::{Labeling, MrfProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Equality,
    /// `sum w y <= rhs`
    Inequality,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub node: usize,
    pub label: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    kind: ConstraintKind,
    /// sorted by (node, label), no repeated keys
    weights: Vec<Weight>,
    rhs: f64,
    name: String,
}

impl LinearConstraint {
    /// Repeated `(node, label)` keys are summed.
    pub fn new(
        kind: ConstraintKind,
        weights: impl IntoIterator<Item = Weight>,
        rhs: f64,
        name: impl Into<String>,
    ) -> Result<Self> {
        let mut weights: Vec<Weight> = weights.into_iter().collect();
        if weights.iter().any(|w| !w.value.is_finite()) || !rhs.is_finite() {
            return Err(Error::NonFinite("constraint"));
        }
        weights.sort_by_key(|w| (w.node, w.label));
        let mut merged: Vec<Weight> = Vec::with_capacity(weights.len());
        for w in weights {
            match merged.last_mut() {
                Some(last) if last.node == w.node && last.label == w.label => {
                    last.value += w.value
                }
                _ => merged.push(w),
            }
        }
        Ok(LinearConstraint {
            kind,
            weights: merged,
            rhs,
            name: name.into(),
        })
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn rhs(&self) -> f64 {
        self.rhs
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub(crate) fn check_dimensions(&self, node_count: usize, label_count: usize) -> Result<()> {
        for w in &self.weights {
            if w.node >= node_count {
                return Err(Error::NodeOutOfRange {
                    index: w.node,
                    count: node_count,
                });
            }
            if w.label >= label_count {
                return Err(Error::LabelOutOfRange {
                    label: w.label,
                    count: label_count,
                });
            }
        }
        Ok(())
    }

    /// `sum w_jp y_jp` for an arbitrary binary `y`.
    pub fn lhs(&self, y: impl Fn(usize, usize) -> bool) -> f64 {
        self.weights
            .iter()
            .filter(|w| y(w.node, w.label))
            .map(|w| w.value)
            .sum()
    }

    pub fn lhs_labeling(&self, labeling: &Labeling) -> f64 {
        self.lhs(|j, p| labeling.get(j) == p)
    }

    /// `lhs - rhs` for equalities, `max(0, lhs - rhs)` for inequalities.
    pub fn residual(&self, labeling: &Labeling) -> f64 {
        let r = self.lhs_labeling(labeling) - self.rhs;
        match self.kind {
            ConstraintKind::Equality => r,
            ConstraintKind::Inequality => r.max(0.0),
        }
    }

    pub fn is_satisfied(&self, labeling: &Labeling, tol: f64) -> bool {
        self.residual(labeling).abs() <= tol
    }

    /// The label whose size this constraint fixes, if it has the form
    /// `sum_j y_jp = c` over all `node_count` nodes.
    pub fn class_size_label(&self, node_count: usize) -> Option<usize> {
        if self.kind != ConstraintKind::Equality || self.weights.len() != node_count {
            return None;
        }
        let label = self.weights.first()?.label;
        self.weights
            .iter()
            .enumerate()
            .all(|(j, w)| w.node == j && w.label == label && w.value == 1.0)
            .then_some(label)
    }
}

fn check_label(problem: &MrfProblem, label: usize) -> Result<()> {
    if label >= problem.label_count() {
        return Err(Error::LabelOutOfRange {
            label,
            count: problem.label_count(),
        });
    }
    Ok(())
}

fn label_column(problem: &MrfProblem, label: usize, value: f64) -> impl Iterator<Item = Weight> {
    (0..problem.node_count()).map(move |node| Weight { node, label, value })
}

/// `sum_j y_jp = size`.
pub fn strict_class_size(problem: &MrfProblem, label: usize, size: usize) -> Result<LinearConstraint> {
    check_label(problem, label)?;
    if size > problem.node_count() {
        return Err(Error::InvalidArgument("class size exceeds node count"));
    }
    LinearConstraint::new(
        ConstraintKind::Equality,
        label_column(problem, label, 1.0),
        size as f64,
        format!("size_{label}"),
    )
}

/// `min <= sum_j y_jp <= max` as two inequalities (upper, then lower).
pub fn soft_class_size(
    problem: &MrfProblem,
    label: usize,
    min: usize,
    max: usize,
) -> Result<(LinearConstraint, LinearConstraint)> {
    check_label(problem, label)?;
    if min > max {
        return Err(Error::InvalidArgument("soft class size needs min <= max"));
    }
    let upper = LinearConstraint::new(
        ConstraintKind::Inequality,
        label_column(problem, label, 1.0),
        max as f64,
        format!("size_max_{label}"),
    )?;
    let lower = LinearConstraint::new(
        ConstraintKind::Inequality,
        label_column(problem, label, -1.0),
        -(min as f64),
        format!("size_min_{label}"),
    )?;
    Ok((upper, lower))
}

/// `sum_j I_j y_jp = sum_j I_j y_jq`.
pub fn flux_equality(
    problem: &MrfProblem,
    p: usize,
    q: usize,
    intensities: &[f64],
) -> Result<LinearConstraint> {
    check_label(problem, p)?;
    check_label(problem, q)?;
    if p == q {
        return Err(Error::InvalidArgument("flux equality needs two distinct labels"));
    }
    if intensities.len() != problem.node_count() {
        return Err(Error::DimensionMismatch {
            what: "intensities",
            expected: problem.node_count(),
            got: intensities.len(),
        });
    }
    let weights = intensities.iter().enumerate().flat_map(|(node, &i)| {
        [
            Weight {
                node,
                label: p,
                value: i,
            },
            Weight {
                node,
                label: q,
                value: -i,
            },
        ]
    });
    LinearConstraint::new(ConstraintKind::Equality, weights, 0.0, format!("flux_{p}_{q}"))
}

/// `sum_j y_jp = sum_j y_jq`.
pub fn equal_class_sizes(problem: &MrfProblem, p: usize, q: usize) -> Result<LinearConstraint> {
    check_label(problem, p)?;
    check_label(problem, q)?;
    if p == q {
        return Err(Error::InvalidArgument("equal class sizes needs two distinct labels"));
    }
    let weights = label_column(problem, p, 1.0).chain(label_column(problem, q, -1.0));
    LinearConstraint::new(ConstraintKind::Equality, weights, 0.0, format!("equal_{p}_{q}"))
}

/// Mean and covariance of the observations `I_j` (dimension `d`) on the
/// segment of `label`, with `mean` and `covariance` (row-major `d x d`) held
/// fixed. Returns `d` mean rows followed by `d(d+1)/2` covariance rows
/// (upper triangle, row by row).
pub fn color_moment(
    problem: &MrfProblem,
    label: usize,
    intensities: &[Vec<f64>],
    mean: &[f64],
    covariance: &[f64],
) -> Result<Vec<LinearConstraint>> {
    check_label(problem, label)?;
    let d = mean.len();
    if intensities.len() != problem.node_count() {
        return Err(Error::DimensionMismatch {
            what: "intensities",
            expected: problem.node_count(),
            got: intensities.len(),
        });
    }
    if covariance.len() != d * d {
        return Err(Error::DimensionMismatch {
            what: "covariance",
            expected: d * d,
            got: covariance.len(),
        });
    }
    if let Some(bad) = intensities.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            what: "intensity vector",
            expected: d,
            got: bad.len(),
        });
    }
    let mut out = Vec::with_capacity(d + d * (d + 1) / 2);
    for a in 0..d {
        let weights = intensities.iter().enumerate().map(|(node, v)| Weight {
            node,
            label,
            value: v[a] - mean[a],
        });
        out.push(LinearConstraint::new(
            ConstraintKind::Equality,
            weights,
            0.0,
            format!("mean_{label}_{a}"),
        )?);
    }
    for a in 0..d {
        for b in a..d {
            let weights = intensities.iter().enumerate().map(|(node, v)| Weight {
                node,
                label,
                value: (v[a] - mean[a]) * (v[b] - mean[b]) - covariance[a * d + b],
            });
            out.push(LinearConstraint::new(
                ConstraintKind::Equality,
                weights,
                0.0,
                format!("cov_{label}_{a}_{b}"),
            )?);
        }
    }
    Ok(out)
}

/// Constraint residuals of a labeling plus the share of nodes that would
/// have to change label to meet the class-size targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub residuals: Vec<f64>,
    /// `(1/2) sum_p |size_p - target_p| / node_count` over strict class-size
    /// constraints; 0 when there are none.
    pub recolor_fraction: f64,
    pub has_class_sizes: bool,
}

impl ViolationReport {
    pub fn total_abs_residual(&self) -> f64 {
        // a plain f64 sum of nothing is -0
        self.residuals.iter().fold(0.0, |acc, r| acc + r.abs())
    }

    /// Single figure for traces: the recolor fraction when class sizes are
    /// constrained, otherwise the summed absolute residual.
    pub fn headline(&self) -> f64 {
        if self.has_class_sizes {
            self.recolor_fraction
        } else {
            self.total_abs_residual()
        }
    }
}

pub fn violation(problem: &MrfProblem, labeling: &Labeling) -> Result<ViolationReport> {
    problem.check_labeling(labeling)?;
    let residuals = problem
        .constraints()
        .iter()
        .map(|c| c.residual(labeling))
        .collect();
    let n = problem.node_count();
    let sizes = labeling.class_sizes(problem.label_count());
    let mut mismatch = 0.0;
    let mut has_class_sizes = false;
    for c in problem.constraints() {
        if let Some(label) = c.class_size_label(n) {
            has_class_sizes = true;
            mismatch += (sizes[label] as f64 - c.rhs()).abs();
        }
    }
    let recolor_fraction = if n == 0 { 0.0 } else { 0.5 * mismatch / n as f64 };
    Ok(ViolationReport {
        residuals,
        recolor_fraction,
        has_class_sizes,
    })
}

/// Class-size targets `round(n p / sum_q q)` for `p = 1..P`; the largest
/// class absorbs the rounding residue so the targets sum to `n`.
pub fn proportional_class_sizes(node_count: usize, label_count: usize) -> Vec<usize> {
    let total: usize = (1..=label_count).sum();
    let mut sizes: Vec<usize> = (1..=label_count)
        .map(|p| (node_count * p * 2 + total) / (2 * total))
        .collect();
    let assigned: usize = sizes.iter().sum();
    if let Some(last) = sizes.last_mut() {
        // rounding moves each class by at most 1/2, which the largest class covers
        *last = *last + node_count - assigned;
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn blank(n: usize, labels: usize) -> MrfProblem {
        MrfProblem::new(n, labels, vec![0.0; n * labels]).unwrap()
    }

    #[test]
    fn strict_class_size_weights() {
        let p = blank(2, 2);
        let c = strict_class_size(&p, 0, 1).unwrap();
        assert_eq!(c.kind(), ConstraintKind::Equality);
        assert_eq!(c.rhs(), 1.0);
        let keys: Vec<_> = c.weights().iter().map(|w| (w.node, w.label, w.value)).collect();
        assert_eq!(keys, vec![(0, 0, 1.0), (1, 0, 1.0)]);
        assert_eq!(c.class_size_label(2), Some(0));
        assert!(strict_class_size(&p, 0, 3).is_err());
    }

    #[test]
    fn soft_class_size_lower_violation() {
        let p = blank(4, 2);
        let (upper, lower) = soft_class_size(&p, 1, 2, 3).unwrap();
        let t = Labeling::new(vec![1, 0, 0, 0]);
        assert_eq!(upper.residual(&t), 0.0);
        assert_eq!(lower.residual(&t), 1.0);
        assert!(soft_class_size(&p, 1, 3, 2).is_err());
        let (u, l) = soft_class_size(&p, 1, 0, 4).unwrap();
        assert_eq!(u.residual(&Labeling::new(vec![1; 4])), 0.0);
        assert_eq!(l.residual(&Labeling::new(vec![0; 4])), 0.0);
    }

    #[test]
    fn flux_residuals() {
        let p = blank(2, 2);
        let c = flux_equality(&p, 0, 1, &[3.0, -3.0]).unwrap();
        assert_eq!(c.residual(&Labeling::new(vec![0, 1])), 6.0);
        assert_eq!(c.residual(&Labeling::new(vec![0, 0])), 0.0);
        assert_eq!(c.residual(&Labeling::new(vec![1, 1])), 0.0);
        assert_eq!(c.residual(&Labeling::new(vec![1, 0])), -6.0);
        let zero = flux_equality(&p, 0, 1, &[0.0, 0.0]).unwrap();
        assert_eq!(zero.residual(&Labeling::new(vec![0, 1])), 0.0);
        assert!(flux_equality(&p, 1, 1, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn color_moment_rows() {
        let p = blank(2, 2);
        let rows = color_moment(&p, 0, &[vec![1.0], vec![-1.0]], &[0.0], &[0.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].residual(&Labeling::new(vec![0, 0])), 0.0);
        // constant intensity with zero covariance
        let rows = color_moment(&p, 1, &[vec![2.0, 1.0], vec![2.0, 1.0]], &[2.0, 1.0], &[0.0; 4])
            .unwrap();
        assert_eq!(rows.len(), 5);
        for r in &rows {
            assert_eq!(r.residual(&Labeling::new(vec![1, 1])), 0.0);
        }
        assert!(color_moment(&p, 0, &[vec![1.0], vec![1.0]], &[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn recolor_fraction() {
        let mut p = blank(10, 4);
        for (label, size) in [1, 2, 3, 4].into_iter().enumerate() {
            let c = strict_class_size(&p, label, size).unwrap();
            p.add_constraint(c).unwrap();
        }
        // sizes (4, 2, 3, 1)
        let t = Labeling::new(vec![0, 0, 0, 0, 1, 1, 2, 2, 2, 3]);
        let report = violation(&p, &t).unwrap();
        assert!((report.recolor_fraction - 0.3).abs() < 1e-12);
        assert_eq!(report.residuals, vec![3.0, 0.0, 0.0, -3.0]);
        let ok = Labeling::new(vec![0, 1, 1, 2, 2, 2, 3, 3, 3, 3]);
        let report = violation(&p, &ok).unwrap();
        assert_eq!(report.recolor_fraction, 0.0);
        assert!(report.residuals.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn single_equality_residual() {
        let mut p = blank(5, 2);
        p.add_constraint(strict_class_size(&p, 1, 3).unwrap()).unwrap();
        let report = violation(&p, &Labeling::new(vec![1; 5])).unwrap();
        assert_eq!(report.residuals, vec![2.0]);
    }

    #[test]
    fn proportional_targets() {
        assert_eq!(proportional_class_sizes(10, 4), vec![1, 2, 3, 4]);
        assert_eq!(proportional_class_sizes(400, 5), vec![27, 53, 80, 107, 133]);
        for n in 0..60 {
            for labels in 2..8 {
                assert_eq!(proportional_class_sizes(n, labels).iter().sum::<usize>(), n);
            }
        }
    }
}

//! Multi-label MRF energy minimization by submodular decomposition.
//!
//! The energy is split into one binary graph-cut subproblem per label, tied
//! together by Lagrange multipliers that are optimized by supergradient
//! ascent and min-marginal averaging. Linear constraints on the label
//! indicators and star-shape priors fit into the same decomposition.

#![no_std]

extern crate alloc;

pub mod agreement;
pub mod constraints;
pub mod engine;
pub mod error;
pub mod maxflow;
pub mod oracle;
pub mod problem;
pub mod shape;
pub mod trace;

pub use agreement::{Agreement, LabelSet, LabelSetTable};
pub use constraints::{ConstraintKind, LinearConstraint, ViolationReport};
pub use engine::{optimize, optimize_with, DualState, Mode, SolveOutcome, SolverConfig};
pub use error::{Error, Result};
pub use maxflow::{BinaryEnergy, CutResult, PairwiseTerm};
pub use problem::{GridShape, IndicatorMatrix, Labeling, MrfProblem};
pub use shape::StarPrior;
pub use trace::{IterationRecord, IterationTrace};

use thiserror::Error;

/// Errors raised by model construction and the inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a problem needs at least two labels, got {0}")]
    TooFewLabels(usize),
    #[error("{what}: expected {expected} entries, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("node index {index} out of range for {count} nodes")]
    NodeOutOfRange { index: usize, count: usize },
    #[error("label index {label} out of range for {count} labels")]
    LabelOutOfRange { label: usize, count: usize },
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) is listed twice")]
    DuplicateEdge { i: usize, j: usize },
    #[error("edge ({i}, {j}) has negative strength {value} for label {label}")]
    NegativeStrength {
        i: usize,
        j: usize,
        label: usize,
        value: f64,
    },
    #[error("pairwise term {index} violates submodularity (e00 + e11 > e01 + e10)")]
    NonSubmodular { index: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("instance has {states} states, above the enumeration limit {limit}")]
    TooLarge { states: u128, limit: u128 },
    #[error(
        "bound decreased from {before} to {after} after the min-marginal update of node {node}"
    )]
    MonotonicityViolated { node: usize, before: f64, after: f64 },
    #[error("the label sets do not satisfy weak agreement")]
    WeakAgreementViolated,
}

pub type Result<T> = core::result::Result<T, Error>;

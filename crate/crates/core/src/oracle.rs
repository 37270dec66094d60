//! Exhaustive solvers for small instances.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::maxflow::BinaryEnergy;
use crate::problem::{Labeling, MrfProblem};

/// Largest number of labelings enumerated.
pub const STATE_LIMIT: u128 = 10_000_000;
/// Minimizers kept beyond the first.
pub const MINIMIZER_CAP: usize = 64;
/// Energies within this of the optimum count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;
pub const BINARY_NODE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `+inf` when no labeling is feasible.
    pub optimum: f64,
    /// Minimizers in enumeration order, at most [`MINIMIZER_CAP`].
    pub minimizers: Vec<Labeling>,
    pub enumerated: u64,
}

impl OracleResult {
    pub fn is_feasible(&self) -> bool {
        self.optimum.is_finite()
    }
}

fn state_count(problem: &MrfProblem) -> Result<u128> {
    let mut states: u128 = 1;
    for _ in 0..problem.node_count() {
        states = states.saturating_mul(problem.label_count() as u128);
        if states > STATE_LIMIT {
            return Err(Error::TooLarge {
                states,
                limit: STATE_LIMIT,
            });
        }
    }
    Ok(states)
}

fn enumerate(problem: &MrfProblem, admit: impl Fn(&Labeling) -> bool) -> Result<OracleResult> {
    state_count(problem)?;
    let n = problem.node_count();
    let labels = problem.label_count();
    let mut digits = vec![0usize; n];
    let mut result = OracleResult {
        optimum: f64::INFINITY,
        minimizers: Vec::new(),
        enumerated: 0,
    };
    loop {
        let labeling = Labeling::new(digits.clone());
        result.enumerated += 1;
        if admit(&labeling) {
            let e = problem.energy(&labeling)?;
            if e < result.optimum - TIE_TOLERANCE {
                result.optimum = e;
                result.minimizers.clear();
                result.minimizers.push(labeling);
            } else if e <= result.optimum + TIE_TOLERANCE {
                result.optimum = result.optimum.min(e);
                if result.minimizers.len() < MINIMIZER_CAP {
                    result.minimizers.push(labeling);
                }
            }
        }
        // mixed-radix increment, node 0 fastest
        let mut k = 0;
        loop {
            if k == n {
                return Ok(result);
            }
            digits[k] += 1;
            if digits[k] < labels {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Minimum energy over all labelings (constraints ignored).
pub fn brute_force(problem: &MrfProblem) -> Result<OracleResult> {
    enumerate(problem, |_| true)
}

/// Minimum energy over the labelings that satisfy every constraint.
pub fn brute_force_constrained(problem: &MrfProblem) -> Result<OracleResult> {
    enumerate(problem, |l| {
        problem
            .constraints()
            .iter()
            .all(|c| c.is_satisfied(l, TIE_TOLERANCE))
    })
}

/// Minimizer of a binary energy by enumeration; the first minimizer in
/// counting order (node 0 as the lowest bit) is returned.
pub fn brute_force_binary(energy: &BinaryEnergy) -> Result<(Vec<bool>, f64)> {
    let n = energy.node_count();
    if n > BINARY_NODE_LIMIT {
        return Err(Error::TooLarge {
            states: 1u128 << n.min(127),
            limit: 1u128 << BINARY_NODE_LIMIT,
        });
    }
    let mut best = (vec![false; n], f64::INFINITY);
    let mut y = vec![false; n];
    for mask in 0u32..(1u32 << n) {
        for (j, v) in y.iter_mut().enumerate() {
            *v = mask >> j & 1 == 1;
        }
        let e = energy.evaluate(&y);
        if e < best.1 {
            best = (y.clone(), e);
        }
    }
    Ok(best)
}

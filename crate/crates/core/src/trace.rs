//! Per-iteration record of an optimization run.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::agreement::Agreement;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Bound at this iteration's multipliers.
    pub bound: f64,
    pub best_bound: f64,
    pub primal_energy: f64,
    pub violation: f64,
    pub agreement: Agreement,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    records: Vec<IterationRecord>,
}

pub const CSV_HEADER: &str = "iter,lower_bound,primal_energy,violation,agreement,seconds";

impl IterationTrace {
    pub fn push(&mut self, record: IterationRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// CSV with the best bound so far in the `lower_bound` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iteration, r.best_bound, r.primal_energy, r.violation, r.agreement, r.seconds
            );
        }
        out
    }
}

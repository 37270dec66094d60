//! Submodular decomposition of the multi-label energy and maximization of
//! its Lagrangian dual.
//!
//! Subproblem `p` is the binary energy over the column `Y_p`
//!
//! ```text
//! Phi_p(Y_p) = sum_j (theta_jp - 1/2 sum_{i~j} C_ijp + lambda_j + sum_m mu_m w^m_jp + sum_k kappa_k v^k_jp) y_jp
//!            + sum_{(i,j)} 1/2 C_ijp [y_i != y_j]  (+ star-prior terms of label p)
//! ```
//!
//! and the dual bound is `sum_p min Phi_p - sum_j lambda_j - sum_m mu_m c^m - sum_k kappa_k d^k`.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use crate::agreement::{self, Agreement};
use crate::constraints::{violation, ConstraintKind};
use crate::error::{Error, Result};
use crate::maxflow::{minimize, BinaryEnergy, CutResult, PairwiseTerm};
use crate::problem::{Labeling, MrfProblem};
use crate::trace::{IterationRecord, IterationTrace};

/// Lagrange multipliers: `lambda` for the one-label-per-node coupling, `mu`
/// for equality constraints and `kappa >= 0` for inequality constraints (both
/// in the order they appear in the problem).
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub best_bound: f64,
    pub iteration: usize,
}

impl DualState {
    pub fn zeros(problem: &MrfProblem) -> Self {
        let (eq, ineq) = constraint_slots(problem);
        DualState {
            lambda: vec![0.0; problem.node_count()],
            mu: vec![0.0; eq],
            kappa: vec![0.0; ineq],
            best_bound: f64::NEG_INFINITY,
            iteration: 0,
        }
    }

    fn check(&self, problem: &MrfProblem) -> Result<()> {
        let (eq, ineq) = constraint_slots(problem);
        for (what, expected, got) in [
            ("lambda", problem.node_count(), self.lambda.len()),
            ("mu", eq, self.mu.len()),
            ("kappa", ineq, self.kappa.len()),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        if self.kappa.iter().any(|&k| k < 0.0) {
            return Err(Error::InvalidArgument("kappa must be nonnegative"));
        }
        Ok(())
    }
}

fn constraint_slots(problem: &MrfProblem) -> (usize, usize) {
    let eq = problem
        .constraints()
        .iter()
        .filter(|c| c.kind() == ConstraintKind::Equality)
        .count();
    (eq, problem.constraints().len() - eq)
}

/// Optimal solution of one label's subproblem. Min-marginals are computed on
/// first request and cached until the subproblem changes.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    label: usize,
    cut: CutResult,
    marginals: Vec<OnceCell<[f64; 2]>>,
}

impl SubproblemSolution {
    pub fn solve(label: usize, energy: &BinaryEnergy) -> Result<Self> {
        let cut = minimize(energy)?;
        let marginals = vec![OnceCell::new(); energy.node_count()];
        Ok(SubproblemSolution {
            label,
            cut,
            marginals,
        })
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn argmin(&self) -> &[bool] {
        self.cut.argmin()
    }

    /// `min Phi_p`.
    pub fn value(&self) -> f64 {
        self.cut.min_value()
    }

    pub fn energy(&self) -> &BinaryEnergy {
        self.cut.energy()
    }

    /// `[min Phi_p | y_jp = 0, min Phi_p | y_jp = 1]`.
    pub fn min_marginal(&self, node: usize) -> [f64; 2] {
        *self.marginals[node].get_or_init(|| self.cut.min_marginal(node))
    }

    pub fn min_marginals(&self) -> Vec<[f64; 2]> {
        (0..self.marginals.len()).map(|j| self.min_marginal(j)).collect()
    }

    /// Moves to a new subproblem energy, reusing the residual flow when only
    /// unary coefficients changed.
    fn update(&mut self, energy: BinaryEnergy) -> Result<()> {
        let old = self.cut.energy();
        if old.pairwise == energy.pairwise && old.offset == energy.offset {
            let shifts: Vec<(usize, f64)> = old
                .unary
                .iter()
                .zip(&energy.unary)
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(j, (a, b))| (j, b - a))
                .collect();
            if !shifts.is_empty() {
                self.shift(&shifts);
            }
            Ok(())
        } else {
            *self = SubproblemSolution::solve(self.label, &energy)?;
            Ok(())
        }
    }

    fn shift(&mut self, shifts: &[(usize, f64)]) {
        self.cut.shift_unary(shifts);
        for m in &mut self.marginals {
            m.take();
        }
    }
}

/// Per-label pieces of the subproblems that do not depend on the multipliers.
#[derive(Debug, Clone)]
struct Decomposition {
    /// `theta_jp - 1/2 sum C_ijp`, label-major
    base_unary: Vec<Vec<f64>>,
    pairwise: Vec<Vec<PairwiseTerm>>,
    /// `(slot, node, weight)` per label; equality slots first, then inequality
    constraint_terms: Vec<Vec<(usize, usize, f64)>>,
    eq_count: usize,
    eq_rhs: Vec<f64>,
    ineq_rhs: Vec<f64>,
    /// `max(1, |w|^2)` per constraint slot
    row_scale: Vec<f64>,
}

impl Decomposition {
    fn new(problem: &MrfProblem) -> Self {
        let n = problem.node_count();
        let labels = problem.label_count();
        let mut base_unary: Vec<Vec<f64>> = (0..labels)
            .map(|p| (0..n).map(|j| problem.unary(j, p)).collect())
            .collect();
        let mut pairwise = vec![Vec::with_capacity(problem.edge_count()); labels];
        for (e, &(i, j)) in problem.edges().iter().enumerate() {
            for p in 0..labels {
                let half = 0.5 * problem.strength(e, p);
                base_unary[p][i] -= half;
                base_unary[p][j] -= half;
                pairwise[p].push(PairwiseTerm::potts(i, j, half));
            }
        }
        let mut constraint_terms = vec![Vec::new(); labels];
        let mut eq_rhs = Vec::new();
        let mut ineq_rhs = Vec::new();
        let eq_count = constraint_slots(problem).0;
        for c in problem.constraints() {
            let slot = match c.kind() {
                ConstraintKind::Equality => {
                    eq_rhs.push(c.rhs());
                    eq_rhs.len() - 1
                }
                ConstraintKind::Inequality => {
                    ineq_rhs.push(c.rhs());
                    eq_count + ineq_rhs.len() - 1
                }
            };
            for w in c.weights() {
                constraint_terms[w.label].push((slot, w.node, w.value));
            }
        }
        let mut row_scale = vec![0.0; problem.constraints().len()];
        for terms in &constraint_terms {
            for &(slot, _, w) in terms {
                row_scale[slot] += w * w;
            }
        }
        for r in &mut row_scale {
            *r = r.max(1.0);
        }
        Decomposition {
            row_scale,
            base_unary,
            pairwise,
            constraint_terms,
            eq_count,
            eq_rhs,
            ineq_rhs,
        }
    }

    fn multiplier(&self, dual: &DualState, slot: usize) -> f64 {
        if slot < self.eq_count {
            dual.mu[slot]
        } else {
            dual.kappa[slot - self.eq_count]
        }
    }

    fn energy(&self, problem: &MrfProblem, label: usize, dual: &DualState) -> BinaryEnergy {
        let mut unary: Vec<f64> = self.base_unary[label]
            .iter()
            .zip(&dual.lambda)
            .map(|(b, l)| b + l)
            .collect();
        for &(slot, node, w) in &self.constraint_terms[label] {
            unary[node] += self.multiplier(dual, slot) * w;
        }
        let mut energy = BinaryEnergy {
            unary,
            pairwise: self.pairwise[label].clone(),
            offset: 0.0,
        };
        let priors: Vec<_> = problem
            .star_priors()
            .iter()
            .filter(|s| s.label() == label)
            .collect();
        if !priors.is_empty() {
            let betas: f64 = priors
                .iter()
                .map(|s| s.beta() * s.links().count() as f64)
                .sum();
            let big_m = star_big_m(2.0 * (energy.dominance_bound() + betas));
            for prior in priors {
                energy.pairwise.extend(prior.star_terms(big_m));
            }
        }
        energy
    }

    fn bound(&self, dual: &DualState, solutions: &[SubproblemSolution]) -> f64 {
        let values: f64 = solutions.iter().map(SubproblemSolution::value).sum();
        let lambda: f64 = dual.lambda.iter().sum();
        let mu: f64 = dual.mu.iter().zip(&self.eq_rhs).map(|(m, c)| m * c).sum();
        let kappa: f64 = dual.kappa.iter().zip(&self.ineq_rhs).map(|(k, d)| k * d).sum();
        values - lambda - mu - kappa
    }
}

/// Smallest power of two above `bound`. Rounding up keeps the star-prior
/// capacity stable while the multipliers move, so the flow network can be
/// reused between iterations.
fn star_big_m(bound: f64) -> f64 {
    let mut m = 1.0;
    while m <= bound {
        m *= 2.0;
    }
    m
}

/// Binary energy `Phi_p` of label `label` at the given multipliers.
pub fn build_subproblem(problem: &MrfProblem, label: usize, dual: &DualState) -> Result<BinaryEnergy> {
    if label >= problem.label_count() {
        return Err(Error::LabelOutOfRange {
            label,
            count: problem.label_count(),
        });
    }
    dual.check(problem)?;
    Ok(Decomposition::new(problem).energy(problem, label, dual))
}

/// Dual bound and the optimal subproblem solutions at `dual`.
pub fn dual_value(problem: &MrfProblem, dual: &DualState) -> Result<(f64, Vec<SubproblemSolution>)> {
    dual.check(problem)?;
    let dec = Decomposition::new(problem);
    let solutions = (0..problem.label_count())
        .map(|p| SubproblemSolution::solve(p, &dec.energy(problem, p, dual)))
        .collect::<Result<Vec<_>>>()?;
    Ok((dec.bound(dual, &solutions), solutions))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
}

/// Supergradient of the dual at the point where `solutions` were computed.
pub fn subgradient(problem: &MrfProblem, solutions: &[SubproblemSolution]) -> Gradients {
    let n = problem.node_count();
    let mut lambda = vec![-1.0; n];
    for s in solutions {
        for (j, &y) in s.argmin().iter().enumerate() {
            if y {
                lambda[j] += 1.0;
            }
        }
    }
    let y = |j: usize, p: usize| solutions[p].argmin()[j];
    let mut mu = Vec::new();
    let mut kappa = Vec::new();
    for c in problem.constraints() {
        let g = c.lhs(y) - c.rhs();
        match c.kind() {
            ConstraintKind::Equality => mu.push(g),
            ConstraintKind::Inequality => kappa.push(g),
        }
    }
    Gradients { lambda, mu, kappa }
}

/// `alpha_t = alpha_0 / (1 + t / tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub alpha0: f64,
    pub tau: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule {
            alpha0: 1.0,
            tau: 50.0,
        }
    }
}

impl StepSchedule {
    pub fn step(&self, iteration: usize) -> f64 {
        self.alpha0 / (1.0 + iteration as f64 / self.tau)
    }
}

/// One projected supergradient step; the iteration counter advances.
pub fn ascent_step(dual: &DualState, gradients: &Gradients, step: f64) -> Result<DualState> {
    if !step.is_finite() {
        return Err(Error::NonFinite("step size"));
    }
    let mut next = dual.clone();
    for (l, g) in next.lambda.iter_mut().zip(&gradients.lambda) {
        *l += step * g;
    }
    for (m, g) in next.mu.iter_mut().zip(&gradients.mu) {
        *m += step * g;
    }
    for (k, g) in next.kappa.iter_mut().zip(&gradients.kappa) {
        *k = (*k + step * g).max(0.0);
    }
    next.iteration += 1;
    Ok(next)
}

/// `max_p [m_jp(0) - m_jp(1)]`.
pub fn mma_delta(solutions: &[SubproblemSolution], node: usize) -> f64 {
    solutions
        .iter()
        .map(|s| {
            let m = s.min_marginal(node);
            m[0] - m[1]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of one coordinate update `lambda_j += delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmaStep {
    pub node: usize,
    pub delta: f64,
    pub bound_before: f64,
    pub bound_after: f64,
}

/// Bound decrease tolerated by the runtime monotonicity check.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-9;

/// Min-marginal averaging update of `lambda_node`. `solutions` must be
/// optimal at `dual`; both are updated in place.
pub fn mma_update(
    problem: &MrfProblem,
    dual: &mut DualState,
    solutions: &mut [SubproblemSolution],
    node: usize,
) -> Result<MmaStep> {
    if node >= problem.node_count() {
        return Err(Error::NodeOutOfRange {
            index: node,
            count: problem.node_count(),
        });
    }
    let dec = Decomposition::new(problem);
    apply_mma(&dec, dual, solutions, node)
}

fn apply_mma(
    dec: &Decomposition,
    dual: &mut DualState,
    solutions: &mut [SubproblemSolution],
    node: usize,
) -> Result<MmaStep> {
    let before = dec.bound(dual, solutions);
    let delta = mma_delta(solutions, node);
    if delta != 0.0 {
        dual.lambda[node] += delta;
        for s in solutions.iter_mut() {
            s.shift(&[(node, delta)]);
        }
    }
    let after = dec.bound(dual, solutions);
    if after < before - MONOTONICITY_TOLERANCE {
        return Err(Error::MonotonicityViolated {
            node,
            before,
            after,
        });
    }
    Ok(MmaStep {
        node,
        delta,
        bound_before: before,
        bound_after: after,
    })
}

/// Which coordinates a sweep visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScope {
    /// Nodes with `delta < 0`, then nodes where at least two subproblems
    /// strictly prefer `y = 1`.
    Improving,
    /// As `Improving`, followed by every other node with a nonzero update.
    All,
}

/// Sequential sweep of min-marginal updates; returns the applied steps.
/// Updates with `|delta| <= tol` are skipped.
pub fn mma_sweep(
    problem: &MrfProblem,
    dual: &mut DualState,
    solutions: &mut [SubproblemSolution],
    scope: SweepScope,
    tol: f64,
    observer: &mut dyn Observer,
) -> Result<Vec<MmaStep>> {
    let dec = Decomposition::new(problem);
    sweep(&dec, dual, solutions, scope, tol, observer)
}

fn sweep(
    dec: &Decomposition,
    dual: &mut DualState,
    solutions: &mut [SubproblemSolution],
    scope: SweepScope,
    tol: f64,
    observer: &mut dyn Observer,
) -> Result<Vec<MmaStep>> {
    let n = dual.lambda.len();
    let mut decreasing = Vec::new();
    let mut contested = Vec::new();
    let mut rest = Vec::new();
    for j in 0..n {
        let delta = mma_delta(solutions, j);
        let preferring = solutions
            .iter()
            .filter(|s| {
                let m = s.min_marginal(j);
                m[0] > m[1] + tol
            })
            .count();
        if delta < -tol {
            decreasing.push(j);
        } else if preferring >= 2 {
            contested.push(j);
        } else if delta.abs() > tol {
            rest.push(j);
        }
    }
    let mut order = decreasing;
    order.extend(contested);
    if scope == SweepScope::All {
        order.extend(rest);
    }
    let mut steps = Vec::new();
    for j in order {
        if mma_delta(solutions, j).abs() <= tol {
            continue;
        }
        let step = apply_mma(dec, dual, solutions, j)?;
        observer.mma_step(&step);
        steps.push(step);
    }
    Ok(steps)
}

/// Hooks into the optimization loop, used by diagnostics and tests.
pub trait Observer {
    /// Called once per iteration with the multipliers, the bound and the
    /// subproblem optima at that point.
    fn dual_evaluated(&mut self, _dual: &DualState, _bound: f64, _solutions: &[SubproblemSolution]) {}

    fn mma_step(&mut self, _step: &MmaStep) {}
}

impl Observer for () {}

/// Wall-clock source for the trace; the default reports zero so traces are
/// reproducible.
pub trait Clock {
    fn seconds(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Supergradient ascent with one min-marginal sweep whenever the bound
    /// starts oscillating.
    Hybrid,
    Subgradient,
    /// Min-marginal sweeps only, until no coordinate moves.
    MinMarginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: Mode,
    pub max_iterations: usize,
    pub schedule: StepSchedule,
    /// Iterations without a new best bound before a drop counts as oscillation.
    pub oscillation_window: usize,
    /// Iterations without a new best bound before the run stops.
    pub stagnation_window: usize,
    /// Relative tie tolerance, scaled by `1 + |bound|`.
    pub tie_tolerance: f64,
    /// Coordinate updates smaller than this are treated as zero.
    pub mma_tolerance: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::Hybrid,
            max_iterations: 2000,
            schedule: StepSchedule::default(),
            oscillation_window: 10,
            stagnation_window: 200,
            tie_tolerance: 1e-9,
            mma_tolerance: 1e-7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub dual: DualState,
    pub trace: IterationTrace,
    pub labeling: Labeling,
    pub energy: f64,
    /// Agreement status at the final multipliers.
    pub agreement: Agreement,
    /// Best dual bound seen.
    pub bound: f64,
    pub violation: f64,
}

/// Whether `labeling`, selected by strongly agreeing subproblems, is
/// optimal: it must satisfy every constraint and leave no slack on an
/// inequality with a positive multiplier.
fn certifies_optimum(problem: &MrfProblem, dual: &DualState, labeling: &Labeling, tol: f64) -> bool {
    let mut k = 0;
    problem.constraints().iter().all(|c| {
        let r = c.lhs_labeling(labeling) - c.rhs();
        match c.kind() {
            ConstraintKind::Equality => r.abs() <= tol,
            ConstraintKind::Inequality => {
                let kappa = dual.kappa[k];
                k += 1;
                r <= tol && kappa * r >= -tol
            }
        }
    })
}

pub fn optimize(problem: &MrfProblem, config: &SolverConfig) -> Result<SolveOutcome> {
    optimize_with(problem, config, &NoClock, &mut ())
}

struct Candidate {
    labeling: Labeling,
    energy: f64,
    violation: f64,
}

impl Candidate {
    fn evaluate(problem: &MrfProblem, labeling: Labeling) -> Result<Self> {
        let energy = problem.energy(&labeling)?;
        let violation = violation(problem, &labeling)?.headline();
        Ok(Candidate {
            labeling,
            energy,
            violation,
        })
    }

    /// Lower violation wins; equal violation falls back to energy.
    fn beats(&self, other: &Candidate) -> bool {
        if self.violation != other.violation {
            return self.violation < other.violation;
        }
        self.energy < other.energy
    }
}

pub fn optimize_with(
    problem: &MrfProblem,
    config: &SolverConfig,
    clock: &dyn Clock,
    observer: &mut dyn Observer,
) -> Result<SolveOutcome> {
    if config.max_iterations == 0 {
        return Err(Error::InvalidArgument("max_iterations must be positive"));
    }
    let dec = Decomposition::new(problem);
    let mut dual = DualState::zeros(problem);
    let mut solutions = (0..problem.label_count())
        .map(|p| SubproblemSolution::solve(p, &dec.energy(problem, p, &dual)))
        .collect::<Result<Vec<_>>>()?;
    let mut trace = IterationTrace::default();
    let mut best: Option<Candidate> = None;
    let mut since_best = 0usize;
    let mut stagnant = 0usize;
    let mut status;
    let mut t = 0usize;

    loop {
        let bound = dec.bound(&dual, &solutions);
        observer.dual_evaluated(&dual, bound, &solutions);
        let previous_best = dual.best_bound;
        if bound > dual.best_bound {
            dual.best_bound = bound;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if bound > previous_best + 1e-9 * (1.0 + previous_best.abs()) {
            stagnant = 0;
        } else {
            stagnant += 1;
        }

        let tol = config.tie_tolerance * (1.0 + bound.abs());
        status = agreement::agreement_status(&solutions, tol);
        let primal = if status == Agreement::Strong {
            agreement::selected_labeling(&solutions)
                .ok_or(Error::InvalidArgument("strong agreement without a labeling"))?
        } else {
            agreement::heuristic_primal(problem, &solutions, config.seed.wrapping_add(t as u64))
        };
        let candidate_labeling = primal.clone();
        let candidate = Candidate::evaluate(problem, primal)?;
        trace.push(IterationRecord {
            iteration: t,
            bound,
            best_bound: dual.best_bound,
            primal_energy: candidate.energy,
            violation: candidate.violation,
            agreement: status,
            seconds: clock.seconds(),
        });
        if best.as_ref().is_none_or(|b| candidate.beats(b)) {
            best = Some(candidate);
        }

        // strong agreement is not a coordinate fixed point, so MMA-only runs
        // continue until no update moves
        let certified = status == Agreement::Strong
            && certifies_optimum(problem, &dual, &candidate_labeling, tol);
        let settled = config.mode != Mode::MinMarginal
            && (certified || stagnant >= config.stagnation_window);
        if settled || t + 1 >= config.max_iterations
        {
            break;
        }

        match config.mode {
            Mode::MinMarginal => {
                let steps = sweep(
                    &dec,
                    &mut dual,
                    &mut solutions,
                    SweepScope::All,
                    config.mma_tolerance,
                    observer,
                )?;
                if steps.is_empty() {
                    break;
                }
            }
            Mode::Hybrid
                if since_best >= config.oscillation_window
                    && bound < dual.best_bound - 1e-9 =>
            {
                sweep(
                    &dec,
                    &mut dual,
                    &mut solutions,
                    SweepScope::Improving,
                    config.mma_tolerance,
                    observer,
                )?;
                since_best = 0;
            }
            Mode::Hybrid | Mode::Subgradient => {
                let mut g = subgradient(problem, &solutions);
                // constraint rows are rescaled to the per-node scale of g_lambda
                for (v, w) in g.mu.iter_mut().chain(g.kappa.iter_mut()).zip(&dec.row_scale) {
                    *v /= w;
                }
                let step = config.schedule.step(t);
                let best_bound = dual.best_bound;
                dual = ascent_step(&dual, &g, step)?;
                dual.best_bound = best_bound;
                for (p, s) in solutions.iter_mut().enumerate() {
                    s.update(dec.energy(problem, p, &dual))?;
                }
                t += 1;
                continue;
            }
        }
        dual.iteration += 1;
        t += 1;
    }

    let bound = dual.best_bound;
    let last_bound = dec.bound(&dual, &solutions);
    let mut chosen = best.ok_or(Error::InvalidArgument("no iterations were run"))?;
    if status != Agreement::Strong {
        let tol = config.tie_tolerance * (1.0 + last_bound.abs());
        let table = agreement::label_sets(&solutions, tol);
        if agreement::weak_agreement(&table) {
            let free = agreement::FreeDecomposition::new(problem, &table);
            if let agreement::Reconstruction::Labeling(labeling) =
                agreement::reconstruct_primal(&table, &free)?
            {
                let candidate = Candidate::evaluate(problem, labeling)?;
                if candidate.beats(&chosen) {
                    chosen = candidate;
                }
            }
            status = Agreement::Weak;
        } else {
            status = Agreement::None;
        }
    }
    Ok(SolveOutcome {
        dual,
        trace,
        labeling: chosen.labeling,
        energy: chosen.energy,
        agreement: status,
        bound,
        violation: chosen.violation,
    })
}

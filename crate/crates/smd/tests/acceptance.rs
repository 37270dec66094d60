//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smd::format::write_problem;
use smd::synthetic::{generate_synthetic, SyntheticConfig};
use smd_core::agreement::{free_flip_check, label_sets, weak_agreement};
use smd_core::constraints::{strict_class_size, violation};
use smd_core::engine::{
    dual_value, mma_delta, optimize_with, DualState, MmaStep, NoClock, Observer, SubproblemSolution,
};
use smd_core::maxflow::{min_marginals, minimize};
use smd_core::oracle::{brute_force, brute_force_binary, brute_force_constrained};
use smd_core::{Agreement, BinaryEnergy, Mode, MrfProblem, PairwiseTerm, SolverConfig, StarPrior};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Collects everything the solver reports through its hooks.
#[derive(Default)]
struct Recorder {
    bounds: Vec<f64>,
    steps: Vec<MmaStep>,
    flip_failures: usize,
    flip_checks: usize,
    star_failures: usize,
    star_checks: usize,
    check_flips: bool,
    star: Option<StarPrior>,
}

impl Observer for Recorder {
    fn dual_evaluated(&mut self, _dual: &DualState, bound: f64, solutions: &[SubproblemSolution]) {
        self.bounds.push(bound);
        if self.check_flips {
            // flipping k free nodes can cost up to k times the tie tolerance,
            // so the free sets are taken tight enough to stay below 1e-9
            let tol = 1e-10;
            for s in solutions {
                self.flip_checks += 1;
                if !free_flip_check(s, tol) {
                    self.flip_failures += 1;
                }
            }
        }
        if let Some(star) = &self.star {
            let s = &solutions[star.label()];
            self.star_checks += 1;
            let segment = s.argmin();
            let nonempty = segment.iter().any(|&y| y);
            if !star.is_star_shaped(segment) || (nonempty && !segment[star.center()]) {
                self.star_failures += 1;
            }
        }
    }

    fn mma_step(&mut self, step: &MmaStep) {
        self.steps.push(*step);
    }
}

fn random_submodular(rng: &mut ChaCha8Rng) -> BinaryEnergy {
    let n = rng.random_range(1..=15);
    let mut e = BinaryEnergy::with_unary((0..n).map(|_| rng.random_range(-5.0..=5.0)).collect());
    if n < 2 {
        return e;
    }
    let terms = rng.random_range(0..=2 * n);
    for _ in 0..terms {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        loop {
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-5.0..=5.0));
            if v[0] + v[3] <= v[1] + v[2] {
                e.add_term(PairwiseTerm::new(i, j, v[0], v[1], v[2], v[3]));
                break;
            }
        }
    }
    e
}

/// `[min | y_j = 0, min | y_j = 1]` by enumeration.
fn enumerated_min_marginals(e: &BinaryEnergy) -> Vec<[f64; 2]> {
    let n = e.node_count();
    let mut m = vec![[f64::INFINITY; 2]; n];
    let mut y = vec![false; n];
    for mask in 0u32..(1 << n) {
        for (j, v) in y.iter_mut().enumerate() {
            *v = mask >> j & 1 == 1;
        }
        let v = e.evaluate(&y);
        for j in 0..n {
            let k = y[j] as usize;
            m[j][k] = m[j][k].min(v);
        }
    }
    m
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let e = random_submodular(&mut rng);
        let cut = minimize(&e).unwrap();
        let (_, best) = brute_force_binary(&e).unwrap();
        worst = worst.max((cut.min_value() - best).abs());
        let fast = min_marginals(&e).unwrap();
        for (a, b) in fast.iter().zip(enumerated_min_marginals(&e)) {
            worst = worst.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 10.0,
        format!("200 instances, max deviation {worst:.2e}, {secs:.2}s"),
    )
}

fn small_grid(seed: u64) -> MrfProblem {
    generate_synthetic(&SyntheticConfig::new(3, 3, 3, seed)).unwrap()
}

struct SuiteRun {
    optimum: f64,
    outcome: smd_core::SolveOutcome,
    recorder: Recorder,
}

fn weak_duality_suite() -> Vec<SuiteRun> {
    (0..100)
        .map(|seed| {
            let problem = small_grid(seed);
            let optimum = brute_force(&problem).unwrap().optimum;
            let mut recorder = Recorder {
                check_flips: true,
                ..Recorder::default()
            };
            let config = SolverConfig {
                seed,
                ..SolverConfig::default()
            };
            let outcome = optimize_with(&problem, &config, &NoClock, &mut recorder).unwrap();
            SuiteRun {
                optimum,
                outcome,
                recorder,
            }
        })
        .collect()
}

fn criterion_2(runs: &[SuiteRun]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut evaluated = 0;
    for run in runs {
        for &b in &run.recorder.bounds {
            worst = worst.max(b - run.optimum);
            evaluated += 1;
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{evaluated} bounds over 100 seeds, max bound - optimum = {worst:.3e}"),
    )
}

fn criterion_3(runs: &[SuiteRun]) -> Outcome {
    let strong: Vec<&SuiteRun> = runs
        .iter()
        .filter(|r| r.outcome.agreement == Agreement::Strong)
        .collect();
    let worst = strong
        .iter()
        .map(|r| (r.outcome.energy - r.optimum).abs())
        .fold(0.0, f64::max);
    let share = strong.len() as f64 / runs.len() as f64;
    outcome(
        worst <= 1e-6 && share >= 0.3,
        format!(
            "strong agreement on {}/{} seeds, max |energy - optimum| = {worst:.2e}",
            strong.len(),
            runs.len()
        ),
    )
}

struct FixedPointRun {
    steps: Vec<MmaStep>,
    max_delta: f64,
    probe_excess: f64,
    weak: bool,
}

fn fixed_point_suite() -> Vec<FixedPointRun> {
    (0..50)
        .map(|seed| {
            let problem = generate_synthetic(&SyntheticConfig::new(2, 2, 3, 1000 + seed)).unwrap();
            let mut recorder = Recorder::default();
            let config = SolverConfig {
                mode: Mode::MinMarginal,
                seed,
                ..SolverConfig::default()
            };
            let out = optimize_with(&problem, &config, &NoClock, &mut recorder).unwrap();
            let (bound, solutions) = dual_value(&problem, &out.dual).unwrap();
            let max_delta = (0..problem.node_count())
                .map(|j| mma_delta(&solutions, j).abs())
                .fold(0.0, f64::max);
            let mut probe_excess = f64::NEG_INFINITY;
            for j in 0..problem.node_count() {
                for delta in [1e-3, -1e-3, 1e-1, -1e-1] {
                    let mut probe = out.dual.clone();
                    probe.lambda[j] += delta;
                    let (b, _) = dual_value(&problem, &probe).unwrap();
                    probe_excess = probe_excess.max(b - bound);
                }
            }
            let weak = weak_agreement(&label_sets(&solutions, 1e-6 * (1.0 + bound.abs())));
            FixedPointRun {
                steps: recorder.steps,
                max_delta,
                probe_excess,
                weak,
            }
        })
        .collect()
}

fn criterion_4(runs: &[SuiteRun], fixed: &[FixedPointRun]) -> Outcome {
    let steps: Vec<&MmaStep> = runs
        .iter()
        .flat_map(|r| &r.recorder.steps)
        .chain(fixed.iter().flat_map(|f| &f.steps))
        .collect();
    let drops = steps
        .iter()
        .filter(|s| s.bound_after < s.bound_before - 1e-9)
        .count();
    let decreasing: Vec<_> = steps.iter().filter(|s| s.delta < -1e-6).collect();
    let flat = decreasing
        .iter()
        .filter(|s| s.bound_after <= s.bound_before)
        .count();
    outcome(
        drops == 0 && flat == 0 && !steps.is_empty(),
        format!(
            "{} updates, {drops} decreases; {} with delta < 0, {flat} without strict increase",
            steps.len(),
            decreasing.len()
        ),
    )
}

fn criterion_5(fixed: &[FixedPointRun]) -> Outcome {
    let max_delta = fixed.iter().map(|f| f.max_delta).fold(0.0, f64::max);
    let excess = fixed.iter().map(|f| f.probe_excess).fold(f64::NEG_INFINITY, f64::max);
    let weak = fixed.iter().filter(|f| f.weak).count();
    outcome(
        max_delta <= 1e-7 && excess <= 1e-9 && weak == fixed.len(),
        format!(
            "max |delta| {max_delta:.2e}, max probe gain {excess:.2e}, weak agreement {weak}/{}",
            fixed.len()
        ),
    )
}

fn criterion_6(runs: &[SuiteRun]) -> Outcome {
    let checks: usize = runs.iter().map(|r| r.recorder.flip_checks).sum();
    let failures: usize = runs.iter().map(|r| r.recorder.flip_failures).sum();
    outcome(
        failures == 0 && checks > 0,
        format!("{checks} subproblem optima checked, {failures} failures"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut good = 0;
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..50 {
        let mut problem = small_grid(500 + seed);
        for label in 0..3 {
            let c = strict_class_size(&problem, label, 3).unwrap();
            problem.add_constraint(c).unwrap();
        }
        let optimum = brute_force_constrained(&problem).unwrap().optimum;
        let mut recorder = Recorder::default();
        let config = SolverConfig {
            seed,
            ..SolverConfig::default()
        };
        let out = optimize_with(&problem, &config, &NoClock, &mut recorder).unwrap();
        for &b in &recorder.bounds {
            worst = worst.max(b - optimum);
        }
        if violation(&problem, &out.labeling).unwrap().recolor_fraction <= 1.0 / 9.0 + 1e-12 {
            good += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        good >= 40 && worst <= 1e-9,
        format!("recolor <= 1/9 on {good}/50 seeds, max bound - optimum = {worst:.3e}, {secs:.1}s"),
    )
}

fn desk_scale_problem() -> MrfProblem {
    generate_synthetic(&SyntheticConfig::new(20, 20, 5, 2024).with_class_sizes()).unwrap()
}

fn desk_scale_config() -> SolverConfig {
    SolverConfig {
        max_iterations: 500,
        stagnation_window: 500,
        ..SolverConfig::default()
    }
}

fn criterion_8() -> Outcome {
    let problem = desk_scale_problem();
    let out = optimize_with(&problem, &desk_scale_config(), &NoClock, &mut ()).unwrap();
    let records = out.trace.records();
    let monotone = records.windows(2).all(|w| w[1].best_bound >= w[0].best_bound);
    let recolor = violation(&problem, &out.labeling).unwrap().recolor_fraction;
    let gap = (out.energy - out.bound).abs() / out.bound.abs();
    outcome(
        monotone && recolor <= 0.10 && gap <= 0.05,
        format!(
            "{} iterations, bound {:.4}, energy {:.4}, gap {:.2}%, recolor {:.2}%",
            records.len(),
            out.bound,
            out.energy,
            100.0 * gap,
            100.0 * recolor
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut checks = 0;
    let mut failures = 0;
    for seed in 0..50 {
        let mut problem = generate_synthetic(&SyntheticConfig::new(9, 9, 2, 3000 + seed)).unwrap();
        let grid = problem.grid().unwrap();
        let prior = StarPrior::on_grid(1, grid, grid.node(4, 4), 0.0).unwrap();
        problem.add_star_prior(prior.clone()).unwrap();
        let mut recorder = Recorder {
            star: Some(prior),
            ..Recorder::default()
        };
        let config = SolverConfig {
            max_iterations: 200,
            seed,
            ..SolverConfig::default()
        };
        optimize_with(&problem, &config, &NoClock, &mut recorder).unwrap();
        checks += recorder.star_checks;
        failures += recorder.star_failures;
    }
    outcome(
        failures == 0 && checks > 0,
        format!("{checks} foreground optima over 50 seeds, {failures} not star-shaped"),
    )
}

fn criterion_10() -> Outcome {
    let run = || {
        let mut csv = String::new();
        for seed in 0..20 {
            let problem = small_grid(seed);
            let config = SolverConfig {
                seed,
                ..SolverConfig::default()
            };
            let out = optimize_with(&problem, &config, &NoClock, &mut ()).unwrap();
            csv.push_str(&out.trace.to_csv());
            csv.push_str(&write_problem(&problem).unwrap());
        }
        let out = optimize_with(&desk_scale_problem(), &desk_scale_config(), &NoClock, &mut ()).unwrap();
        csv.push_str(&out.trace.to_csv());
        csv
    };
    let (a, b) = (run(), run());
    outcome(a == b, format!("{} trace bytes, identical across two runs: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &'static str, o: Outcome| {
        println!(
            "criterion {n:>2} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };
    record(1, "max-flow matches enumeration", criterion_1());
    let suite = weak_duality_suite();
    record(2, "weak duality", criterion_2(&suite));
    record(3, "exactness under strong agreement", criterion_3(&suite));
    let fixed = fixed_point_suite();
    record(4, "min-marginal update monotonicity", criterion_4(&suite, &fixed));
    record(5, "min-marginal fixed point", criterion_5(&fixed));
    record(6, "free components flip freely", criterion_6(&suite));
    record(7, "constrained inference", criterion_7());
    record(8, "desk-scale convergence", criterion_8());
    record(9, "star-shape invariant", criterion_9());
    record(10, "determinism", criterion_10());
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

mod common;

use smd_core::agreement::{
    agreement_status, free_flip_check, label_sets, reconstruct_primal, strong_agreement,
    weak_agreement, Agreement, FreeDecomposition, Reconstruction,
};
use smd_core::constraints::{soft_class_size, strict_class_size};
use smd_core::engine::{
    build_subproblem, dual_value, mma_delta, mma_sweep, mma_update, subgradient, SweepScope,
};
use smd_core::oracle::{brute_force, brute_force_constrained};
use smd_core::{optimize, DualState, Labeling, Mode, MrfProblem, SolverConfig};

#[test]
fn weak_duality_at_random_points() {
    for seed in 0..60 {
        let p = common::random_grid(seed, 2, 3, 3);
        let optimum = brute_force(&p).unwrap().optimum;
        for k in 0..5 {
            let (bound, _) = dual_value(&p, &common::random_point(seed * 10 + k, &p, 2.0)).unwrap();
            assert!(bound <= optimum + 1e-9, "seed {seed}: {bound} > {optimum}");
        }
    }
}

#[test]
fn constrained_weak_duality() {
    for seed in 0..40 {
        let p = common::with_sizes(common::random_grid(seed, 3, 3, 3), &[2, 3, 4]);
        let optimum = brute_force_constrained(&p).unwrap().optimum;
        assert!(optimum >= brute_force(&p).unwrap().optimum);
        for k in 0..5 {
            let (bound, _) = dual_value(&p, &common::random_point(seed * 7 + k, &p, 1.5)).unwrap();
            assert!(bound <= optimum + 1e-9);
        }
    }
}

#[test]
fn constraint_terms_are_a_unary_shift() {
    for seed in 0..20 {
        let base = common::random_grid(seed, 2, 3, 3);
        let mut p = common::with_sizes(base.clone(), &[1, 2, 3]);
        let (upper, lower) = soft_class_size(&p, 1, 1, 4).unwrap();
        p.add_constraint(upper).unwrap();
        p.add_constraint(lower).unwrap();
        let dual = common::random_point(seed, &p, 1.0);
        let (bound, _) = dual_value(&p, &dual).unwrap();

        // fold the multiplier terms into the unaries of an unconstrained copy
        let mut shift = vec![0.0; 18];
        let mut constant = 0.0;
        let (mut m, mut k) = (0, 0);
        for c in p.constraints() {
            let mult = match c.kind() {
                smd_core::ConstraintKind::Equality => {
                    m += 1;
                    dual.mu[m - 1]
                }
                smd_core::ConstraintKind::Inequality => {
                    k += 1;
                    dual.kappa[k - 1]
                }
            };
            for w in c.weights() {
                shift[w.node * 3 + w.label] += mult * w.value;
            }
            constant += mult * c.rhs();
        }
        let unary: Vec<f64> = (0..6)
            .flat_map(|j| base.unary_row(j).to_vec())
            .zip(&shift)
            .map(|(a, b)| a + b)
            .collect();
        let mut q = MrfProblem::new(6, 3, unary).unwrap();
        for (e, &(i, j)) in base.edges().iter().enumerate() {
            q.add_edge(i, j, base.strengths(e)).unwrap();
        }
        let mut plain = DualState::zeros(&q);
        plain.lambda = dual.lambda.clone();
        let (shifted, _) = dual_value(&q, &plain).unwrap();
        assert!((bound - (shifted - constant)).abs() <= 1e-9);
    }
}

#[test]
fn soft_pair_with_equal_bounds_is_strict() {
    for seed in 0..10 {
        let base = common::random_grid(seed, 2, 2, 3);
        let strict = common::with_sizes(base.clone(), &[2]);
        let mut soft = base.clone();
        let (upper, lower) = soft_class_size(&soft, 0, 2, 2).unwrap();
        soft.add_constraint(upper).unwrap();
        soft.add_constraint(lower).unwrap();
        let a = brute_force_constrained(&strict).unwrap();
        let b = brute_force_constrained(&soft).unwrap();
        assert_eq!(a, b);
        let any = brute_force_constrained(&{
            let mut v = base.clone();
            let (u, l) = soft_class_size(&v, 0, 0, 4).unwrap();
            v.add_constraint(u).unwrap();
            v.add_constraint(l).unwrap();
            v
        })
        .unwrap();
        assert_eq!(any.optimum, brute_force(&base).unwrap().optimum);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut checked = 0;
    for seed in 0..40 {
        let p = common::random_grid(seed, 2, 2, 3);
        let dual = common::random_point(seed, &p, 1.0);
        let (bound, solutions) = dual_value(&p, &dual).unwrap();
        let table = label_sets(&solutions, 1e-6);
        // only where every Z set is a singleton is the dual differentiable
        let smooth = (0..4).all(|j| table.row(j).iter().all(|z| *z != smd_core::LabelSet::Both));
        if !smooth {
            continue;
        }
        let g = subgradient(&p, &solutions);
        for j in 0..4 {
            let delta = 1e-7 * (1.0 + dual.lambda[j].abs());
            let mut moved = dual.clone();
            moved.lambda[j] += delta;
            let (b, _) = dual_value(&p, &moved).unwrap();
            assert!(((b - bound) / delta - g.lambda[j]).abs() <= 1e-6);
            checked += 1;
        }
    }
    assert!(checked > 40);
}

#[test]
fn subproblem_of_other_labels_ignores_star_prior() {
    let mut p = common::random_grid(5, 3, 3, 2);
    let before = build_subproblem(&p, 0, &DualState::zeros(&p)).unwrap();
    let grid = p.grid().unwrap();
    p.add_star_prior(smd_core::StarPrior::on_grid(1, grid, 4, 0.0).unwrap()).unwrap();
    assert_eq!(build_subproblem(&p, 0, &DualState::zeros(&p)).unwrap(), before);
    assert!(build_subproblem(&p, 1, &DualState::zeros(&p)).unwrap().pairwise.len() > before.pairwise.len());
}

#[test]
fn mma_is_monotone_and_strict_on_negative_updates() {
    let mut strict = 0;
    for seed in 0..60 {
        let p = common::random_grid(seed, 2, 3, 3);
        let mut dual = common::random_point(seed, &p, 1.5);
        let (_, mut solutions) = dual_value(&p, &dual).unwrap();
        for j in 0..p.node_count() {
            let step = mma_update(&p, &mut dual, &mut solutions, j).unwrap();
            assert!(step.bound_after >= step.bound_before - 1e-9);
            if step.delta < -1e-6 {
                assert!(step.bound_after > step.bound_before);
                strict += 1;
            }
            // solutions were kept in sync with the moved multiplier
            let (fresh, _) = dual_value(&p, &dual).unwrap();
            assert!((fresh - step.bound_after).abs() <= 1e-9);
        }
    }
    assert!(strict > 0);
}

#[test]
fn sweeps_reach_coordinate_maxima_with_weak_agreement() {
    for seed in 0..30 {
        let p = common::random_grid(100 + seed, 2, 2, 3);
        let mut dual = common::random_point(seed, &p, 1.0);
        let (_, mut solutions) = dual_value(&p, &dual).unwrap();
        for _ in 0..500 {
            let steps = mma_sweep(&p, &mut dual, &mut solutions, SweepScope::All, 1e-9, &mut ()).unwrap();
            if steps.is_empty() {
                break;
            }
        }
        let (bound, solutions) = dual_value(&p, &dual).unwrap();
        for j in 0..4 {
            assert!(mma_delta(&solutions, j).abs() <= 1e-9);
            for delta in [1e-3, -1e-3, 1e-1, -1e-1] {
                let mut probe = dual.clone();
                probe.lambda[j] += delta;
                assert!(dual_value(&p, &probe).unwrap().0 <= bound + 1e-9);
            }
        }
        assert!(weak_agreement(&label_sets(&solutions, 1e-8)));
    }
}

#[test]
fn lazy_status_matches_full_table() {
    for seed in 0..80 {
        let p = common::random_grid(seed, 2, 3, 3);
        let dual = common::random_point(seed, &p, 0.7);
        let (_, solutions) = dual_value(&p, &dual).unwrap();
        for tol in [1e-9, 0.05, 0.3] {
            let table = label_sets(&solutions, tol);
            let expected = if strong_agreement(&table) {
                Agreement::Strong
            } else if weak_agreement(&table) {
                Agreement::Weak
            } else {
                Agreement::None
            };
            assert_eq!(agreement_status(&solutions, tol), expected, "seed {seed} tol {tol}");
            assert!(!strong_agreement(&table) || weak_agreement(&table));
        }
    }
}

#[test]
fn free_components_flip_on_random_instances() {
    for seed in 0..100 {
        let p = common::random_grid(seed, 2, 3, 2);
        let dual = common::random_point(seed, &p, 1.0);
        let (_, solutions) = dual_value(&p, &dual).unwrap();
        for s in &solutions {
            assert!(free_flip_check(s, 1e-10));
        }
    }
    // exact ties created by a min-marginal update
    for seed in 0..100 {
        let p = common::random_grid(seed, 2, 3, 2);
        let mut dual = DualState::zeros(&p);
        let (_, mut solutions) = dual_value(&p, &dual).unwrap();
        for j in 0..p.node_count() {
            mma_update(&p, &mut dual, &mut solutions, j).unwrap();
        }
        for s in &solutions {
            assert!(free_flip_check(s, 1e-10));
        }
    }
}

#[test]
fn strong_agreement_is_optimal_and_reconstructs() {
    let mut strong = 0;
    let mut reconstructed = 0;
    for seed in 0..60 {
        let p = common::random_grid(seed, 2, 3, 3);
        let optimum = brute_force(&p).unwrap().optimum;
        let out = optimize(&p, &SolverConfig { seed, ..SolverConfig::default() }).unwrap();
        assert!(out.bound <= optimum + 1e-9);
        if out.agreement == Agreement::Strong {
            strong += 1;
            assert!((out.energy - optimum).abs() <= 1e-6);
            assert!((out.bound - optimum).abs() <= 1e-6);
        }
        // at a zero-gap weakly agreeing point, a disjoint cover yields an optimum
        let (bound, solutions) = dual_value(&p, &out.dual).unwrap();
        let table = label_sets(&solutions, 1e-9 * (1.0 + bound.abs()));
        if weak_agreement(&table) && (bound - optimum).abs() <= 1e-9 {
            let free = FreeDecomposition::new(&p, &table);
            if let Reconstruction::Labeling(l) = reconstruct_primal(&table, &free).unwrap() {
                assert!((p.energy(&l).unwrap() - optimum).abs() <= 1e-6);
                reconstructed += 1;
            }
        }
    }
    assert!(strong > 10);
    assert!(reconstructed > 0);
}

#[test]
fn mma_only_single_node() {
    let p = MrfProblem::new(1, 2, vec![2.0, 5.0]).unwrap();
    let config = SolverConfig {
        mode: Mode::MinMarginal,
        ..SolverConfig::default()
    };
    let out = optimize(&p, &config).unwrap();
    assert_eq!(out.bound, 2.0);
    assert_eq!(out.labeling, Labeling::new(vec![0]));
}

#[test]
fn class_size_targets_recolor() {
    let mut p = common::random_grid(1, 2, 5, 4);
    for (label, size) in [1, 2, 3, 4].into_iter().enumerate() {
        p.add_constraint(strict_class_size(&p, label, size).unwrap()).unwrap();
    }
    let out = optimize(&p, &SolverConfig::default()).unwrap();
    let report = smd_core::constraints::violation(&p, &out.labeling).unwrap();
    assert!(report.recolor_fraction <= 0.2);
    assert!(out.bound <= brute_force_constrained(&p).unwrap().optimum + 1e-9);
}

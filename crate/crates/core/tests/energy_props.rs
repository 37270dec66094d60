mod common;

use proptest::prelude::*;
use smd_core::problem::indicator_of;
use smd_core::{IndicatorMatrix, Labeling, MrfProblem};

fn labeling(n: usize, labels: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..labels, n)
}

proptest! {
    #[test]
    fn indicator_form_agrees(seed in any::<u64>(), t in labeling(6, 3)) {
        let p = common::random_grid(seed, 2, 3, 3);
        let t = Labeling::new(t);
        let y = indicator_of(&t, 3);
        prop_assert_eq!(y.labeling(), Some(t.clone()));
        prop_assert_eq!(p.energy(&t).unwrap(), p.energy_indicator(&y).unwrap());
    }

    #[test]
    fn edge_order_and_orientation(seed in any::<u64>(), t in labeling(6, 3)) {
        let p = common::random_grid(seed, 2, 3, 3);
        let mut q = MrfProblem::new(6, 3, (0..6).flat_map(|j| p.unary_row(j).to_vec()).collect()).unwrap();
        for e in (0..p.edge_count()).rev() {
            let (i, j) = p.edges()[e];
            q.add_edge(j, i, p.strengths(e)).unwrap();
        }
        let t = Labeling::new(t);
        prop_assert!((p.energy(&t).unwrap() - q.energy(&t).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn node_constant_shifts_every_labeling(seed in any::<u64>(), node in 0usize..6, c in -5.0f64..5.0, t in labeling(6, 3)) {
        let p = common::random_grid(seed, 2, 3, 3);
        let unary: Vec<f64> = (0..6)
            .flat_map(|j| p.unary_row(j).iter().map(move |&v| if j == node { v + c } else { v }))
            .collect();
        let mut q = MrfProblem::new(6, 3, unary).unwrap();
        for (e, &(i, j)) in p.edges().iter().enumerate() {
            q.add_edge(i, j, p.strengths(e)).unwrap();
        }
        let t = Labeling::new(t);
        prop_assert!((q.energy(&t).unwrap() - p.energy(&t).unwrap() - c).abs() <= 1e-9);
    }
}

#[test]
fn empty_indicator_is_zero() {
    let p = common::random_grid(3, 2, 2, 2);
    assert_eq!(p.energy_indicator(&IndicatorMatrix::zeros(4, 2)).unwrap(), 0.0);
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smd_core::constraints::strict_class_size;
use smd_core::{GridShape, MrfProblem};

/// Grid problem with uniform unaries in [-1, 1] and label-dependent strengths
/// in [0, 1).
pub fn random_grid(seed: u64, height: usize, width: usize, labels: usize) -> MrfProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = GridShape::new(height, width);
    let unary = (0..grid.len() * labels)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let mut p = MrfProblem::new(grid.len(), labels, unary).unwrap();
    p.set_grid(grid).unwrap();
    for r in 0..height {
        for c in 0..width {
            let strengths: Vec<f64> = (0..labels).map(|_| rng.random_range(0.0..1.0)).collect();
            if c + 1 < width {
                p.add_edge(grid.node(r, c), grid.node(r, c + 1), &strengths).unwrap();
            }
            if r + 1 < height {
                let strengths: Vec<f64> = strengths.iter().map(|s| 1.0 - s).collect();
                p.add_edge(grid.node(r, c), grid.node(r + 1, c), &strengths).unwrap();
            }
        }
    }
    p
}

#[allow(dead_code)]
pub fn with_sizes(mut p: MrfProblem, sizes: &[usize]) -> MrfProblem {
    for (label, &size) in sizes.iter().enumerate() {
        let c = strict_class_size(&p, label, size).unwrap();
        p.add_constraint(c).unwrap();
    }
    p
}

#[allow(dead_code)]
pub fn random_point(seed: u64, p: &MrfProblem, scale: f64) -> smd_core::DualState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut d = smd_core::DualState::zeros(p);
    for l in &mut d.lambda {
        *l = rng.random_range(-scale..=scale);
    }
    for m in &mut d.mu {
        *m = rng.random_range(-scale..=scale);
    }
    for k in &mut d.kappa {
        *k = rng.random_range(0.0..=scale);
    }
    d
}

//! Random grid problems: standard normal unaries and half-normal Potts
//! strengths shared by all labels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use smd_core::constraints::{proportional_class_sizes, strict_class_size};
use smd_core::{GridShape, MrfProblem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub height: usize,
    pub width: usize,
    pub label_count: usize,
    pub seed: u64,
    /// Standard deviation of the normal whose absolute value gives `C_ij`.
    pub pairwise_sigma: f64,
    /// Add strict class-size constraints with targets proportional to `p`.
    pub class_sizes: bool,
}

impl SyntheticConfig {
    pub fn new(height: usize, width: usize, label_count: usize, seed: u64) -> Self {
        SyntheticConfig {
            height,
            width,
            label_count,
            seed,
            pairwise_sigma: 0.5,
            class_sizes: false,
        }
    }

    pub fn with_class_sizes(mut self) -> Self {
        self.class_sizes = true;
        self
    }
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<MrfProblem> {
    if config.height == 0 || config.width == 0 {
        return Err(Error::Config("grid dimensions must be positive".into()));
    }
    let grid = GridShape::new(config.height, config.width);
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unary: Vec<f64> = (0..n * config.label_count)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut problem = MrfProblem::new(n, config.label_count, unary)?;
    problem.set_grid(grid)?;
    let strength = Normal::new(0.0, config.pairwise_sigma)
        .map_err(|e| Error::Config(format!("pairwise sigma: {e}")))?;
    for r in 0..grid.height {
        for c in 0..grid.width {
            let node = grid.node(r, c);
            if c + 1 < grid.width {
                let w: f64 = strength.sample(&mut rng);
                problem.add_potts_edge(node, grid.node(r, c + 1), w.abs())?;
            }
            if r + 1 < grid.height {
                let w: f64 = strength.sample(&mut rng);
                problem.add_potts_edge(node, grid.node(r + 1, c), w.abs())?;
            }
        }
    }
    if config.class_sizes {
        for (label, size) in proportional_class_sizes(n, config.label_count)
            .into_iter()
            .enumerate()
        {
            let c = strict_class_size(&problem, label, size)?;
            problem.add_constraint(c)?;
        }
    }
    Ok(problem)
}

//! Segmentation problems from an image and seed masks.
//!
//! Unaries are negative log-likelihoods under per-class color histograms
//! collected from the seed pixels; pairwise strengths follow the generalized
//! Potts model `C_ij = a1 + a2 exp(-|I_i - I_j|^2 / (2 sigma_ij^2))`, with
//! `sigma_ij` the mean absolute neighbor difference in a box around pixel `i`.

use smd_core::constraints::{equal_class_sizes, flux_equality};
use smd_core::{GridShape, MrfProblem, StarPrior};

use crate::error::{Error, Result};
use crate::pnm::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationConfig {
    pub image: Image,
    /// Per pixel: 0 for unseeded, `k > 0` for a seed of class `k - 1`.
    pub seeds: Vec<u8>,
    pub a1: f64,
    pub a2: f64,
    /// Side of the box used to estimate `sigma`.
    pub box_size: usize,
    pub sigma_floor: f64,
    pub bins: usize,
    /// Unary given to the other labels at a seed pixel.
    pub seed_penalty: f64,
    /// `(label, node)` pairs.
    pub star_centers: Vec<(usize, usize)>,
    pub star_beta: f64,
    pub equal_sizes: Vec<(usize, usize)>,
    /// Balanced signed flux between two labels, with intensities mapped to
    /// `[-1, 1]` around mid-gray.
    pub flux: Option<(usize, usize)>,
}

impl SegmentationConfig {
    pub fn new(image: Image, seeds: Vec<u8>) -> Self {
        SegmentationConfig {
            image,
            seeds,
            a1: 2.0,
            a2: 20.0,
            box_size: 20,
            sigma_floor: 1e-3,
            bins: 32,
            seed_penalty: 1e3,
            star_centers: Vec::new(),
            star_beta: 0.0,
            equal_sizes: Vec::new(),
            flux: None,
        }
    }
}

/// Seed mask from a PGM: pixel value `k > 0` seeds class `k - 1`.
pub fn seeds_from_mask(mask: &Image) -> Result<Vec<u8>> {
    if mask.channels != 1 {
        return Err(Error::Image("seed mask must be a PGM".into()));
    }
    Ok(mask.data.clone())
}

fn color_distance2(a: &[u8], b: &[u8]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum()
}

/// Summed-area table over a `height x width` array.
struct Integral {
    width: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(height: usize, width: usize, value: impl Fn(usize, usize) -> f64) -> Self {
        let mut sums = vec![0.0; (height + 1) * (width + 1)];
        for r in 0..height {
            for c in 0..width {
                sums[(r + 1) * (width + 1) + c + 1] = value(r, c)
                    + sums[r * (width + 1) + c + 1]
                    + sums[(r + 1) * (width + 1) + c]
                    - sums[r * (width + 1) + c];
            }
        }
        Integral { width, sums }
    }

    /// Sum over rows `r0..r1`, columns `c0..c1`.
    fn sum(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        let w = self.width + 1;
        self.sums[r1 * w + c1] - self.sums[r0 * w + c1] - self.sums[r1 * w + c0] + self.sums[r0 * w + c0]
    }
}

pub fn problem_from_image(config: &SegmentationConfig) -> Result<MrfProblem> {
    let img = &config.image;
    let n = img.len();
    if config.seeds.len() != n {
        return Err(Error::Image(format!(
            "seed mask has {} pixels, image has {n}",
            config.seeds.len()
        )));
    }
    let labels = config.seeds.iter().copied().max().unwrap_or(0) as usize;
    if labels < 2 {
        return Err(Error::Image("need seeds for at least two classes".into()));
    }
    if config.bins == 0 || config.bins > 256 {
        return Err(Error::Config("bins must be in 1..=256".into()));
    }

    // per-class, per-channel histograms
    let ch = img.channels;
    let bins = config.bins;
    let mut hist = vec![0usize; labels * ch * bins];
    let mut counts = vec![0usize; labels];
    let bin = |v: u8| v as usize * bins / 256;
    for (j, &s) in config.seeds.iter().enumerate() {
        if s == 0 {
            continue;
        }
        let p = s as usize - 1;
        counts[p] += 1;
        for (k, &v) in img.pixel(j).iter().enumerate() {
            hist[(p * ch + k) * bins + bin(v)] += 1;
        }
    }
    if let Some(p) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Image(format!("class {p} has no seed pixels")));
    }
    let mut unary = Vec::with_capacity(n * labels);
    for j in 0..n {
        let seed = config.seeds[j] as usize;
        for p in 0..labels {
            let theta = if seed > 0 && seed - 1 != p {
                config.seed_penalty
            } else {
                let denom = (counts[p] + bins) as f64;
                img.pixel(j)
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| -(((hist[(p * ch + k) * bins + bin(v)] + 1) as f64 / denom).ln()))
                    .sum()
            };
            unary.push(theta);
        }
    }
    let grid = GridShape::new(img.height, img.width);
    let mut problem = MrfProblem::new(n, labels, unary)?;
    problem.set_grid(grid)?;

    let (h, w) = (img.height, img.width);
    let px = |r: usize, c: usize| img.pixel(grid.node(r, c));
    let right = Integral::new(h, w, |r, c| {
        if c + 1 < w {
            color_distance2(px(r, c), px(r, c + 1)).sqrt()
        } else {
            0.0
        }
    });
    let down = Integral::new(h, w, |r, c| {
        if r + 1 < h {
            color_distance2(px(r, c), px(r + 1, c)).sqrt()
        } else {
            0.0
        }
    });
    let half = config.box_size / 2;
    let sigma_at = |r: usize, c: usize| {
        let (r0, r1) = (r.saturating_sub(half), (r + config.box_size - half).min(h));
        let (c0, c1) = (c.saturating_sub(half), (c + config.box_size - half).min(w));
        // right differences exist for columns < w - 1, down for rows < h - 1
        let n_right = (r1 - r0) * (c1.min(w - 1).saturating_sub(c0));
        let n_down = (r1.min(h - 1).saturating_sub(r0)) * (c1 - c0);
        let total = right.sum(r0, r1, c0, c1) + down.sum(r0, r1, c0, c1);
        let count = n_right + n_down;
        let mean = if count == 0 { 0.0 } else { total / count as f64 };
        mean.max(config.sigma_floor)
    };
    for r in 0..h {
        for c in 0..w {
            let sigma = sigma_at(r, c);
            let mut link = |r2: usize, c2: usize| -> Result<()> {
                let d2 = color_distance2(px(r, c), px(r2, c2));
                let strength = config.a1 + config.a2 * (-d2 / (2.0 * sigma * sigma)).exp();
                problem.add_potts_edge(grid.node(r, c), grid.node(r2, c2), strength)?;
                Ok(())
            };
            if c + 1 < w {
                link(r, c + 1)?;
            }
            if r + 1 < h {
                link(r + 1, c)?;
            }
        }
    }

    for &(label, center) in &config.star_centers {
        problem.add_star_prior(StarPrior::on_grid(label, grid, center, config.star_beta)?)?;
    }
    for &(p, q) in &config.equal_sizes {
        let c = equal_class_sizes(&problem, p, q)?;
        problem.add_constraint(c)?;
    }
    if let Some((p, q)) = config.flux {
        let field: Vec<f64> = (0..n)
            .map(|j| {
                let px = img.pixel(j);
                let mean = px.iter().map(|&v| v as f64).sum::<f64>() / px.len() as f64;
                (mean - 127.5) / 127.5
            })
            .collect();
        let c = flux_equality(&problem, p, q, &field)?;
        problem.add_constraint(c)?;
    }
    Ok(problem)
}

//! Seeded generators for datasets with known structure.
//!
//! * [`planted_subspace`]: the class signal lives in the first two
//!   coordinates (an XOR of four blobs, so no single direction separates the
//!   classes) while the remaining coordinates are class-independent noise.
//! * [`fourclass_like`]: 862 two-dimensional points (555/307) labelled by a
//!   fixed non-linear region map with a clean margin.
//! * [`breast_cancer_like`]: 683 ten-dimensional points (444/239) from a
//!   one-factor model in which the malignant class is shifted and more
//!   dispersed along the shared factor.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{Label, LabeledDataset};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedConfig {
    pub n_minus: usize,
    pub n_plus: usize,
    pub d: usize,
    /// Distance of each blob centre from the origin in the signal plane.
    pub blob_offset: f64,
    pub blob_sd: f64,
    /// Standard deviation of the `d − 2` noise coordinates.
    pub noise_sd: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n_minus: 300,
            n_plus: 300,
            d: 10,
            blob_offset: 1.5,
            blob_sd: 0.4,
            noise_sd: 3.0,
        }
    }
}

/// Class `−` sits at `(±a, 0)`, class `+` at `(0, ±a)` in coordinates
/// `(0, 1)`; every other coordinate is `N(0, noise_sd²)` for both classes.
/// Samples are interleaved `−, +, −, +, …` until one class runs out.
pub fn planted_subspace(cfg: &PlantedConfig, seed: u64) -> Result<LabeledDataset> {
    assert!(cfg.d >= 2, "planted subspace needs d >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n_minus + cfg.n_plus;
    let mut labels = Vec::with_capacity(n);
    let (mut left_m, mut left_p) = (cfg.n_minus, cfg.n_plus);
    while left_m + left_p > 0 {
        if left_m > 0 && (left_m >= left_p || left_p == 0) {
            labels.push(Label::Minus);
            left_m -= 1;
        }
        if left_p > 0 {
            labels.push(Label::Plus);
            left_p -= 1;
        }
    }
    let mut points = Matrix::zeros(cfg.d, n);
    for (c, &label) in labels.iter().enumerate() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let (cx, cy) = match label {
            Label::Minus => (sign * cfg.blob_offset, 0.0),
            Label::Plus => (0.0, sign * cfg.blob_offset),
        };
        let ex: f64 = StandardNormal.sample(&mut rng);
        let ey: f64 = StandardNormal.sample(&mut rng);
        points[(0, c)] = cx + cfg.blob_sd * ex;
        points[(1, c)] = cy + cfg.blob_sd * ey;
        for r in 2..cfg.d {
            let e: f64 = StandardNormal.sample(&mut rng);
            points[(r, c)] = cfg.noise_sd * e;
        }
    }
    LabeledDataset::new(points, labels, None)
}

/// Label rule on `[-1, 1]²`: distance into the `+` region (positive inside).
fn fourclass_margin(x: f64, y: f64) -> f64 {
    let disk = |cx: f64, cy: f64, r: f64| r - math::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
    // two discs and a bar make up the + class; the − class fills the rest
    let a = disk(-0.5, 0.45, 0.38);
    let b = disk(0.45, -0.5, 0.3);
    let bar = 0.12 - math::abs(y - 0.55 * x - 0.05).max(math::abs(x - 0.2) - 0.45);
    a.max(b).max(bar)
}

/// 862 points in `[-1, 1]²`, 555 labelled `−1` and 307 labelled `+1`, drawn
/// uniformly with a 0.03 exclusion band around the class boundary.
pub fn fourclass_like(seed: u64) -> LabeledDataset {
    const N_MINUS: usize = 555;
    const N_PLUS: usize = 307;
    const MARGIN: f64 = 0.03;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(2 * (N_MINUS + N_PLUS));
    let mut labels = Vec::with_capacity(N_MINUS + N_PLUS);
    let (mut m, mut p) = (0, 0);
    while m < N_MINUS || p < N_PLUS {
        let x = rng.random::<f64>() * 2.0 - 1.0;
        let y = rng.random::<f64>() * 2.0 - 1.0;
        let g = fourclass_margin(x, y);
        let label = if g > MARGIN {
            Label::Plus
        } else if g < -MARGIN {
            Label::Minus
        } else {
            continue;
        };
        match label {
            Label::Plus if p < N_PLUS => p += 1,
            Label::Minus if m < N_MINUS => m += 1,
            _ => continue,
        }
        xs.push(x);
        xs.push(y);
        labels.push(label);
    }
    let points = Matrix::from_column_slice(2, labels.len(), &xs);
    LabeledDataset::new(points, labels, None).expect("generator emits both classes")
}

/// 683 points in 10 dimensions (444 `−1`, 239 `+1`).
///
/// `x = 2 + λ·s + ε` with loadings `λ_j ∈ [0.6, 1.4]`, independent
/// `ε_j ~ N(0, σ_j²)` (`σ_j ∈ [0.6, 1.2]`) and a latent severity
/// `s ~ N(0, 0.5²)` for `−1`, `s ~ N(3, 1.2²)` for `+1`.
pub fn breast_cancer_like(seed: u64) -> LabeledDataset {
    const N_MINUS: usize = 444;
    const N_PLUS: usize = 239;
    const D: usize = 10;
    let loadings = [1.4, 1.2, 1.3, 0.9, 0.8, 1.1, 1.0, 0.7, 0.6, 1.0];
    let noise = [0.9, 0.8, 0.7, 1.0, 1.1, 0.6, 0.9, 1.2, 1.0, 0.8];
    let benign = Normal::new(0.0, 0.5).expect("valid");
    let malignant = Normal::new(3.0, 1.2).expect("valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = N_MINUS + N_PLUS;
    let mut points = Matrix::zeros(D, n);
    let mut labels = Vec::with_capacity(n);
    for c in 0..n {
        // 444/239 interleaved roughly proportionally
        let label = if (c * N_PLUS) % n < N_PLUS { Label::Plus } else { Label::Minus };
        let s = match label {
            Label::Minus => benign.sample(&mut rng),
            Label::Plus => malignant.sample(&mut rng),
        };
        for r in 0..D {
            let e: f64 = StandardNormal.sample(&mut rng);
            points[(r, c)] = 2.0 + loadings[r] * s + noise[r] * e;
        }
        labels.push(label);
    }
    LabeledDataset::new(points, labels, None).expect("generator emits both classes")
}

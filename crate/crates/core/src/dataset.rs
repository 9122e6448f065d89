//! Binary labeled datasets: validation, class split, standardization and
//! stratified k-fold plans.
//!
//! Points are stored as a `d×N` matrix with one sample per column. All
//! values are validated at construction and immutable afterwards.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::math;

/// Class tag. `Minus` sorts before `Plus`, and ties in classifiers resolve
/// toward `Minus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Minus,
    Plus,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Minus => -1,
            Label::Plus => 1,
        }
    }

    pub fn from_sign(s: i8) -> Option<Self> {
        match s {
            -1 => Some(Label::Minus),
            1 => Some(Label::Plus),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Minus => Label::Plus,
            Label::Plus => Label::Minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Matrix,
    labels: Vec<Label>,
    feature_names: Option<Vec<String>>,
}

impl LabeledDataset {
    /// Validates: `N >= 2`, both labels present, finite entries, matching
    /// lengths.
    pub fn new(
        points: Matrix,
        labels: Vec<Label>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if labels.len() != points.ncols() {
            return Err(Error::Dimension(format!(
                "{} labels for {} point columns",
                labels.len(),
                points.ncols()
            )));
        }
        if points.ncols() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: points.ncols(),
            });
        }
        if points.nrows() == 0 {
            return Err(Error::InvalidDataset("zero features".into()));
        }
        if let Some((idx, _)) = points.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            let (row, col) = (idx % points.nrows(), idx / points.nrows());
            return Err(Error::NonFinite(format!("feature {row} of sample {col}")));
        }
        if !labels.contains(&Label::Minus) || !labels.contains(&Label::Plus) {
            return Err(Error::InvalidDataset("both classes must be present".into()));
        }
        if let Some(names) = &feature_names {
            if names.len() != points.nrows() {
                return Err(Error::Dimension(format!(
                    "{} feature names for {} features",
                    names.len(),
                    points.nrows()
                )));
            }
        }
        Ok(Self {
            points,
            labels,
            feature_names,
        })
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Number of features `d`.
    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(N₋, N₊)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let plus = self.labels.iter().filter(|&&l| l == Label::Plus).count();
        (self.labels.len() - plus, plus)
    }

    /// Samples at `indices`, in that order. Fails if the subset loses a class.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let points = self.points.select_columns(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(points, labels, self.feature_names.clone())
    }

    /// Same labels with new coordinates (e.g. a projection `VᵀX`).
    pub fn with_points(&self, points: Matrix) -> Result<Self> {
        Self::new(points, self.labels.clone(), None)
    }

    /// Content hash of the class-partitioned points (see [`fingerprint`]).
    pub fn fingerprint(&self) -> String {
        let (xm, xp) = class_partition(self);
        fingerprint(&xm, &xp)
    }
}

/// SHA-256 over dimensions and little-endian values of `X₋` then `X₊`.
pub fn fingerprint(x_minus: &Matrix, x_plus: &Matrix) -> String {
    let mut h = Sha256::new();
    for m in [x_minus, x_plus] {
        h.update((m.nrows() as u64).to_le_bytes());
        h.update((m.ncols() as u64).to_le_bytes());
        for x in m.iter() {
            h.update(x.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Split into `(X₋, X₊)`, preserving dataset order within each class.
pub fn class_partition(ds: &LabeledDataset) -> (Matrix, Matrix) {
    let (minus, plus): (Vec<usize>, Vec<usize>) =
        (0..ds.len()).partition(|&i| ds.labels[i] == Label::Minus);
    (
        ds.points.select_columns(&minus),
        ds.points.select_columns(&plus),
    )
}

/// `x ↦ linear·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: Matrix,
    offset: DVector<f64>,
}

impl AffineMap {
    /// Requires a square, finite, well-conditioned `linear` part.
    pub fn new(linear: Matrix, offset: DVector<f64>) -> Result<Self> {
        let d = linear.nrows();
        if linear.ncols() != d || offset.len() != d {
            return Err(Error::Dimension(format!(
                "affine map {}x{} with offset of length {}",
                linear.nrows(),
                linear.ncols(),
                offset.len()
            )));
        }
        if !linalg::all_finite(&linear) || offset.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("affine map".into()));
        }
        let s = linalg::singular_values(&linear);
        let ratio = s.last().copied().unwrap_or(0.0) / s[0];
        if !(ratio > 1e-14) {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(Self { linear, offset })
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    /// Apply to every column of `points`.
    pub fn apply(&self, points: &Matrix) -> Matrix {
        let mut out = &self.linear * points;
        for mut col in out.column_iter_mut() {
            col += &self.offset;
        }
        out
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .linear
            .clone()
            .try_inverse()
            .ok_or(Error::RankDeficient { ratio: 0.0 })?;
        let offset = -(&inv * &self.offset);
        Self::new(inv, offset)
    }
}

/// Per-feature z-scoring with the unbiased (`N−1`) standard deviation.
/// Constant features keep scale 1 and are only centered.
pub fn standardize(ds: &LabeledDataset) -> (LabeledDataset, AffineMap) {
    let d = ds.dim();
    let n = ds.len() as f64;
    let mean = linalg::row_means(&ds.points);
    let mut scale = DVector::from_element(d, 1.0);
    for f in 0..d {
        let ss: f64 = ds.points.row(f).iter().map(|x| (x - mean[f]) * (x - mean[f])).sum();
        let sd = math::sqrt(ss / (n - 1.0));
        if sd > 0.0 && sd.is_finite() {
            scale[f] = 1.0 / sd;
        }
    }
    let offset = -mean.component_mul(&scale);
    let map = AffineMap::new(Matrix::from_diagonal(&scale), offset)
        .expect("diagonal map with positive finite scales is invertible");
    let points = map.apply(&ds.points);
    let out = LabeledDataset {
        points,
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
    };
    (out, map)
}

/// Assignment of every sample to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    fold_count: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Stratified, seeded k-fold split.
///
/// Each class is shuffled independently and the concatenated class lists are
/// dealt round-robin, so every fold receives `⌊n_c/folds⌋` or `⌈n_c/folds⌉`
/// samples of class `c` and fold sizes differ by at most one.
pub fn split_kfold(ds: &LabeledDataset, folds: usize, seed: u64) -> Result<FoldPlan> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!(
            "fold count must be at least 2, got {folds}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = alloc::vec![0usize; ds.len()];
    let mut dealt = 0usize;
    for label in [Label::Minus, Label::Plus] {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == label).collect();
        if idx.len() < folds {
            return Err(Error::ClassSmallerThanFolds {
                label: label.sign(),
                count: idx.len(),
                folds,
            });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            assignments[i] = dealt % folds;
            dealt += 1;
        }
    }
    Ok(FoldPlan {
        fold_count: folds,
        assignments,
    })
}

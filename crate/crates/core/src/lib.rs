//! Maximum-divergence linear manifolds for binary labeled data.
//!
//! Given two classes of points in `R^d`, this crate searches for a `d×k`
//! projection `V` whose projected classes have maximally divergent Gaussian
//! kernel density estimates, measured by the Cauchy-Schwarz divergence
//!
//! ```text
//! DCS(V) = log ∫f₊² + log ∫f₋² − 2 log ∫f₊f₋
//! ```
//!
//! where `f±` are KDEs of `VᵀX±` with Silverman bandwidths. The search runs
//! over unconstrained `V` with an orthonormality penalty,
//! `MELM(V) = DCS(V) − ‖VᵀV − I‖²`, using analytic gradients and a
//! limited-memory quasi-Newton ascent with random orthonormal restarts.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`dataset`] | labeled point clouds, standardization, stratified folds |
//! | [`density`] | bandwidths, pooled covariances, log information potentials, KDE |
//! | [`objective`] | divergence, penalty and their gradients |
//! | [`optimizer`] | ascent, multistart, expected-max-of-s curves |
//! | [`baselines`] | PCA, class PCA, per-class PCA, Gaussian entropy |
//! | [`eval`] | balanced accuracy, KNN/KDE classifiers, benchmark protocols |
//! | [`synthetic`] | seeded generators with planted ground truth |
//!
//! The crate is `no_std` and needs only `alloc`. Matrices are column-major
//! [`nalgebra::DMatrix`] with **samples as columns**: a dataset with `N`
//! points in `d` dimensions is a `d×N` matrix, so `VᵀX` is the projection.
//! IO, file formats and the command-line tool live in the `melm` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod dataset;
pub mod density;
pub mod eval;
pub mod exec;
pub mod linalg;
pub mod objective;
pub mod optimizer;
pub mod synthetic;

mod error;
mod math;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use linalg::Matrix;

pub use dataset::{AffineMap, FoldPlan, Label, LabeledDataset};
pub use density::{BandwidthConfig, KdeModel, PooledBandwidthCov};
pub use objective::{ObjectiveValue, ObjectiveWorkspace, ProjectionMatrix};
pub use optimizer::{MelmModel, OptimConfig, RestartTrace};

//! Versioned JSON model file.

use std::path::Path;

use melm_core::optimizer::{ARMIJO_C1, BACKTRACK_FACTOR, CURVATURE_EPS, MAX_BACKTRACKS};
use melm_core::{linalg, Matrix, MelmModel, OptimConfig, ProjectionMatrix};
use serde::{Deserialize, Serialize};

use crate::io::{write_atomic, IoError};

pub const MODEL_SCHEMA_VERSION: u32 = 1;
/// Largest `‖VᵀV − I‖²` accepted when loading.
pub const LOAD_ORTHONORMALITY_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model schema version {0} (expected {MODEL_SCHEMA_VERSION})")]
    Version(u32),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Optimizer settings plus the fixed line-search constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerEcho {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub memory: usize,
    pub penalty_weight: f64,
    pub armijo_c1: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub curvature_eps: f64,
}

impl From<&OptimConfig> for OptimizerEcho {
    fn from(o: &OptimConfig) -> Self {
        Self {
            max_iters: o.max_iters,
            grad_tol: o.grad_tol,
            step_tol: o.step_tol,
            memory: o.memory,
            penalty_weight: o.penalty_weight,
            armijo_c1: ARMIJO_C1,
            backtrack_factor: BACKTRACK_FACTOR,
            max_backtracks: MAX_BACKTRACKS,
            curvature_eps: CURVATURE_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub d: usize,
    pub k: usize,
    pub gamma: f64,
    /// `V` in row-major order, length `d·k`.
    pub v: Vec<f64>,
    pub dcs: f64,
    pub restarts: usize,
    pub seed: u64,
    pub optimizer: OptimizerEcho,
    /// SHA-256 of the training data (see `melm_core::dataset::fingerprint`).
    pub fingerprint: String,
}

impl From<&MelmModel> for ModelFile {
    fn from(m: &MelmModel) -> Self {
        let v = m.v.matrix();
        let row_major = (0..m.d).flat_map(|r| (0..m.k).map(move |c| v[(r, c)])).collect();
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            d: m.d,
            k: m.k,
            gamma: m.gamma,
            v: row_major,
            dcs: m.dcs_achieved,
            restarts: m.restarts,
            seed: m.seed,
            optimizer: OptimizerEcho::from(&m.optim),
            fingerprint: m.fingerprint.clone(),
        }
    }
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let m: ModelFile = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(write_atomic(path, self.to_json().as_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(ModelError::Version(self.schema_version));
        }
        if self.k == 0 || self.k > self.d {
            return Err(ModelError::Invalid(format!("k = {} with d = {}", self.k, self.d)));
        }
        if self.v.len() != self.d * self.k {
            return Err(ModelError::Invalid(format!(
                "v has {} entries, expected d·k = {}",
                self.v.len(),
                self.d * self.k
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(ModelError::Invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        let pen = linalg::frobenius_sq(&(self.projection_matrix().transpose() * self.projection_matrix()
            - Matrix::identity(self.k, self.k)));
        if !(pen <= LOAD_ORTHONORMALITY_TOL) {
            return Err(ModelError::Invalid(format!(
                "columns of v are not orthonormal (‖VᵀV − I‖² = {pen:e})"
            )));
        }
        Ok(())
    }

    fn projection_matrix(&self) -> Matrix {
        Matrix::from_row_slice(self.d, self.k, &self.v)
    }

    pub fn projection(&self) -> Result<ProjectionMatrix, ModelError> {
        ProjectionMatrix::new(self.projection_matrix()).map_err(|e| ModelError::Invalid(e.to_string()))
    }

    pub fn optim_config(&self) -> OptimConfig {
        OptimConfig {
            max_iters: self.optimizer.max_iters,
            grad_tol: self.optimizer.grad_tol,
            step_tol: self.optimizer.step_tol,
            memory: self.optimizer.memory,
            seed: self.seed,
            penalty_weight: self.optimizer.penalty_weight,
        }
    }

    pub fn to_model(&self) -> Result<MelmModel, ModelError> {
        Ok(MelmModel {
            v: self.projection()?,
            gamma: self.gamma,
            dcs_achieved: self.dcs,
            d: self.d,
            k: self.k,
            restarts: self.restarts,
            seed: self.seed,
            fingerprint: self.fingerprint.clone(),
            optim: self.optim_config(),
        })
    }
}

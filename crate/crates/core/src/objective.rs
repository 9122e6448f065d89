//! The penalized divergence objective
//! `MELM(V) = DCS(V) − ‖VᵀV − I‖²` and its analytic gradient.
//!
//! `DCS(V) = log ip×₊₊ + log ip×₋₋ − 2 log ip×₊₋` where each term is a log
//! information potential of the projected class KDEs (see
//! [`crate::density`]). The divergence depends only on the span of `V`:
//! `DCS(VR) = DCS(V)` for every invertible `k×k` matrix `R`, so its
//! gradient is orthogonal to `V` (`Vᵀ∇DCS = 0`).

use alloc::format;

use crate::dataset;
use crate::density::{self, BandwidthConfig, PooledBandwidthCov};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::math;

/// Smallest admissible ratio of extreme singular values.
pub const MIN_SINGULAR_RATIO: f64 = 1e-8;

/// A `d×k` matrix with finite entries and linearly independent columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    v: Matrix,
}

impl ProjectionMatrix {
    pub fn new(v: Matrix) -> Result<Self> {
        let (d, k) = v.shape();
        if k == 0 || k > d {
            return Err(Error::BadTargetDim { k, d });
        }
        if !linalg::all_finite(&v) {
            return Err(Error::NonFinite("projection matrix".into()));
        }
        let s = linalg::singular_values(&v);
        let ratio = if s[0] > 0.0 { s[k - 1] / s[0] } else { 0.0 };
        if !(ratio > MIN_SINGULAR_RATIO) {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(Self { v })
    }

    /// `d×d` identity.
    pub fn identity(d: usize) -> Self {
        Self {
            v: Matrix::identity(d, d),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.v
    }

    pub fn into_matrix(self) -> Matrix {
        self.v
    }

    pub fn d(&self) -> usize {
        self.v.nrows()
    }

    pub fn k(&self) -> usize {
        self.v.ncols()
    }

    /// Gram matrix `G(V) = VᵀV`.
    pub fn gram(&self) -> Matrix {
        self.v.transpose() * &self.v
    }

    /// `VᵀX` for a `d×N` sample matrix.
    pub fn project(&self, points: &Matrix) -> Matrix {
        self.v.transpose() * points
    }

    /// Orthonormal basis of the same span.
    pub fn orthonormalized(&self) -> Self {
        Self {
            v: linalg::orthonormalize_columns(&self.v),
        }
    }
}

/// One evaluation of the objective with its term breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub dcs: f64,
    pub penalty: f64,
    pub melm: f64,
    pub log_ip_pp: f64,
    pub log_ip_mm: f64,
    pub log_ip_pm: f64,
}

impl ObjectiveValue {
    /// `(fitting, regularizing) = (2H₂×(f₊,f₋), H₂(f₋) + H₂(f₊))`.
    pub fn decomposition(&self) -> (f64, f64) {
        (-2.0 * self.log_ip_pm, -self.log_ip_pp - self.log_ip_mm)
    }
}

/// Class data plus the three pooled covariances for fixed `k` and `γ`.
/// Read-only after construction; one instance may serve many threads.
#[derive(Debug, Clone)]
pub struct ObjectiveWorkspace {
    x_plus: Matrix,
    x_minus: Matrix,
    sigma_pp: PooledBandwidthCov,
    sigma_mm: PooledBandwidthCov,
    sigma_pm: PooledBandwidthCov,
    cfg: BandwidthConfig,
    penalty_weight: f64,
}

impl ObjectiveWorkspace {
    pub fn new(x_plus: &Matrix, x_minus: &Matrix, k: usize, cfg: BandwidthConfig) -> Result<Self> {
        let d = x_plus.nrows();
        if x_minus.nrows() != d {
            return Err(Error::Dimension(format!(
                "class dimensions differ: {} vs {}",
                d,
                x_minus.nrows()
            )));
        }
        if k == 0 || k > d {
            return Err(Error::BadTargetDim { k, d });
        }
        for m in [x_plus, x_minus] {
            if m.ncols() < 2 {
                return Err(Error::TooFewSamples {
                    needed: 2,
                    got: m.ncols(),
                });
            }
        }
        Ok(Self {
            sigma_pp: density::pooled_bandwidth_cov(x_plus, x_plus, k, cfg)?,
            sigma_mm: density::pooled_bandwidth_cov(x_minus, x_minus, k, cfg)?,
            sigma_pm: density::pooled_bandwidth_cov(x_plus, x_minus, k, cfg)?,
            x_plus: x_plus.clone(),
            x_minus: x_minus.clone(),
            cfg,
            penalty_weight: 1.0,
        })
    }

    /// Scale the orthonormality penalty (default 1).
    pub fn with_penalty_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "penalty weight must be finite and non-negative, got {weight}"
            )));
        }
        self.penalty_weight = weight;
        Ok(self)
    }

    pub fn from_dataset(ds: &dataset::LabeledDataset, k: usize, cfg: BandwidthConfig) -> Result<Self> {
        let (xm, xp) = dataset::class_partition(ds);
        Self::new(&xp, &xm, k, cfg)
    }

    pub fn dim(&self) -> usize {
        self.x_plus.nrows()
    }

    pub fn k(&self) -> usize {
        self.sigma_pp.k
    }

    pub fn bandwidth(&self) -> BandwidthConfig {
        self.cfg
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight
    }

    pub fn x_plus(&self) -> &Matrix {
        &self.x_plus
    }

    pub fn x_minus(&self) -> &Matrix {
        &self.x_minus
    }

    fn check_shape(&self, v: &Matrix) -> Result<()> {
        if v.nrows() != self.dim() || v.ncols() != self.k() {
            return Err(Error::Dimension(format!(
                "expected a {}x{} projection, got {}x{}",
                self.dim(),
                self.k(),
                v.nrows(),
                v.ncols()
            )));
        }
        if !linalg::all_finite(v) {
            return Err(Error::NonFinite("projection matrix".into()));
        }
        Ok(())
    }

    /// Objective value at a raw `d×k` matrix (no independence check beyond
    /// what the factorizations enforce).
    pub fn value(&self, v: &Matrix) -> Result<ObjectiveValue> {
        self.evaluate(v, false).map(|(val, _)| val)
    }

    /// Value and `∇MELM`.
    pub fn value_and_gradient(&self, v: &Matrix) -> Result<(ObjectiveValue, Matrix)> {
        let (val, grads) = self.evaluate(v, true)?;
        let (g_dcs, g_pen) = grads.expect("gradient requested");
        Ok((val, g_dcs - g_pen * self.penalty_weight))
    }

    /// `∇DCS` only.
    pub fn dcs_gradient(&self, v: &Matrix) -> Result<Matrix> {
        let (_, grads) = self.evaluate(v, true)?;
        Ok(grads.expect("gradient requested").0)
    }

    fn evaluate(&self, v: &Matrix, want_grad: bool) -> Result<(ObjectiveValue, Option<(Matrix, Matrix)>)> {
        self.check_shape(v)?;
        let pp = density::log_ip(&self.x_plus, None, &self.sigma_pp.sigma_ab, v, want_grad)?;
        let mm = density::log_ip(&self.x_minus, None, &self.sigma_mm.sigma_ab, v, want_grad)?;
        let pm = density::log_ip(
            &self.x_plus,
            Some(&self.x_minus),
            &self.sigma_pm.sigma_ab,
            v,
            want_grad,
        )?;
        let dcs = pp.log_ip + mm.log_ip - 2.0 * pm.log_ip;
        let pen = penalty_matrix(v);
        let value = ObjectiveValue {
            dcs,
            penalty: pen,
            melm: dcs - self.penalty_weight * pen,
            log_ip_pp: pp.log_ip,
            log_ip_mm: mm.log_ip,
            log_ip_pm: pm.log_ip,
        };
        let grads = if want_grad {
            let g = pp.grad.expect("requested") + mm.grad.expect("requested")
                - pm.grad.expect("requested") * 2.0;
            Some((g, penalty_gradient_matrix(v)))
        } else {
            None
        };
        Ok((value, grads))
    }
}

fn penalty_matrix(v: &Matrix) -> f64 {
    let k = v.ncols();
    linalg::frobenius_sq(&(v.transpose() * v - Matrix::identity(k, k)))
}

fn penalty_gradient_matrix(v: &Matrix) -> Matrix {
    let vvt_v = v * (v.transpose() * v);
    (vvt_v - v) * 4.0
}

/// Cauchy-Schwarz divergence of the projected class KDEs.
pub fn dcs(v: &ProjectionMatrix, x_plus: &Matrix, x_minus: &Matrix, cfg: BandwidthConfig) -> Result<f64> {
    ObjectiveWorkspace::new(x_plus, x_minus, v.k(), cfg)?
        .value(v.matrix())
        .map(|o| o.dcs)
}

/// `∇DCS(V)`, a `d×k` matrix.
pub fn dcs_gradient(
    v: &ProjectionMatrix,
    x_plus: &Matrix,
    x_minus: &Matrix,
    cfg: BandwidthConfig,
) -> Result<Matrix> {
    ObjectiveWorkspace::new(x_plus, x_minus, v.k(), cfg)?.dcs_gradient(v.matrix())
}

/// `‖VᵀV − I‖²` (squared Frobenius norm).
pub fn penalty(v: &Matrix) -> f64 {
    penalty_matrix(v)
}

/// `4VVᵀV − 4V`.
pub fn penalty_gradient(v: &Matrix) -> Matrix {
    penalty_gradient_matrix(v)
}

pub fn melm_value(
    v: &ProjectionMatrix,
    x_plus: &Matrix,
    x_minus: &Matrix,
    cfg: BandwidthConfig,
) -> Result<ObjectiveValue> {
    ObjectiveWorkspace::new(x_plus, x_minus, v.k(), cfg)?.value(v.matrix())
}

/// `∇MELM(V) = ∇DCS(V) − (4VVᵀV − 4V)`.
pub fn melm_gradient(
    v: &ProjectionMatrix,
    x_plus: &Matrix,
    x_minus: &Matrix,
    cfg: BandwidthConfig,
) -> Result<Matrix> {
    ObjectiveWorkspace::new(x_plus, x_minus, v.k(), cfg)?
        .value_and_gradient(v.matrix())
        .map(|(_, g)| g)
}

/// `(fitting, regularizing)` with `fitting − regularizing = DCS`.
pub fn decompose(
    v: &ProjectionMatrix,
    x_plus: &Matrix,
    x_minus: &Matrix,
    cfg: BandwidthConfig,
) -> Result<(f64, f64)> {
    melm_value(v, x_plus, x_minus, cfg).map(|o| o.decomposition())
}

/// Central finite differences of `MELM` with per-entry step
/// `h = 1e-5·(1 + |v_ij|)`.
pub fn finite_difference_gradient(ws: &ObjectiveWorkspace, v: &Matrix) -> Result<Matrix> {
    let mut g = Matrix::zeros(v.nrows(), v.ncols());
    let mut w = v.clone();
    for c in 0..v.ncols() {
        for r in 0..v.nrows() {
            let x = v[(r, c)];
            let h = 1e-5 * (1.0 + math::abs(x));
            w[(r, c)] = x + h;
            let up = ws.value(&w)?.melm;
            w[(r, c)] = x - h;
            let down = ws.value(&w)?.melm;
            w[(r, c)] = x;
            g[(r, c)] = (up - down) / (2.0 * h);
        }
    }
    Ok(g)
}

/// `‖analytic − reference‖_max / ‖reference‖_max`, falling back to the
/// absolute error when the reference vanishes.
pub fn gradient_relative_error(analytic: &Matrix, reference: &Matrix) -> f64 {
    let err = linalg::max_abs(&(analytic - reference));
    let scale = linalg::max_abs(reference);
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Relative error of the analytic `∇MELM` against finite differences.
pub fn gradient_check(ws: &ObjectiveWorkspace, v: &Matrix) -> Result<f64> {
    let (_, g) = ws.value_and_gradient(v)?;
    Ok(gradient_relative_error(&g, &finite_difference_gradient(ws, v)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(rows: usize, cols: usize, vals: &[f64]) -> ProjectionMatrix {
        ProjectionMatrix::new(Matrix::from_column_slice(rows, cols, vals)).unwrap()
    }

    fn toy_classes() -> (Matrix, Matrix) {
        let xp = Matrix::from_column_slice(3, 5, &[
            0.1, 1.2, -0.3, 0.9, -0.4, 0.3, 1.1, 0.8, -1.0, 0.2, 0.0, 0.7, 1.5, 0.1, -0.6,
        ]);
        let xm = Matrix::from_column_slice(3, 4, &[
            2.1, 0.2, 0.3, 1.9, -0.4, 1.3, 3.1, 0.5, 0.2, 2.5, 0.1, -0.9,
        ]);
        (xp, xm)
    }

    #[test]
    fn projection_matrix_validation() {
        assert!(matches!(
            ProjectionMatrix::new(Matrix::zeros(3, 2)),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            ProjectionMatrix::new(Matrix::from_column_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])),
            Err(Error::RankDeficient { .. })
        ));
        assert_eq!(
            ProjectionMatrix::new(Matrix::zeros(2, 3)).unwrap_err(),
            Error::BadTargetDim { k: 3, d: 2 }
        );
        let v = pm(2, 1, &[3.0, 4.0]);
        assert_eq!(v.gram()[(0, 0)], 25.0);
    }

    #[test]
    fn penalty_examples() {
        let v = Matrix::from_column_slice(2, 1, &[2.0, 0.0]);
        assert_eq!(penalty(&v), 9.0);
        assert_eq!(penalty_gradient(&v), Matrix::from_column_slice(2, 1, &[24.0, 0.0]));
        let q = Matrix::from_column_slice(2, 2, &[0.6, 0.8, -0.8, 0.6]);
        assert!(penalty(&q) < 1e-30);
        assert!(penalty_gradient(&q).abs().max() < 1e-15);
        let swapped = Matrix::from_column_slice(2, 2, &[-0.8, 0.6, 0.6, 0.8]);
        assert!(penalty(&swapped) < 1e-30);
    }

    #[test]
    fn identical_classes_have_zero_divergence() {
        let (xp, _) = toy_classes();
        let v = pm(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let cfg = BandwidthConfig::default();
        let o = melm_value(&v, &xp, &xp, cfg).unwrap();
        assert!(o.dcs.abs() < 1e-13);
        assert!(o.melm.abs() < 1e-13);
        let (fit, reg) = o.decomposition();
        assert!((fit - reg).abs() < 1e-13);
    }

    #[test]
    fn value_breakdown_consistent() {
        let (xp, xm) = toy_classes();
        let v = pm(3, 2, &[1.0, 0.2, 0.0, 0.1, 1.5, 0.3]);
        let o = melm_value(&v, &xp, &xm, BandwidthConfig::default()).unwrap();
        assert_eq!(o.melm, o.dcs - o.penalty);
        assert_eq!(o.dcs, o.log_ip_pp + o.log_ip_mm - 2.0 * o.log_ip_pm);
        assert!(o.dcs > 0.0);
        assert!(o.melm <= o.dcs);
        let (fit, reg) = decompose(&v, &xp, &xm, BandwidthConfig::default()).unwrap();
        assert!((fit - reg - o.dcs).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_v_melm_equals_dcs() {
        let (xp, xm) = toy_classes();
        let v = pm(3, 2, &[1.0, 0.2, 0.0, 0.1, 1.5, 0.3]).orthonormalized();
        let o = melm_value(&v, &xp, &xm, BandwidthConfig::default()).unwrap();
        assert!((o.melm - o.dcs).abs() < 1e-14);
    }

    #[test]
    fn shear_invariance_and_tangency() {
        let (xp, xm) = toy_classes();
        let cfg = BandwidthConfig::new(0.8).unwrap();
        let vm = Matrix::from_column_slice(3, 2, &[1.0, 0.2, 0.0, 0.1, 1.5, 0.3]);
        let r = Matrix::from_column_slice(2, 2, &[2.0, 0.5, -0.3, 0.7]);
        let a = dcs(&ProjectionMatrix::new(vm.clone()).unwrap(), &xp, &xm, cfg).unwrap();
        let b = dcs(&ProjectionMatrix::new(&vm * r).unwrap(), &xp, &xm, cfg).unwrap();
        assert!((a - b).abs() < 1e-10);
        let g = dcs_gradient(&ProjectionMatrix::new(vm.clone()).unwrap(), &xp, &xm, cfg).unwrap();
        assert!(linalg::max_abs(&(vm.transpose() * g)) < 1e-8);
    }

    #[test]
    fn workspace_rejects_bad_shapes() {
        let (xp, xm) = toy_classes();
        let ws = ObjectiveWorkspace::new(&xp, &xm, 2, BandwidthConfig::default()).unwrap();
        assert!(matches!(ws.value(&Matrix::zeros(3, 1)), Err(Error::Dimension(_))));
        assert!(ObjectiveWorkspace::new(&xp, &xm, 4, BandwidthConfig::default()).is_err());
        assert!(ObjectiveWorkspace::new(&xp.columns(0, 1).into_owned(), &xm, 1, BandwidthConfig::default()).is_err());
        assert!(ws.clone().with_penalty_weight(-1.0).is_err());
    }
}

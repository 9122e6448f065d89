//! PCA-family linear reductions: plain PCA, class-covariance PCA (weighted
//! `cPCA` and unweighted `2ePCA`), per-class PCA (`pPCA`), and the Gaussian
//! maximum-likelihood entropy whose extrema over orthonormal `V` are the
//! leading and trailing principal subspaces.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::density::covariance;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SortedEigen};
use crate::math;
use crate::objective::ProjectionMatrix;

/// Relative gap below which neighbouring eigenvalues count as tied.
pub const EIGEN_TIE_TOL: f64 = 1e-10;
/// Angle (radians) below which pPCA directions count as collinear.
pub const COLLINEAR_ANGLE: f64 = 1e-6;

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn of(sym: &Matrix) -> Self {
        let SortedEigen { values, vectors } = linalg::sorted_symmetric_eigen(sym);
        Self {
            eigenvalues: values,
            eigenvectors: vectors,
        }
    }

    /// Whether `λ_k` and `λ_{k+1}` are tied, making the top-k span ambiguous.
    pub fn tied_at(&self, k: usize) -> bool {
        if k == 0 || k >= self.eigenvalues.len() {
            return false;
        }
        let scale = math::abs(self.eigenvalues[0]).max(f64::MIN_POSITIVE);
        math::abs(self.eigenvalues[k - 1] - self.eigenvalues[k]) <= EIGEN_TIE_TOL * scale
    }
}

/// Reasons a baseline result deserves a second look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineFlag {
    /// The `k`-th and `k+1`-th eigenvalues tie; the solver's order was used.
    EigenvalueTie,
    /// pPCA directions were collinear; the second column is the second
    /// principal component of the pooled data.
    CollinearFallback,
}

#[derive(Debug, Clone)]
pub struct BaselineProjection {
    pub v: ProjectionMatrix,
    pub flag: Option<BaselineFlag>,
}

fn top_k(cov: &Matrix, k: usize) -> Result<BaselineProjection> {
    let d = cov.nrows();
    if k == 0 || k > d {
        return Err(Error::BadTargetDim { k, d });
    }
    let eig = EigenDecomposition::of(cov);
    let mut v = eig.eigenvectors.columns(0, k).into_owned();
    linalg::canonical_signs(&mut v);
    Ok(BaselineProjection {
        v: ProjectionMatrix::new(v)?,
        flag: eig.tied_at(k).then_some(BaselineFlag::EigenvalueTie),
    })
}

/// Top-`k` eigenvectors of the covariance of `x` (`d×N`). Each column's
/// largest-magnitude entry is made positive.
pub fn pca(x: &Matrix, k: usize) -> Result<BaselineProjection> {
    top_k(&covariance(x)?, k)
}

/// Top-`k` eigenvectors of `N₋/N·cov₋ + N₊/N·cov₊` (`weighted`) or
/// `cov₋ + cov₊`.
pub fn class_pca(x_plus: &Matrix, x_minus: &Matrix, k: usize, weighted: bool) -> Result<BaselineProjection> {
    let cp = covariance(x_plus)?;
    let cm = covariance(x_minus)?;
    let pooled = if weighted {
        let (np, nm) = (x_plus.ncols() as f64, x_minus.ncols() as f64);
        let n = np + nm;
        cm * (nm / n) + cp * (np / n)
    } else {
        cm + cp
    };
    top_k(&pooled, k)
}

fn first_pc(x: &Matrix) -> Result<Matrix> {
    let eig = EigenDecomposition::of(&covariance(x)?);
    if !(eig.eigenvalues[0] > 0.0) {
        return Err(Error::InvalidDataset(
            "class covariance is zero; no principal direction".into(),
        ));
    }
    let mut v = eig.eigenvectors.columns(0, 1).into_owned();
    linalg::canonical_signs(&mut v);
    Ok(v)
}

/// `V = [pc₁(X₋), pc₁(X₊)]`, kept as is (not orthogonalized). When the two
/// directions are collinear the second column becomes the second principal
/// component of the pooled data and the result is flagged.
pub fn per_class_pca(x_plus: &Matrix, x_minus: &Matrix) -> Result<BaselineProjection> {
    let d = x_plus.nrows();
    if d < 2 {
        return Err(Error::BadTargetDim { k: 2, d });
    }
    let a = first_pc(x_minus)?;
    let b = first_pc(x_plus)?;
    let cos = (a.transpose() * &b)[(0, 0)].abs().min(1.0);
    let angle = libm::acos(cos);
    if angle >= COLLINEAR_ANGLE {
        let mut v = Matrix::zeros(d, 2);
        v.set_column(0, &a.column(0));
        v.set_column(1, &b.column(0));
        if let Ok(v) = ProjectionMatrix::new(v) {
            return Ok(BaselineProjection { v, flag: None });
        }
    }
    let pooled = Matrix::from_fn(d, x_plus.ncols() + x_minus.ncols(), |r, c| {
        if c < x_minus.ncols() {
            x_minus[(r, c)]
        } else {
            x_plus[(r, c - x_minus.ncols())]
        }
    });
    let eig = EigenDecomposition::of(&covariance(&pooled)?);
    // second pooled component; later components only if it is itself
    // collinear with pc₁(X₋)
    for c in (1..d).chain(core::iter::once(0)) {
        let mut cand = eig.eigenvectors.columns(c, 1).into_owned();
        linalg::canonical_signs(&mut cand);
        let mut v = Matrix::zeros(d, 2);
        v.set_column(0, &a.column(0));
        v.set_column(1, &cand.column(0));
        if let Ok(v) = ProjectionMatrix::new(v) {
            return Ok(BaselineProjection {
                v,
                flag: Some(BaselineFlag::CollinearFallback),
            });
        }
    }
    Err(Error::InvalidDataset(format!(
        "per-class PCA fallback is degenerate in {d} dimensions"
    )))
}

/// `H₂` of the Gaussian ML fit to `VᵀX`:
/// `(k/2) log(4π) + ½ log det(VᵀΣV)` with `Σ = cov(X)`.
pub fn gaussian_mle_entropy(x: &Matrix, v: &ProjectionMatrix) -> Result<f64> {
    if x.nrows() != v.d() {
        return Err(Error::Dimension(format!(
            "data has {} features, projection expects {}",
            x.nrows(),
            v.d()
        )));
    }
    let cov = covariance(x)?;
    let proj = v.matrix().transpose() * cov * v.matrix();
    crate::density::renyi_entropy_gaussian(&proj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pca_on_diagonal_line() {
        let x = Matrix::from_row_slice(2, 4, &[-2.0, -1.0, 1.0, 2.0, -2.0, -1.0, 1.0, 2.0]);
        let p = pca(&x, 1).unwrap();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        assert!((p.v.matrix()[(0, 0)] - r).abs() < 1e-12);
        assert!((p.v.matrix()[(1, 0)] - r).abs() < 1e-12);
        assert_eq!(p.flag, None);
    }

    #[test]
    fn pca_isotropic_is_flagged() {
        // square corners: covariance proportional to I
        let x = Matrix::from_row_slice(2, 4, &[1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        let p = pca(&x, 1).unwrap();
        assert_eq!(p.flag, Some(BaselineFlag::EigenvalueTie));
        assert!((p.v.gram()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(pca(&x, 3).is_err());
    }

    #[test]
    fn equal_sizes_weighted_matches_unweighted() {
        let xp = Matrix::from_row_slice(3, 4, &[
            1.0, 2.0, 0.5, -1.0, 0.3, -0.2, 0.9, 1.1, 2.0, 0.0, -1.5, 0.7,
        ]);
        let xm = Matrix::from_row_slice(3, 4, &[
            0.1, -2.0, 1.5, 0.0, 1.3, 0.2, -0.4, 2.1, 0.0, 1.0, 0.5, -0.7,
        ]);
        let w = class_pca(&xp, &xm, 2, true).unwrap();
        let u = class_pca(&xp, &xm, 2, false).unwrap();
        assert!((w.v.matrix() - u.v.matrix()).abs().max() < 1e-10);
    }

    #[test]
    fn ppca_orthogonal_directions() {
        let xm = Matrix::from_row_slice(2, 3, &[-3.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let xp = Matrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, -2.0, 0.0, 2.0]);
        let p = per_class_pca(&xp, &xm).unwrap();
        assert_eq!(p.flag, None);
        assert!((p.v.gram() - Matrix::identity(2, 2)).abs().max() < 1e-12);
        assert!((p.v.matrix()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((p.v.matrix()[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ppca_collinear_falls_back() {
        let xm = Matrix::from_row_slice(3, 4, &[
            -3.0, -1.0, 1.0, 3.0, 0.1, -0.1, 0.1, -0.1, 0.0, 0.2, -0.2, 0.0,
        ]);
        let xp = xm.map(|x| x + 5.0);
        let p = per_class_pca(&xp, &xm).unwrap();
        assert_eq!(p.flag, Some(BaselineFlag::CollinearFallback));
        assert_eq!(p.v.k(), 2);
    }

    #[test]
    fn ppca_degenerate_class_errors() {
        let xm = Matrix::from_element(2, 3, 1.0);
        let xp = Matrix::from_row_slice(2, 3, &[0.0, 1.0, 2.0, 0.0, 1.0, 3.0]);
        assert!(per_class_pca(&xp, &xm).is_err());
    }

    #[test]
    fn mle_entropy_invariant_for_full_rank_orthogonal() {
        let x = Matrix::from_row_slice(2, 4, &[1.0, 2.0, 0.5, -1.0, 0.3, -0.2, 0.9, 1.1]);
        let a = ProjectionMatrix::identity(2);
        let c = libm::cos(0.7);
        let s = libm::sin(0.7);
        let b = ProjectionMatrix::new(Matrix::from_row_slice(2, 2, &[c, -s, s, c])).unwrap();
        let ha = gaussian_mle_entropy(&x, &a).unwrap();
        let hb = gaussian_mle_entropy(&x, &b).unwrap();
        assert!((ha - hb).abs() < 1e-10);
    }
}

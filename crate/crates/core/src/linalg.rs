//! Small dense linear-algebra helpers on top of nalgebra.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::math;

/// Column-major dense matrix. Data matrices store samples as columns.
pub type Matrix = DMatrix<f64>;

/// Relative jitter `ε` in `Σ + ε·tr(Σ)/k·I`.
pub const JITTER_EPS: f64 = 1e-10;

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub(crate) fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Cholesky factor `Σ = LLᵀ` of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    l: Matrix,
    log_det: f64,
    jittered: bool,
}

impl SpdFactor {
    /// Factor `sigma`. Jitter `ε·tr(Σ)/k·I` is added only when the plain
    /// factorization fails or a pivot falls below `ε·tr(Σ)/k`; an error is
    /// returned if the jittered matrix still fails.
    pub fn new(sigma: &Matrix) -> Result<Self> {
        let k = sigma.nrows();
        if k == 0 || sigma.ncols() != k {
            return Err(Error::Dimension(format!(
                "expected a non-empty square matrix, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if !all_finite(sigma) {
            return Err(Error::NonFinite("covariance matrix".into()));
        }
        let sym = symmetrize(sigma);
        let floor = JITTER_EPS * sym.trace() / k as f64;
        if let Some(f) = Self::try_plain(&sym, floor) {
            return Ok(f);
        }
        if !(floor > 0.0) || !floor.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let jittered = &sym + Matrix::identity(k, k) * floor;
        match Self::try_plain(&jittered, 0.0) {
            Some(mut f) => {
                f.jittered = true;
                Ok(f)
            }
            None => Err(Error::NotPositiveDefinite),
        }
    }

    fn try_plain(sym: &Matrix, floor: f64) -> Option<Self> {
        let chol = sym.clone().cholesky()?;
        let l = chol.l();
        let mut log_det = 0.0;
        for i in 0..l.nrows() {
            let d = l[(i, i)];
            if !(d > 0.0) || d * d <= floor {
                return None;
            }
            log_det += 2.0 * math::ln(d);
        }
        if !log_det.is_finite() {
            return None;
        }
        Some(Self {
            l,
            log_det,
            jittered: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Lower-triangular factor `L`.
    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// `log det Σ`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn was_jittered(&self) -> bool {
        self.jittered
    }

    /// `L⁻¹ M` (whitening of the columns of `M`).
    pub fn whiten(&self, m: &Matrix) -> Matrix {
        self.l
            .solve_lower_triangular(m)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `L⁻ᵀ M`.
    pub fn solve_upper(&self, m: &Matrix) -> Matrix {
        self.l
            .transpose()
            .solve_upper_triangular(m)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `Σ⁻¹`.
    pub fn inverse(&self) -> Matrix {
        let k = self.dim();
        self.solve_upper(&self.whiten(&Matrix::identity(k, k)))
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order; column `i` of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Symmetric eigensolver run on `(M + Mᵀ)/2`.
pub fn sorted_symmetric_eigen(m: &Matrix) -> SortedEigen {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps solver order among exact ties
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    SortedEigen { values, vectors }
}

/// Flip each column so its largest-magnitude entry is positive.
pub fn canonical_signs(v: &mut Matrix) {
    for mut col in v.column_iter_mut() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &x in col.iter() {
            if math::abs(x) > best {
                best = math::abs(x);
                sign = if x < 0.0 { -1.0 } else { 1.0 };
            }
        }
        col *= sign;
    }
}

/// Orthonormal basis of the column span of `v` (thin QR with `diag(R) > 0`),
/// so the first `j` output columns span the first `j` input columns.
pub fn orthonormalize_columns(v: &Matrix) -> Matrix {
    let k = v.ncols();
    let qr = v.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Principal angles (radians, ascending) between the column spans of `a`
/// and `b`.
pub fn principal_angles(a: &Matrix, b: &Matrix) -> Vec<f64> {
    let qa = orthonormalize_columns(a);
    let qb = orthonormalize_columns(b);
    let cross = qa.transpose() * qb;
    singular_values(&cross)
        .iter()
        .map(|&c| libm::acos(c.clamp(-1.0, 1.0)))
        .collect()
}

/// Column means of the sample matrix (one entry per row/feature).
pub fn row_means(points: &Matrix) -> DVector<f64> {
    let n = points.ncols() as f64;
    points.column_sum() / n
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &Matrix) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |acc, &x| acc.max(math::abs(x)))
}

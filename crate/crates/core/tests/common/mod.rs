//! Independent reference computations. Nothing here calls into the
//! library's density or objective code.

#![allow(dead_code)]

use melm_core::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Unbiased covariance by explicit double loops.
pub fn naive_cov(x: &Matrix) -> Matrix {
    let (d, n) = x.shape();
    let mut mean = vec![0.0; d];
    for c in 0..n {
        for r in 0..d {
            mean[r] += x[(r, c)] / n as f64;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    for c in 0..n {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += (x[(i, c)] - mean[i]) * (x[(j, c)] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    cov
}

pub fn silverman(n: usize, k: usize, gamma: f64) -> f64 {
    let k = k as f64;
    gamma * (4.0 / (k + 2.0)).powf(1.0 / (k + 4.0)) * (n as f64).powf(-1.0 / (k + 4.0))
}

/// Kernel covariance of the KDE of `VᵀX`, estimated after projecting.
pub fn kernel_cov(x: &Matrix, v: &Matrix, gamma: f64) -> Matrix {
    let y = v.transpose() * x;
    let h = silverman(x.ncols(), v.ncols(), gamma);
    naive_cov(&y) * (h * h)
}

pub fn gaussian_pdf(x: &[f64], mean: &[f64], cov: &Matrix) -> f64 {
    let k = x.len();
    let inv = cov.clone().try_inverse().expect("invertible kernel covariance");
    let det = cov.determinant();
    let mut q = 0.0;
    for i in 0..k {
        for j in 0..k {
            q += (x[i] - mean[i]) * inv[(i, j)] * (x[j] - mean[j]);
        }
    }
    (-0.5 * q).exp() / ((2.0 * std::f64::consts::PI).powf(k as f64 / 2.0) * det.sqrt())
}

/// Gaussian mixture with equal weights and a shared covariance.
pub struct Mixture {
    centers: Matrix,
    inv: Matrix,
    norm: f64,
}

impl Mixture {
    pub fn new(centers: &Matrix, cov: &Matrix) -> Self {
        let k = centers.nrows() as f64;
        let inv = cov.clone().try_inverse().expect("invertible kernel covariance");
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).powf(k / 2.0) * cov.determinant().sqrt());
        Self { centers: centers.clone(), inv, norm }
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        let k = x.len();
        let n = self.centers.ncols();
        let mut total = 0.0;
        for c in 0..n {
            let mut q = 0.0;
            for i in 0..k {
                for j in 0..k {
                    q += (x[i] - self.centers[(i, c)]) * self.inv[(i, j)] * (x[j] - self.centers[(j, c)]);
                }
            }
            total += (-0.5 * q).exp();
        }
        self.norm * total / n as f64
    }
}

/// Mixture density of the projected class at `x`.
pub fn kde_pdf(x: &[f64], centers: &Matrix, cov: &Matrix) -> f64 {
    Mixture::new(centers, cov).pdf(x)
}

/// `log ∫ de{VᵀA} de{VᵀB}` by direct pairwise Gaussian overlaps in linear
/// scale: `∫N(a,S)N(b,T) = N(a − b; 0, S + T)`.
pub fn pairwise_log_ip(a: &Matrix, b: &Matrix, v: &Matrix, gamma: f64) -> f64 {
    let (pa, pb) = (v.transpose() * a, v.transpose() * b);
    let s = kernel_cov(a, v, gamma) + kernel_cov(b, v, gamma);
    let k = v.ncols();
    let zero = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..pa.ncols() {
        for j in 0..pb.ncols() {
            let w: Vec<f64> = (0..k).map(|r| pa[(r, i)] - pb[(r, j)]).collect();
            total += gaussian_pdf(&w, &zero, &s);
        }
    }
    (total / (pa.ncols() * pb.ncols()) as f64).ln()
}

/// Midpoint-rule tensor grid over the box spanned by the projected centres
/// padded by `pad` kernel standard deviations, in 1 or 2 dimensions.
pub fn grid(centers: &Matrix, sd: f64, pad: f64, per_axis: usize) -> (Vec<Vec<f64>>, f64) {
    let k = centers.nrows();
    assert!(k == 1 || k == 2, "quadrature oracle supports k <= 2");
    let mut axes = Vec::new();
    let mut cell = 1.0;
    for r in 0..k {
        let row = centers.row(r);
        let lo = row.min() - pad * sd;
        let hi = row.max() + pad * sd;
        let dx = (hi - lo) / per_axis as f64;
        cell *= dx;
        axes.push((0..per_axis).map(|i| lo + (i as f64 + 0.5) * dx).collect::<Vec<_>>());
    }
    let pts = if k == 1 {
        axes[0].iter().map(|&x| vec![x]).collect()
    } else {
        let mut p = Vec::with_capacity(per_axis * per_axis);
        for &x in &axes[0] {
            for &y in &axes[1] {
                p.push(vec![x, y]);
            }
        }
        p
    };
    (pts, cell)
}

/// `log ∫ de{VᵀA} de{VᵀB}` by grid quadrature of the two KDEs.
pub fn quadrature_log_ip(a: &Matrix, b: &Matrix, v: &Matrix, gamma: f64, per_axis: usize) -> f64 {
    let (pa, pb) = (v.transpose() * a, v.transpose() * b);
    let (sa, sb) = (kernel_cov(a, v, gamma), kernel_cov(b, v, gamma));
    let sd = sa.trace().max(sb.trace()).sqrt();
    let narrow = sa.clone().symmetric_eigen().eigenvalues.min().min(sb.clone().symmetric_eigen().eigenvalues.min()).sqrt();
    let all = Matrix::from_fn(pa.nrows(), pa.ncols() + pb.ncols(), |r, c| {
        if c < pa.ncols() {
            pa[(r, c)]
        } else {
            pb[(r, c - pa.ncols())]
        }
    });
    // resolve the narrowest kernel direction with at least 4 cells per sd
    let width = (0..all.nrows()).map(|r| all.row(r).max() - all.row(r).min()).fold(0.0, f64::max) + 18.0 * sd;
    let per_axis = per_axis.max((4.0 * width / narrow).ceil() as usize).min(if all.nrows() == 1 { 1_000_000 } else { 2_000 });
    let (pts, cell) = grid(&all, sd, 9.0, per_axis);
    let (fa, fb) = (Mixture::new(&pa, &sa), Mixture::new(&pb, &sb));
    let s: f64 = pts.iter().map(|x| fa.pdf(x) * fb.pdf(x)).sum();
    (s * cell).ln()
}

/// Central differences of `f` with per-entry step `1e-5·(1 + |v_ij|)`.
pub fn central_differences(f: impl Fn(&Matrix) -> f64, v: &Matrix) -> Matrix {
    let mut g = Matrix::zeros(v.nrows(), v.ncols());
    for c in 0..v.ncols() {
        for r in 0..v.nrows() {
            let h = 1e-5 * (1.0 + v[(r, c)].abs());
            let mut up = v.clone();
            up[(r, c)] += h;
            let mut down = v.clone();
            down[(r, c)] -= h;
            g[(r, c)] = (f(&up) - f(&down)) / (2.0 * h);
        }
    }
    g
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

pub fn relative_error(a: &Matrix, reference: &Matrix) -> f64 {
    max_abs(&(a - reference)) / max_abs(reference).max(f64::MIN_POSITIVE)
}

/// Orthonormal basis from Gram-Schmidt on a Gaussian matrix.
pub fn gram_schmidt(m: &Matrix) -> Matrix {
    let mut q = m.clone();
    for c in 0..q.ncols() {
        for p in 0..c {
            let dot = q.column(p).dot(&q.column(c));
            let prev = q.column(p).into_owned();
            q.column_mut(c).axpy(-dot, &prev, 1.0);
        }
        let norm = q.column(c).norm();
        q.column_mut(c).scale_mut(1.0 / norm);
    }
    q
}

/// Random well-conditioned square matrix: orthogonal times diag(0.5..2).
pub fn random_invertible(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let q = gram_schmidt(&gaussian(rng, d, d));
    let mut m = q;
    for c in 0..d {
        let s = 0.5 + 1.5 * (c as f64 + 0.5) / d as f64;
        m.column_mut(c).scale_mut(s);
    }
    let q2 = gram_schmidt(&gaussian(rng, d, d));
    m * q2
}

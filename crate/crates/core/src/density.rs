//! Gaussian kernel density machinery.
//!
//! A class `A` projected to `R^k` is estimated by
//! `de{A} = 1/|A| Σ_a N(a, Σ_A)` with `Σ_A = h_A² cov_A` and the Silverman
//! bandwidth `h_A = γ (4/(k+2))^{1/(k+4)} |A|^{-1/(k+4)}`. The product of two
//! such estimates integrates in closed form:
//!
//! ```text
//! ∫ de{A} de{B} = φ_AB Σ_{w ∈ A−B} exp(−½ wᵀ V S V ᵀw)
//! φ_AB = 1 / ((2π)^{k/2} det^{1/2}(VᵀΣ_AB V) |A| |B|),  S = (VᵀΣ_AB V)⁻¹
//! ```
//!
//! with `Σ_AB = h_A² cov_A + h_B² cov_B` held in input space. Everything is
//! evaluated in log space: for well separated classes the pairwise
//! exponentials underflow long before the potential itself is negligible.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SpdFactor};
use crate::math;
use crate::objective::ProjectionMatrix;

/// Bandwidth scaling `γ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthConfig {
    gamma: f64,
}

impl BandwidthConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(Self { gamma })
        } else {
            Err(Error::InvalidArgument(format!(
                "gamma must be positive and finite, got {gamma}"
            )))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

/// Unbiased sample covariance (divisor `n−1`) of the columns of `points`.
pub fn covariance(points: &Matrix) -> Result<Matrix> {
    let n = points.ncols();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mean = linalg::row_means(points);
    let mut centered = points.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = &centered * centered.transpose() / (n as f64 - 1.0);
    Ok(linalg::symmetrize(&cov))
}

/// `h = γ (4/(k+2))^{1/(k+4)} n^{−1/(k+4)}`.
pub fn silverman_bandwidth(n: usize, k: usize, cfg: BandwidthConfig) -> f64 {
    let k = k as f64;
    let e = 1.0 / (k + 4.0);
    cfg.gamma * math::powf(4.0 / (k + 2.0), e) * math::powf(n as f64, -e)
}

/// `Σ_AB = h_A² cov_A + h_B² cov_B` in input space.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledBandwidthCov {
    pub sigma_ab: Matrix,
    pub n_a: usize,
    pub n_b: usize,
    pub k: usize,
}

pub fn pooled_bandwidth_cov(
    a: &Matrix,
    b: &Matrix,
    k: usize,
    cfg: BandwidthConfig,
) -> Result<PooledBandwidthCov> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "class dimensions differ: {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let ha = silverman_bandwidth(a.ncols(), k, cfg);
    let hb = silverman_bandwidth(b.ncols(), k, cfg);
    let sigma = covariance(a)? * (ha * ha) + covariance(b)? * (hb * hb);
    Ok(PooledBandwidthCov {
        sigma_ab: linalg::symmetrize(&sigma),
        n_a: a.ncols(),
        n_b: b.ncols(),
        k,
    })
}

/// `log ∫ de{VᵀA} de{VᵀB}` evaluated with log-sum-exp over all `|A|·|B|`
/// pairwise differences. Symmetric in `A`, `B` bit for bit.
pub fn log_cross_ip(
    a: &Matrix,
    b: &Matrix,
    v: &ProjectionMatrix,
    cfg: BandwidthConfig,
) -> Result<f64> {
    let (a, b) = canonical_pair(a, b);
    let pooled = pooled_bandwidth_cov(a, b, v.k(), cfg)?;
    let same = a == b;
    let other = if same { None } else { Some(b) };
    Ok(log_ip(a, other, &pooled.sigma_ab, v.matrix(), false)?.log_ip)
}

/// `H₂×(de{VᵀA}, de{VᵀB}) = −log ∫ de{VᵀA} de{VᵀB}`.
pub fn renyi_cross_entropy(
    a: &Matrix,
    b: &Matrix,
    v: &ProjectionMatrix,
    cfg: BandwidthConfig,
) -> Result<f64> {
    log_cross_ip(a, b, v, cfg).map(|x| -x)
}

/// Rényi quadratic entropy of `N(m, Σ)` in `R^k`:
/// `(k/2) log(4π) + ½ log det Σ`. Fails unless `Σ` is strictly positive
/// definite.
pub fn renyi_entropy_gaussian(sigma: &Matrix) -> Result<f64> {
    let k = sigma.nrows();
    if k == 0 || sigma.ncols() != k {
        return Err(Error::Dimension(format!(
            "expected square covariance, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let chol = linalg::symmetrize(sigma)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let mut log_det = 0.0;
    for i in 0..k {
        log_det += 2.0 * math::ln(l[(i, i)]);
    }
    if !log_det.is_finite() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(0.5 * k as f64 * math::ln(4.0 * core::f64::consts::PI) + 0.5 * log_det)
}

fn canonical_pair<'m>(a: &'m Matrix, b: &'m Matrix) -> (&'m Matrix, &'m Matrix) {
    let ord = (a.nrows(), a.ncols())
        .cmp(&(b.nrows(), b.ncols()))
        .then_with(|| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
    if ord == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

pub(crate) struct LogIp {
    pub log_ip: f64,
    /// `∇_V log ip×`, `d×k`.
    pub grad: Option<Matrix>,
}

/// Core of every information potential. `b = None` means `B = A`, which
/// lets the pair sum run over `i < j` only.
///
/// Gradient, with `y = L⁻¹Vᵀw` (`LLᵀ = VᵀΣ_AB V`), `ψ_w` the pair weights,
/// `s = Σψ`, `Zy = Σψ yyᵀ` and `D = Σψ w yᵀ`:
///
/// ```text
/// ∇ log ip× = −[ Σ_AB V L⁻ᵀ (I − Zy/s) + D/s ] L⁻¹
/// ```
///
/// which is `∇φ/φ + Σ∇ψ / Σψ` rewritten in whitened coordinates. All
/// weights are taken relative to the largest one, so nothing is formed in
/// linear scale.
pub(crate) fn log_ip(
    a: &Matrix,
    b: Option<&Matrix>,
    sigma_ab: &Matrix,
    v: &Matrix,
    want_grad: bool,
) -> Result<LogIp> {
    let k = v.ncols();
    let sv = sigma_ab * v;
    let sigma_v = v.transpose() * &sv;
    let factor = SpdFactor::new(&sigma_v)?;

    let ya = factor.whiten(&(v.transpose() * a));
    let yb = b.map(|b| factor.whiten(&(v.transpose() * b)));
    let n_a = a.ncols();
    let n_b = b.map_or(n_a, |b| b.ncols());

    let log_phi = -0.5 * k as f64 * math::LN_2PI
        - 0.5 * factor.log_det()
        - math::ln(n_a as f64)
        - math::ln(n_b as f64);

    let acc = match &yb {
        None => accumulate_same(ya.as_slice(), k, want_grad),
        Some(yb) => accumulate_cross(ya.as_slice(), yb.as_slice(), k, want_grad),
    };
    let log_ip = log_phi + acc.q_max + math::ln(acc.sum);
    if !log_ip.is_finite() {
        return Err(Error::NonFinite("log information potential".into()));
    }

    let grad = if want_grad {
        let s = acc.sum;
        // D = A Eᵀ − B Fᵀ
        let e = Matrix::from_vec(k, n_a, acc.row);
        let mut d_part = a * e.transpose();
        if let (Some(b), Some(col)) = (b, acc.col) {
            let f = Matrix::from_vec(k, n_b, col);
            d_part -= b * f.transpose();
        }
        let mut zy = Matrix::from_vec(k, k, acc.zy);
        for r in 0..k {
            for c in 0..r {
                zy[(c, r)] = zy[(r, c)];
            }
        }
        // T = Σ_AB V L⁻ᵀ
        let t = factor.whiten(&sv.transpose()).transpose();
        let inner = Matrix::identity(k, k) - zy / s;
        let g_prime = &t * inner + d_part / s;
        let grad = -factor.solve_upper(&g_prime.transpose()).transpose();
        if !linalg::all_finite(&grad) {
            return Err(Error::NonFinite("information potential gradient".into()));
        }
        Some(grad)
    } else {
        None
    };
    Ok(LogIp { log_ip, grad })
}

struct PairSums {
    q_max: f64,
    sum: f64,
    /// `k×n_a` column-major; for the same-set case holds `E − F`.
    row: Vec<f64>,
    col: Option<Vec<f64>>,
    /// lower triangle of `Σψ yyᵀ`, column-major `k×k`.
    zy: Vec<f64>,
}

#[inline]
fn half_sq_dist(x: &[f64], y: &[f64], diff: &mut [f64]) -> f64 {
    let mut q = 0.0;
    for r in 0..diff.len() {
        let t = x[r] - y[r];
        diff[r] = t;
        q += t * t;
    }
    0.5 * q
}

#[inline]
fn add_outer_lower(zy: &mut [f64], k: usize, w: f64, y: &[f64]) {
    for c in 0..k {
        let wy = w * y[c];
        for r in c..k {
            zy[c * k + r] += wy * y[r];
        }
    }
}

fn accumulate_cross(ya: &[f64], yb: &[f64], k: usize, want_grad: bool) -> PairSums {
    let n_a = ya.len() / k;
    let n_b = yb.len() / k;
    let mut diff = vec![0.0; k];

    let mut min_half = f64::INFINITY;
    for i in 0..n_a {
        let xi = &ya[i * k..(i + 1) * k];
        for j in 0..n_b {
            let h = half_sq_dist(xi, &yb[j * k..(j + 1) * k], &mut diff);
            if h < min_half {
                min_half = h;
            }
        }
    }
    let q_max = -min_half;

    let mut sum = 0.0;
    let mut row = if want_grad { vec![0.0; n_a * k] } else { Vec::new() };
    let mut col = if want_grad { vec![0.0; n_b * k] } else { Vec::new() };
    let mut zy = if want_grad { vec![0.0; k * k] } else { Vec::new() };
    for i in 0..n_a {
        let xi = &ya[i * k..(i + 1) * k];
        for j in 0..n_b {
            let h = half_sq_dist(xi, &yb[j * k..(j + 1) * k], &mut diff);
            let w = math::exp(-h - q_max);
            if w == 0.0 {
                continue;
            }
            sum += w;
            if want_grad {
                for r in 0..k {
                    let wy = w * diff[r];
                    row[i * k + r] += wy;
                    col[j * k + r] += wy;
                }
                add_outer_lower(&mut zy, k, w, &diff);
            }
        }
    }
    PairSums {
        q_max,
        sum,
        row,
        col: want_grad.then_some(col),
        zy,
    }
}

fn accumulate_same(ya: &[f64], k: usize, want_grad: bool) -> PairSums {
    let n = ya.len() / k;
    let mut diff = vec![0.0; k];
    // diagonal pairs have w = 0, which is the largest possible exponent
    let mut sum = n as f64;
    let mut row = if want_grad { vec![0.0; n * k] } else { Vec::new() };
    let mut zy = if want_grad { vec![0.0; k * k] } else { Vec::new() };
    for i in 0..n {
        let xi = &ya[i * k..(i + 1) * k];
        for j in (i + 1)..n {
            let h = half_sq_dist(xi, &ya[j * k..(j + 1) * k], &mut diff);
            let w = math::exp(-h);
            if w == 0.0 {
                continue;
            }
            sum += 2.0 * w;
            if want_grad {
                for r in 0..k {
                    let wy = 2.0 * w * diff[r];
                    row[i * k + r] += wy;
                    row[j * k + r] -= wy;
                }
                add_outer_lower(&mut zy, k, 2.0 * w, &diff);
            }
        }
    }
    PairSums {
        q_max: 0.0,
        sum,
        row,
        col: None,
        zy,
    }
}

/// Gaussian KDE `de{A} = 1/n Σ N(a, Σ)` with a shared kernel covariance.
#[derive(Debug, Clone)]
pub struct KdeModel {
    centers: Matrix,
    covariance: Matrix,
    factor: SpdFactor,
    whitened_centers: Matrix,
    log_norm: f64,
}

impl KdeModel {
    /// Explicit centers (`k×n`) and kernel covariance (`k×k`).
    pub fn new(centers: Matrix, covariance: Matrix) -> Result<Self> {
        let k = centers.nrows();
        if centers.ncols() == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if covariance.nrows() != k || covariance.ncols() != k {
            return Err(Error::Dimension(format!(
                "{}x{} kernel covariance for {k}-dimensional centers",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let covariance = linalg::symmetrize(&covariance);
        let factor = SpdFactor::new(&covariance)?;
        let whitened_centers = factor.whiten(&centers);
        let log_norm = -0.5 * k as f64 * math::LN_2PI
            - 0.5 * factor.log_det()
            - math::ln(centers.ncols() as f64);
        Ok(Self {
            centers,
            covariance,
            factor,
            whitened_centers,
            log_norm,
        })
    }

    /// Silverman KDE of `points` (`k×n`, `n >= 2`): `Σ = h² cov`.
    pub fn fit(points: &Matrix, cfg: BandwidthConfig) -> Result<Self> {
        let h = silverman_bandwidth(points.ncols(), points.nrows(), cfg);
        let cov = covariance(points)? * (h * h);
        Self::new(points.clone(), cov)
    }

    pub fn centers(&self) -> &Matrix {
        &self.centers
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    /// Log of the Gaussian normalizing constant including the `1/n` weight.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn dim(&self) -> usize {
        self.centers.nrows()
    }

    /// `log de(x)` via log-sum-exp.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let k = self.dim();
        assert_eq!(x.len(), k, "query point has wrong dimension");
        let xw = self.factor.whiten(&Matrix::from_column_slice(k, 1, x));
        let xw = xw.as_slice();
        let c = self.whitened_centers.as_slice();
        let n = self.centers.ncols();
        let mut diff = vec![0.0; k];
        let mut best = f64::INFINITY;
        for j in 0..n {
            best = best.min(half_sq_dist(xw, &c[j * k..(j + 1) * k], &mut diff));
        }
        let mut s = 0.0;
        for j in 0..n {
            s += math::exp(best - half_sq_dist(xw, &c[j * k..(j + 1) * k], &mut diff));
        }
        self.log_norm - best + math::ln(s)
    }

    /// `log de` at every column of `points`.
    pub fn log_density_many(&self, points: &Matrix) -> Vec<f64> {
        points
            .column_iter()
            .map(|c| self.log_density(c.as_slice()))
            .collect()
    }
}

/// `log de(x)` for a fitted model.
pub fn kde_log_density_at(model: &KdeModel, x: &[f64]) -> f64 {
    model.log_density(x)
}

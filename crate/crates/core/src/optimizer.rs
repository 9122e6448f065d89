//! First-order maximization of the penalized objective.
//!
//! Each run starts from a random orthonormal `V₀`, ascends
//! `MELM(V) = DCS(V) − ‖VᵀV − I‖²` with limited-memory quasi-Newton
//! directions (two-loop recursion) and an Armijo backtracking line search,
//! and finally re-orthonormalizes the columns of the result. The penalty
//! keeps iterates close to orthonormal, so no per-iteration retraction is
//! performed. Because the objective has many local maxima, [`multistart`]
//! repeats the run from independent starting points and keeps the best.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, LabeledDataset};
use crate::density::BandwidthConfig;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::{self, Matrix};
use crate::math;
use crate::objective::{ObjectiveWorkspace, ProjectionMatrix};

/// Sufficient-increase constant of the line search.
pub const ARMIJO_C1: f64 = 1e-4;
/// Step shrink factor per backtrack.
pub const BACKTRACK_FACTOR: f64 = 0.5;
/// Backtracks before a direction is abandoned.
pub const MAX_BACKTRACKS: usize = 50;
/// Curvature pairs with `sᵀy <= CURVATURE_EPS·‖s‖‖y‖` are rejected.
pub const CURVATURE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub max_iters: usize,
    /// Stop when `‖∇MELM‖_∞` drops below this.
    pub grad_tol: f64,
    /// Stop when an accepted step changes MELM by at most
    /// `step_tol·max(1, |MELM|)`.
    pub step_tol: f64,
    /// Number of curvature pairs kept.
    pub memory: usize,
    pub seed: u64,
    pub penalty_weight: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-6,
            step_tol: 1e-10,
            memory: 10,
            seed: 0,
            penalty_weight: 1.0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) || !(self.step_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.memory < 1 {
            return Err(Error::InvalidArgument("memory must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GradientTolerance,
    ObjectiveTolerance,
    MaxIterations,
    LineSearchFailed,
}

/// Outcome of one ascent run.
#[derive(Debug, Clone)]
pub struct Ascent {
    /// Orthonormalized final iterate.
    pub v: ProjectionMatrix,
    /// Divergence at `v`.
    pub dcs: f64,
    /// Accepted steps.
    pub iterations: usize,
    /// MELM at the start and after every accepted step.
    pub objective_trace: Vec<f64>,
    pub stop: StopReason,
}

/// Final divergences of every restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    /// `NaN` marks a restart that failed.
    pub final_dcs: Vec<f64>,
    pub best_index: usize,
    pub iterations: Vec<usize>,
}

/// Fitted projection with hyperparameters and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MelmModel {
    pub v: ProjectionMatrix,
    pub gamma: f64,
    pub dcs_achieved: f64,
    pub d: usize,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub fingerprint: String,
    pub optim: OptimConfig,
}

impl MelmModel {
    /// `VᵀX`.
    pub fn transform(&self, points: &Matrix) -> Result<Matrix> {
        if points.nrows() != self.d {
            return Err(Error::Dimension(format!(
                "model expects {} features, data has {}",
                self.d,
                points.nrows()
            )));
        }
        Ok(self.v.project(points))
    }
}

/// Orthonormalized standard Gaussian `d×k` matrix (uniform on the Stiefel
/// manifold), deterministic per seed.
pub fn random_orthonormal(d: usize, k: usize, seed: u64) -> Result<ProjectionMatrix> {
    if k == 0 || k > d {
        return Err(Error::BadTargetDim { k, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Matrix::from_fn(d, k, |_, _| StandardNormal.sample(&mut rng));
    ProjectionMatrix::new(linalg::orthonormalize_columns(&g))
}

/// Single ascent run from `v0` on freshly built class data.
pub fn maximize(
    x_plus: &Matrix,
    x_minus: &Matrix,
    k: usize,
    cfg: BandwidthConfig,
    opt: &OptimConfig,
    v0: &ProjectionMatrix,
) -> Result<Ascent> {
    let ws = ObjectiveWorkspace::new(x_plus, x_minus, k, cfg)?.with_penalty_weight(opt.penalty_weight)?;
    maximize_in(&ws, opt, v0)
}

fn flat(m: &Matrix) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn as_matrix(x: &DVector<f64>, d: usize, k: usize) -> Matrix {
    Matrix::from_column_slice(d, k, x.as_slice())
}

fn max_norm(x: &DVector<f64>) -> f64 {
    x.iter().fold(0.0f64, |a, &b| a.max(math::abs(b)))
}

/// Ascent direction `H·g` from the two-loop recursion over `(s, y, 1/sᵀy)`
/// pairs, with `y = g_old − g_new` (positive curvature for a concave model).
fn two_loop(g: &DVector<f64>, hist: &VecDeque<(DVector<f64>, DVector<f64>, f64)>) -> DVector<f64> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    q
}

/// Single ascent run on a prepared workspace.
pub fn maximize_in(ws: &ObjectiveWorkspace, opt: &OptimConfig, v0: &ProjectionMatrix) -> Result<Ascent> {
    opt.validate()?;
    let (d, k) = (ws.dim(), ws.k());
    if v0.d() != d || v0.k() != k {
        return Err(Error::Dimension(format!(
            "initial projection is {}x{}, expected {d}x{k}",
            v0.d(),
            v0.k()
        )));
    }
    let eval = |x: &DVector<f64>| -> Option<(f64, DVector<f64>)> {
        let (val, g) = ws.value_and_gradient(&as_matrix(x, d, k)).ok()?;
        (val.melm.is_finite() && linalg::all_finite(&g)).then(|| (val.melm, flat(&g)))
    };

    let mut x = flat(v0.matrix());
    let (mut f, mut g) = match ws.value_and_gradient(v0.matrix()) {
        Ok((val, g)) if val.melm.is_finite() && linalg::all_finite(&g) => (val.melm, flat(&g)),
        Ok(_) => return Err(Error::NonFinite("objective at the initial projection".into())),
        Err(e) => return Err(e),
    };
    let mut trace = alloc::vec![f];
    let mut hist: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::with_capacity(opt.memory);
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    while iterations < opt.max_iters {
        if max_norm(&g) < opt.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }
        let mut dir = two_loop(&g, &hist);
        let mut slope = g.dot(&dir);
        if !(slope > 0.0) || !slope.is_finite() {
            hist.clear();
            dir = g.clone();
            slope = g.dot(&g);
        }
        let mut step = if hist.is_empty() {
            (1.0 / g.norm()).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &x + &dir * step;
            if let Some((ft, gt)) = eval(&trial) {
                if ft >= f + ARMIJO_C1 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= BACKTRACK_FACTOR;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if hist.is_empty() {
                stop = StopReason::LineSearchFailed;
                break;
            }
            hist.clear();
            continue;
        };

        let s = &x_new - &x;
        let y = &g - &g_new;
        let sy = s.dot(&y);
        if sy > CURVATURE_EPS * s.norm() * y.norm() {
            if hist.len() == opt.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let change = f_new - f;
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
        trace.push(f);
        if math::abs(change) <= opt.step_tol * f.abs().max(1.0) {
            stop = StopReason::ObjectiveTolerance;
            break;
        }
    }

    let v = ProjectionMatrix::new(as_matrix(&x, d, k))?.orthonormalized();
    let dcs = ws.value(v.matrix())?.dcs;
    Ok(Ascent {
        v,
        dcs,
        iterations,
        objective_trace: trace,
        stop,
    })
}

/// Independent restarts; restart `i` starts from
/// `random_orthonormal(d, k, seed + i)`. The best final divergence wins,
/// ties going to the lowest restart index.
pub fn multistart<E: Executor>(
    x_plus: &Matrix,
    x_minus: &Matrix,
    k: usize,
    cfg: BandwidthConfig,
    opt: &OptimConfig,
    restarts: usize,
    exec: &E,
) -> Result<(MelmModel, RestartTrace)> {
    if restarts < 1 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    opt.validate()?;
    let ws = ObjectiveWorkspace::new(x_plus, x_minus, k, cfg)?.with_penalty_weight(opt.penalty_weight)?;
    let d = ws.dim();
    let runs = exec.map_indexed(restarts, |i| {
        let v0 = random_orthonormal(d, k, opt.seed.wrapping_add(i as u64))?;
        maximize_in(&ws, opt, &v0)
    });

    let mut final_dcs = Vec::with_capacity(restarts);
    let mut iterations = Vec::with_capacity(restarts);
    let mut best: Option<(usize, &Ascent)> = None;
    let mut last_err = None;
    for (i, run) in runs.iter().enumerate() {
        match run {
            Ok(a) if a.dcs.is_finite() => {
                final_dcs.push(a.dcs);
                iterations.push(a.iterations);
                if best.is_none_or(|(_, b)| a.dcs > b.dcs) {
                    best = Some((i, a));
                }
            }
            Ok(_) => {
                final_dcs.push(f64::NAN);
                iterations.push(0);
            }
            Err(e) => {
                final_dcs.push(f64::NAN);
                iterations.push(0);
                last_err = Some(e.clone());
            }
        }
    }
    let Some((best_index, best)) = best else {
        return Err(last_err.unwrap_or(Error::AllRestartsFailed(restarts)));
    };
    let model = MelmModel {
        v: best.v.clone(),
        gamma: cfg.gamma(),
        dcs_achieved: best.dcs,
        d,
        k,
        restarts,
        seed: opt.seed,
        fingerprint: dataset::fingerprint(x_minus, x_plus),
        optim: *opt,
    };
    let trace = RestartTrace {
        final_dcs,
        best_index,
        iterations,
    };
    Ok((model, trace))
}

/// [`multistart`] on a labeled dataset.
pub fn fit<E: Executor>(
    ds: &LabeledDataset,
    k: usize,
    cfg: BandwidthConfig,
    opt: &OptimConfig,
    restarts: usize,
    exec: &E,
) -> Result<(MelmModel, RestartTrace)> {
    let (xm, xp) = dataset::class_partition(ds);
    multistart(&xp, &xm, k, cfg, opt, restarts, exec)
}

/// `E[max of s draws without replacement]` from `values`, for
/// `s = 1..=s_max`, exactly via order statistics: with ascending
/// `v₍₁₎ ≤ … ≤ v₍ₙ₎`, `E_s = Σᵢ v₍ᵢ₎ C(i−1, s−1) / C(n, s)`.
pub fn expected_max_curve(values: &[f64], s_max: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if s_max < 1 || s_max > n {
        return Err(Error::InvalidArgument(format!(
            "s_max must satisfy 1 <= s_max <= n = {n}, got {s_max}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("restart values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut curve = Vec::with_capacity(s_max);
    for s in 1..=s_max {
        // P(max is the i-th smallest) = C(i−1, s−1)/C(n, s), built downward
        // from P(i = n) = s/n via ratio (i−s)/(i−1).
        let mut w = s as f64 / n as f64;
        let mut e = 0.0;
        let mut i = n;
        while i >= s {
            e += w * sorted[i - 1];
            if i == s {
                break;
            }
            w *= (i - s) as f64 / (i - 1) as f64;
            i -= 1;
        }
        curve.push(e);
    }
    Ok(curve)
}

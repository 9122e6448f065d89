mod common;

use common::*;
use melm_core::objective::{self, ProjectionMatrix};
use melm_core::{BandwidthConfig, Matrix, ObjectiveWorkspace};

struct Instance {
    xp: Matrix,
    xm: Matrix,
    v: Matrix,
    gamma: f64,
}

fn instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let d = 1 + (seed as usize * 7) % 10;
    let k = 1 + (seed as usize) % d.min(3);
    // k + 2 ..= 30 points per class keeps every projected kernel full rank
    let np = k + 2 + (seed as usize * 5) % (29 - k);
    let nm = k + 2 + (seed as usize * 11) % (29 - k);
    let xp = gaussian(&mut r, d, np);
    let xm = gaussian(&mut r, d, nm).add_scalar(0.6);
    // deliberately off the Stiefel manifold so the penalty term is active
    let v = gaussian(&mut r, d, k) * 0.8;
    let gamma = [0.5, 1.0, 2.0][seed as usize % 3];
    Instance { xp, xm, v, gamma }
}

#[test]
fn melm_gradient_matches_central_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let inst = instance(seed);
        let cfg = BandwidthConfig::new(inst.gamma).unwrap();
        let ws = ObjectiveWorkspace::new(&inst.xp, &inst.xm, inst.v.ncols(), cfg).unwrap();
        let (_, g) = ws.value_and_gradient(&inst.v).unwrap();
        let fd = central_differences(|w| ws.value(w).unwrap().melm, &inst.v);
        let err = relative_error(&g, &fd);
        worst = worst.max(err);
        assert!(err <= 1e-5, "seed {seed}: relative error {err:e}");
        let own = objective::gradient_check(&ws, &inst.v).unwrap();
        assert!((own - err).abs() < 1e-6);
    }
    assert!(worst.is_finite());
}

#[test]
fn penalty_gradient_matches_central_differences() {
    let mut r = rng(7);
    for _ in 0..10 {
        let v = gaussian(&mut r, 5, 3);
        let fd = central_differences(objective::penalty, &v);
        assert!(relative_error(&objective::penalty_gradient(&v), &fd) < 1e-7);
    }
    let v = Matrix::from_column_slice(2, 1, &[2.0, 0.0]);
    assert_eq!(objective::penalty(&v), 9.0);
    assert_eq!(objective::penalty_gradient(&v), Matrix::from_column_slice(2, 1, &[24.0, 0.0]));
}

#[test]
fn shear_invariance_and_tangency() {
    let mut r = rng(21);
    for seed in 0..50 {
        let inst = instance(100 + seed);
        let k = inst.v.ncols();
        let cfg = BandwidthConfig::new(inst.gamma).unwrap();
        let pv = ProjectionMatrix::new(inst.v.clone()).unwrap();
        let base = objective::dcs(&pv, &inst.xp, &inst.xm, cfg).unwrap();
        let rmat = random_invertible(&mut r, k);
        let sheared = ProjectionMatrix::new(&inst.v * rmat).unwrap();
        let moved = objective::dcs(&sheared, &inst.xp, &inst.xm, cfg).unwrap();
        assert!((base - moved).abs() <= 1e-10 * (1.0 + base.abs()), "seed {seed}: {base} vs {moved}");
        let g = objective::dcs_gradient(&pv, &inst.xp, &inst.xm, cfg).unwrap();
        let t = inst.v.transpose() * g;
        assert!(max_abs(&t) <= 1e-8, "seed {seed}: tangency {:e}", max_abs(&t));
        assert!(base >= -1e-12);
    }
}

#[test]
fn affine_invariance_pointwise() {
    let mut r = rng(31);
    for seed in 0..50 {
        let inst = instance(200 + seed);
        let d = inst.xp.nrows();
        let cfg = BandwidthConfig::new(inst.gamma).unwrap();
        let m = random_invertible(&mut r, d);
        let t = gaussian(&mut r, d, 1) * 3.0;
        let shift = |x: &Matrix| {
            let mut y = &m * x;
            for mut c in y.column_iter_mut() {
                c += &t;
            }
            y
        };
        let mv = ProjectionMatrix::new(m.transpose() * &inst.v).unwrap();
        let pv = ProjectionMatrix::new(inst.v.clone()).unwrap();
        let lhs = objective::dcs(&mv, &inst.xp, &inst.xm, cfg).unwrap();
        let rhs = objective::dcs(&pv, &shift(&inst.xp), &shift(&inst.xm), cfg).unwrap();
        assert!((lhs - rhs).abs() / (1.0 + lhs.abs()) <= 1e-8, "seed {seed}: {lhs} vs {rhs}");
    }
}

#[test]
fn identical_classes_have_flat_divergence() {
    let mut r = rng(4);
    let x = gaussian(&mut r, 4, 12);
    let v = gram_schmidt(&gaussian(&mut r, 4, 2));
    let pv = ProjectionMatrix::new(v.clone()).unwrap();
    let cfg = BandwidthConfig::default();
    let val = objective::melm_value(&pv, &x, &x, cfg).unwrap();
    assert_eq!(val.dcs, 0.0);
    assert!(val.melm.abs() < 1e-12);
    let g = objective::dcs_gradient(&pv, &x, &x, cfg).unwrap();
    assert!(max_abs(&g) < 1e-12);
    let (fit, reg) = objective::decompose(&pv, &x, &x, cfg).unwrap();
    assert!((fit - reg).abs() < 1e-12);
}

#[test]
fn value_breakdown_is_consistent() {
    for seed in 0..10 {
        let inst = instance(300 + seed);
        let cfg = BandwidthConfig::new(inst.gamma).unwrap();
        let pv = ProjectionMatrix::new(inst.v.clone()).unwrap();
        let val = objective::melm_value(&pv, &inst.xp, &inst.xm, cfg).unwrap();
        assert_eq!(val.melm, val.dcs - val.penalty);
        assert!(val.melm <= val.dcs);
        let (fit, reg) = val.decomposition();
        assert!((fit - reg - val.dcs).abs() <= 1e-12 * (1.0 + fit.abs()));
    }
}

#[test]
fn finite_under_extreme_scales_and_separation() {
    let mut r = rng(8);
    let xp = gaussian(&mut r, 3, 15);
    let xm = gaussian(&mut r, 3, 12).add_scalar(0.5);
    let v = gaussian(&mut r, 3, 2);
    let cfg = BandwidthConfig::default();
    let pv = ProjectionMatrix::new(v.clone()).unwrap();
    let base = objective::dcs(&pv, &xp, &xm, cfg).unwrap();
    for s in [1e6, 1e-6] {
        let ws = ObjectiveWorkspace::new(&(&xp * s), &(&xm * s), 2, cfg).unwrap();
        let (val, g) = ws.value_and_gradient(&v).unwrap();
        assert!(val.dcs.is_finite() && g.iter().all(|x| x.is_finite()));
        assert!((val.dcs - base).abs() < 1e-8 * (1.0 + base));
        // V rescaled to compensate gives the identical divergence
        let comp = ProjectionMatrix::new(&v / s).unwrap();
        let c = objective::dcs(&comp, &(&xp * s), &(&xm * s), cfg).unwrap();
        assert!((c - base).abs() < 1e-8 * (1.0 + base));
    }
    // classes 50 kernel widths apart: every cross overlap underflows in
    // linear scale
    let far = xm.add_scalar(200.0);
    let ws = ObjectiveWorkspace::new(&xp, &far, 2, cfg).unwrap();
    let (val, g) = ws.value_and_gradient(&v).unwrap();
    assert!(val.dcs.is_finite() && val.dcs > 100.0);
    assert!(g.iter().all(|x| x.is_finite()));
}


mod common;

use common::*;
use melm_core::dataset::{self, Label};
use melm_core::eval::{
    self, fit_fold_projection, pipeline_benchmark, visual_separability, EvalConfig, FittedProjection, Method,
    Projector,
};
use melm_core::synthetic::{self, PlantedConfig};
use melm_core::{BandwidthConfig, Error, Executor, LabeledDataset, Matrix, ProjectionMatrix, Result, Sequential};

fn small_planted(seed: u64) -> LabeledDataset {
    let cfg = PlantedConfig { n_minus: 120, n_plus: 120, d: 6, ..Default::default() };
    synthetic::planted_subspace(&cfg, seed).unwrap()
}

fn quick_config() -> EvalConfig {
    let mut cfg = EvalConfig::default();
    cfg.melm.restarts = 4;
    cfg.repetitions = 1;
    cfg
}

#[test]
fn identity_pipeline_on_fourclass() {
    let ds = synthetic::fourclass_like(0);
    let report = pipeline_benchmark(&ds, &[Method::Identity], &EvalConfig::default(), &Sequential).unwrap();
    let s = report.summary("identity").unwrap();
    assert!(s.mean_bac >= 0.97, "identity BAC {}", s.mean_bac);
    assert_eq!(report.scores.len(), 5 * 2);
    for c in &s.classifier_means {
        let folds: Vec<f64> = report
            .scores
            .iter()
            .filter(|x| x.classifier == c.classifier)
            .map(|x| x.score)
            .collect();
        assert!((c.mean - folds.iter().sum::<f64>() / folds.len() as f64).abs() <= 1e-12);
        assert!(folds.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

#[test]
fn pipeline_is_deterministic() {
    let ds = small_planted(4);
    let cfg = quick_config();
    let methods = [Method::Melm, Method::Pca, Method::PerClassPca];
    let a = pipeline_benchmark(&ds, &methods, &cfg, &Sequential).unwrap();
    let b = pipeline_benchmark(&ds, &methods, &cfg, &Sequential).unwrap();
    assert_eq!(a, b);
}

struct Collapsed;

impl Projector for Collapsed {
    fn name(&self) -> String {
        "collapsed".into()
    }

    fn fit<E: Executor>(&self, train: &LabeledDataset, _: &EvalConfig, _: u64, _: &E) -> Result<FittedProjection> {
        let v = Matrix::from_element(train.dim(), 2, 1.0);
        Ok(FittedProjection { v: ProjectionMatrix::new(v)?, flag: None })
    }
}

#[test]
fn rank_deficient_projection_is_reported_per_fold() {
    let ds = small_planted(5);
    let err = pipeline_benchmark(&ds, &[Collapsed], &quick_config(), &Sequential).unwrap_err();
    match err {
        Error::MethodFailed { method, fold, source } => {
            assert_eq!(method, "collapsed");
            assert_eq!(fold, 0);
            assert!(matches!(*source, Error::RankDeficient { .. }), "{source:?}");
        }
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn projection_never_sees_the_test_fold() {
    let ds = small_planted(6);
    let cfg = EvalConfig { standardize: true, ..quick_config() };
    let plan = dataset::split_kfold(&ds, cfg.folds, cfg.seed).unwrap();
    for method in [Method::Melm, Method::Pca, Method::ClassPca] {
        for fold in [0, 3] {
            let clean = fit_fold_projection(&ds, &plan, fold, &method, &cfg, &Sequential).unwrap();
            let mut poisoned = ds.points().clone();
            let mut labels = ds.labels().to_vec();
            for i in plan.test_indices(fold) {
                poisoned.column_mut(i).fill(1e3 * (i as f64 + 1.0));
                labels[i] = labels[i].flip();
            }
            let poisoned = LabeledDataset::new(poisoned, labels, None).unwrap();
            let dirty = fit_fold_projection(&poisoned, &plan, fold, &method, &cfg, &Sequential).unwrap();
            assert_eq!(clean.projection.v.matrix(), dirty.projection.v.matrix(), "{method:?} fold {fold}");
            assert_eq!(clean.train, dirty.train);
        }
    }
}

#[test]
fn knn_separates_two_blobs() {
    let mut r = rng(2);
    let mut x = gaussian(&mut r, 2, 200) * 0.5;
    let labels: Vec<Label> = (0..200).map(|i| if i % 2 == 0 { Label::Plus } else { Label::Minus }).collect();
    for (i, l) in labels.iter().enumerate() {
        x[(0, i)] += if *l == Label::Plus { 4.0 } else { -4.0 };
    }
    let ds = LabeledDataset::new(x, labels, None).unwrap();
    let plan = dataset::split_kfold(&ds, 5, 0).unwrap();
    let train = ds.subset(&plan.train_indices(0)).unwrap();
    let test = ds.subset(&plan.test_indices(0)).unwrap();
    let pred = eval::knn_predict(&train, test.points(), 3).unwrap();
    assert!(eval::bac(test.labels(), &pred).unwrap() >= 0.99);
}

#[test]
fn kde_decisions_follow_oracle_densities() {
    let mut r = rng(17);
    let xp = gaussian(&mut r, 2, 7).add_scalar(0.8);
    let xm = gaussian(&mut r, 2, 9);
    let mut pts = xm.clone().resize_horizontally(16, 0.0);
    pts.columns_mut(9, 7).copy_from(&xp);
    let labels: Vec<Label> = (0..16).map(|i| if i < 9 { Label::Minus } else { Label::Plus }).collect();
    let ds = LabeledDataset::new(pts, labels, None).unwrap();
    let queries = gaussian(&mut r, 2, 200) * 2.0;
    let pred = eval::kde_predict(&ds, &queries, BandwidthConfig::default()).unwrap();
    let eye = Matrix::identity(2, 2);
    let (fp, fm) = (Mixture::new(&xp, &kernel_cov(&xp, &eye, 1.0)), Mixture::new(&xm, &kernel_cov(&xm, &eye, 1.0)));
    for (q, p) in queries.column_iter().zip(&pred) {
        let x = [q[0], q[1]];
        let want = if fp.pdf(&x) > fm.pdf(&x) { Label::Plus } else { Label::Minus };
        assert_eq!(*p, want);
    }
    // a query midway between mirror-image classes is a tie, resolved to −1
    let sym = LabeledDataset::new(
        Matrix::from_row_slice(1, 4, &[-3.0, -2.0, 2.0, 3.0]),
        vec![Label::Minus, Label::Minus, Label::Plus, Label::Plus],
        None,
    )
    .unwrap();
    let mid = eval::kde_predict(&sym, &Matrix::zeros(1, 1), BandwidthConfig::default()).unwrap();
    assert_eq!(mid, vec![Label::Minus]);
}

#[test]
fn separability_prefers_melm_on_planted_data() {
    let ds = small_planted(8);
    let cfg = EvalConfig { repetitions: 1, ..EvalConfig::default() };
    let report = visual_separability(&ds, &[Method::Melm, Method::Pca], &cfg, &Sequential).unwrap();
    let melm = report.summary("melm").unwrap().mean_bac;
    let pca = report.summary("pca").unwrap().mean_bac;
    assert!(melm >= 0.95, "melm {melm}");
    assert!(pca <= 0.75, "pca {pca}");
}

#[test]
fn separability_on_fourclass_is_method_agnostic() {
    let ds = synthetic::fourclass_like(0);
    let cfg = EvalConfig { repetitions: 1, ..EvalConfig::default() };
    let report = visual_separability(&ds, &[Method::Melm, Method::Pca], &cfg, &Sequential).unwrap();
    let melm = report.summary("melm").unwrap().mean_bac;
    let pca = report.summary("pca").unwrap().mean_bac;
    assert!(melm >= pca - 0.01, "melm {melm} pca {pca}");
}

#[test]
fn melm_beats_pca_across_generator_seeds() {
    let cfg = quick_config();
    let mut wins = 0;
    for seed in 0..20 {
        let sub = PlantedConfig { n_minus: 80, n_plus: 80, d: 6, ..Default::default() };
        let ds = synthetic::planted_subspace(&sub, 100 + seed).unwrap();
        let report = visual_separability(&ds, &[Method::Melm, Method::Pca], &cfg, &Sequential).unwrap();
        if report.summary("melm").unwrap().mean_bac >= report.summary("pca").unwrap().mean_bac {
            wins += 1;
        }
    }
    assert!(wins >= 19, "MELM won {wins}/20");
}

#[test]
fn separability_is_stable_across_split_seeds() {
    let cfg = PlantedConfig { n_minus: 260, n_plus: 260, d: 4, ..Default::default() };
    let ds = synthetic::planted_subspace(&cfg, 9).unwrap();
    let scores: Vec<f64> = (0..5)
        .map(|seed| {
            let ecfg = EvalConfig { seed, ..quick_config() };
            visual_separability(&ds, &[Method::Pca], &ecfg, &Sequential).unwrap().summaries[0].mean_bac
        })
        .collect();
    let mean = scores.iter().sum::<f64>() / 5.0;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 4.0;
    assert!(var <= 0.02, "variance {var}");
}

#[test]
fn subsets_are_stratified_and_repeatable() {
    let ds = small_planted(1);
    let a = eval::stratified_subset(&ds, 0.5, 5, 3).unwrap();
    assert_eq!(a.class_counts(), (60, 60));
    assert_eq!(a, eval::stratified_subset(&ds, 0.5, 5, 3).unwrap());
    let cfg = EvalConfig { subset_fraction: 0.5, repetitions: 2, ..quick_config() };
    let report = visual_separability(&ds, &[Method::Pca], &cfg, &Sequential).unwrap();
    assert_eq!(report.scores.len(), 2 * 5 * 2);
    assert_eq!(report.protocol, eval::Protocol::Separability);
}

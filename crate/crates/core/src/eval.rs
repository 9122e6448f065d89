//! Balanced accuracy, classifiers on projected data, and the two benchmark
//! protocols.
//!
//! * **pipeline**: per outer fold, the projection is fit on the training
//!   split only, classifiers are tuned by inner cross-validation on the
//!   projected training split, and scored on the projected test split. A
//!   method's score is the mean BAC of its best classifier.
//! * **separability**: the projection is fit once on all (subset) data and
//!   cross-validation is applied to the classifiers only. A method's score
//!   is the mean BAC over the classifiers.
//!
//! Ties are broken toward `−1` everywhere (votes, density comparisons) and
//! toward the first candidate in every hyperparameter grid.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, BaselineFlag};
use crate::dataset::{self, AffineMap, FoldPlan, Label, LabeledDataset};
use crate::density::{BandwidthConfig, KdeModel};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::Matrix;
use crate::objective::ProjectionMatrix;
use crate::optimizer::{self, OptimConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// `½ (TP/(TP+FN) + TN/(TN+FP))`, with `+1` as the positive class.
pub fn bac(y_true: &[Label], y_pred: &[Label]) -> Result<f64> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::Dimension(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (Label::Plus, Label::Plus) => tp += 1,
            (Label::Plus, Label::Minus) => fn_ += 1,
            (Label::Minus, Label::Minus) => tn += 1,
            (Label::Minus, Label::Plus) => fp += 1,
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(Error::SingleClass);
    }
    Ok(0.5 * (tp as f64 / (tp + fn_) as f64 + tn as f64 / (tn + fp) as f64))
}

fn check_dims(train: &LabeledDataset, test: &Matrix) -> Result<()> {
    if train.dim() != test.nrows() {
        return Err(Error::Dimension(format!(
            "train has {} features, test has {}",
            train.dim(),
            test.nrows()
        )));
    }
    Ok(())
}

/// Exact Euclidean k-nearest-neighbour majority vote. Equidistant
/// neighbours are ordered by training index; tied votes go to `−1`.
pub fn knn_predict(train: &LabeledDataset, test: &Matrix, neighbors: usize) -> Result<Vec<Label>> {
    check_dims(train, test)?;
    if neighbors < 1 || neighbors > train.len() {
        return Err(Error::InvalidArgument(format!(
            "neighbors must be in 1..={}, got {neighbors}",
            train.len()
        )));
    }
    let pts = train.points();
    let labels = train.labels();
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.len());
    let mut out = Vec::with_capacity(test.ncols());
    for q in test.column_iter() {
        dist.clear();
        for (j, p) in pts.column_iter().enumerate() {
            let d2: f64 = p.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            dist.push((d2, j));
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if neighbors < dist.len() {
            dist.select_nth_unstable_by(neighbors - 1, cmp);
        }
        let plus = dist[..neighbors]
            .iter()
            .filter(|&&(_, j)| labels[j] == Label::Plus)
            .count();
        out.push(if 2 * plus > neighbors { Label::Plus } else { Label::Minus });
    }
    Ok(out)
}

/// Per-class Silverman KDEs on the training points; predicts the class
/// with the higher log density (class priors ignored, ties to `−1`).
pub fn kde_predict(train: &LabeledDataset, test: &Matrix, cfg: BandwidthConfig) -> Result<Vec<Label>> {
    check_dims(train, test)?;
    let (xm, xp) = dataset::class_partition(train);
    let fm = KdeModel::fit(&xm, cfg)?;
    let fp = KdeModel::fit(&xp, cfg)?;
    Ok(test
        .column_iter()
        .map(|q| {
            let x = q.as_slice();
            if fp.log_density(x) > fm.log_density(x) {
                Label::Plus
            } else {
                Label::Minus
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Knn,
    Kde,
}

impl Classifier {
    pub const ALL: [Classifier; 2] = [Classifier::Knn, Classifier::Kde];

    pub fn name(self) -> &'static str {
        match self {
            Classifier::Knn => "knn",
            Classifier::Kde => "kde",
        }
    }
}

/// Hyperparameter chosen for a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierParam {
    Neighbors(usize),
    Gamma(f64),
}

fn predict_with(param: ClassifierParam, train: &LabeledDataset, test: &Matrix) -> Result<Vec<Label>> {
    match param {
        ClassifierParam::Neighbors(n) => knn_predict(train, test, n),
        ClassifierParam::Gamma(g) => kde_predict(train, test, BandwidthConfig::new(g)?),
    }
}

/// How MELM picks `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaChoice {
    Fixed(f64),
    /// Best inner-CV separability over [`EvalConfig::gamma_grid`].
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelmSettings {
    pub restarts: usize,
    pub gamma: GammaChoice,
    pub optim: OptimConfig,
}

impl Default for MelmSettings {
    fn default() -> Self {
        Self {
            restarts: 16,
            gamma: GammaChoice::Fixed(1.0),
            optim: OptimConfig::default(),
        }
    }
}

/// Benchmark configuration; echoed verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub folds: usize,
    pub seed: u64,
    pub inner_folds: usize,
    pub neighbors_grid: Vec<usize>,
    pub gamma_grid: Vec<f64>,
    /// Z-score features with training statistics before fitting.
    pub standardize: bool,
    pub melm: MelmSettings,
    /// Separability protocol: stratified fraction of samples per repetition.
    pub subset_fraction: f64,
    /// Separability protocol: number of repetitions.
    pub repetitions: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 2,
            folds: 5,
            seed: 0,
            inner_folds: 3,
            neighbors_grid: vec![1, 3, 5, 9],
            gamma_grid: vec![0.25, 0.5, 1.0, 1.5, 2.0],
            standardize: false,
            melm: MelmSettings::default(),
            subset_fraction: 1.0,
            repetitions: 5,
        }
    }
}

impl EvalConfig {
    fn validate(&self) -> Result<()> {
        if self.neighbors_grid.is_empty() || self.gamma_grid.is_empty() {
            return Err(Error::InvalidArgument("hyperparameter grids must be non-empty".into()));
        }
        if !(self.subset_fraction > 0.0 && self.subset_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "subset fraction must be in (0, 1], got {}",
                self.subset_fraction
            )));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        for &g in &self.gamma_grid {
            BandwidthConfig::new(g)?;
        }
        Ok(())
    }
}

/// SplitMix64 finalizer; decorrelates derived seeds.
pub fn mix_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_INNER: u64 = 1;
const STREAM_MELM: u64 = 2;
const STREAM_REP: u64 = 3;
const STREAM_SUBSET: u64 = 4;

/// Pick a classifier hyperparameter by inner stratified CV on `train`.
/// Falls back to the first grid entry (k-NN) or `γ = 1` (KDE) when the
/// training split is too small to cross-validate.
pub fn tune_classifier(
    classifier: Classifier,
    train: &LabeledDataset,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<ClassifierParam> {
    let candidates: Vec<ClassifierParam> = match classifier {
        Classifier::Knn => cfg.neighbors_grid.iter().map(|&n| ClassifierParam::Neighbors(n)).collect(),
        Classifier::Kde => cfg.gamma_grid.iter().map(|&g| ClassifierParam::Gamma(g)).collect(),
    };
    let fallback = match classifier {
        Classifier::Knn => ClassifierParam::Neighbors(cfg.neighbors_grid[0].min(train.len())),
        Classifier::Kde => ClassifierParam::Gamma(1.0),
    };
    let (nm, np) = train.class_counts();
    if nm.min(np) < cfg.inner_folds.max(2) + 2 {
        return Ok(fallback);
    }
    let Ok(plan) = dataset::split_kfold(train, cfg.inner_folds, seed) else {
        return Ok(fallback);
    };
    let splits: Vec<(LabeledDataset, LabeledDataset)> = (0..plan.fold_count())
        .map(|f| Ok((train.subset(&plan.train_indices(f))?, train.subset(&plan.test_indices(f))?)))
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, ClassifierParam)> = None;
    for cand in candidates {
        if let ClassifierParam::Neighbors(n) = cand {
            if splits.iter().any(|(tr, _)| n > tr.len()) {
                continue;
            }
        }
        let mut total = 0.0;
        for (tr, te) in &splits {
            let pred = predict_with(cand, tr, te.points())?;
            total += bac(te.labels(), &pred)?;
        }
        let mean = total / splits.len() as f64;
        if best.is_none_or(|(b, _)| mean > b) {
            best = Some((mean, cand));
        }
    }
    Ok(best.map_or(fallback, |(_, p)| p))
}

/// A projection fitted on training data, plus any baseline flag.
#[derive(Debug, Clone)]
pub struct FittedProjection {
    pub v: ProjectionMatrix,
    pub flag: Option<BaselineFlag>,
}

/// Anything that maps a labeled training set to a `d×k` projection.
pub trait Projector: Sync {
    fn name(&self) -> String;

    fn fit<E: Executor>(
        &self,
        train: &LabeledDataset,
        cfg: &EvalConfig,
        seed: u64,
        exec: &E,
    ) -> Result<FittedProjection>;
}

/// Built-in reduction methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Melm,
    Pca,
    /// Class covariances weighted by class size.
    ClassPca,
    /// Unweighted sum of class covariances.
    TwoEllipsoidPca,
    /// First principal component of each class (`k = 2`).
    PerClassPca,
    /// No reduction: classifiers run on the input features.
    Identity,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Melm,
        Method::Pca,
        Method::ClassPca,
        Method::TwoEllipsoidPca,
        Method::PerClassPca,
        Method::Identity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Melm => "melm",
            Method::Pca => "pca",
            Method::ClassPca => "cpca",
            Method::TwoEllipsoidPca => "2epca",
            Method::PerClassPca => "ppca",
            Method::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

impl Projector for Method {
    fn name(&self) -> String {
        self.as_str().to_string()
    }

    fn fit<E: Executor>(
        &self,
        train: &LabeledDataset,
        cfg: &EvalConfig,
        seed: u64,
        exec: &E,
    ) -> Result<FittedProjection> {
        let (xm, xp) = dataset::class_partition(train);
        let plain = |b: baselines::BaselineProjection| FittedProjection { v: b.v, flag: b.flag };
        match self {
            Method::Melm => {
                let gamma = match cfg.melm.gamma {
                    GammaChoice::Fixed(g) => g,
                    GammaChoice::Grid => select_gamma(train, cfg, seed, exec)?,
                };
                let opt = OptimConfig { seed, ..cfg.melm.optim };
                let (model, _) = optimizer::multistart(
                    &xp,
                    &xm,
                    cfg.k,
                    BandwidthConfig::new(gamma)?,
                    &opt,
                    cfg.melm.restarts,
                    exec,
                )?;
                Ok(FittedProjection { v: model.v, flag: None })
            }
            Method::Pca => baselines::pca(train.points(), cfg.k).map(plain),
            Method::ClassPca => baselines::class_pca(&xp, &xm, cfg.k, true).map(plain),
            Method::TwoEllipsoidPca => baselines::class_pca(&xp, &xm, cfg.k, false).map(plain),
            Method::PerClassPca => {
                if cfg.k != 2 {
                    return Err(Error::InvalidArgument(format!(
                        "per-class PCA always produces k = 2, requested k = {}",
                        cfg.k
                    )));
                }
                baselines::per_class_pca(&xp, &xm).map(plain)
            }
            Method::Identity => Ok(FittedProjection {
                v: ProjectionMatrix::identity(train.dim()),
                flag: None,
            }),
        }
    }
}

/// MELM `γ` with the best inner-CV separability on `ds`.
pub fn select_gamma<E: Executor>(ds: &LabeledDataset, cfg: &EvalConfig, seed: u64, exec: &E) -> Result<f64> {
    let (xm, xp) = dataset::class_partition(ds);
    let mut best: Option<(f64, f64)> = None;
    for (i, &g) in cfg.gamma_grid.iter().enumerate() {
        let opt = OptimConfig { seed, ..cfg.melm.optim };
        let (model, _) = optimizer::multistart(
            &xp,
            &xm,
            cfg.k,
            BandwidthConfig::new(g)?,
            &opt,
            cfg.melm.restarts,
            exec,
        )?;
        let projected = ds.with_points(model.v.project(ds.points()))?;
        let plan = dataset::split_kfold(&projected, cfg.inner_folds, mix_seed(seed, STREAM_INNER, i as u64))?;
        let mut per = Vec::new();
        for classifier in Classifier::ALL {
            let mut total = 0.0;
            for f in 0..plan.fold_count() {
                let (tr, te) = split(&projected, &plan, f)?;
                let param = tune_classifier(classifier, &tr, cfg, mix_seed(seed, STREAM_INNER, f as u64))?;
                total += bac(te.labels(), &predict_with(param, &tr, te.points())?)?;
            }
            per.push(total / plan.fold_count() as f64);
        }
        let score = per.iter().sum::<f64>() / per.len() as f64;
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, g));
        }
    }
    best.map(|(_, g)| g)
        .ok_or_else(|| Error::InvalidArgument("empty gamma grid".into()))
}

fn split(ds: &LabeledDataset, plan: &FoldPlan, fold: usize) -> Result<(LabeledDataset, LabeledDataset)> {
    Ok((ds.subset(&plan.train_indices(fold))?, ds.subset(&plan.test_indices(fold))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Pipeline,
    Separability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub method: String,
    pub classifier: Classifier,
    pub repetition: usize,
    pub fold: usize,
    pub score: f64,
    pub param: ClassifierParam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMean {
    pub classifier: Classifier,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    /// Pipeline: mean of the best classifier. Separability: mean over
    /// classifiers.
    pub mean_bac: f64,
    pub classifier_means: Vec<ClassifierMean>,
    pub best_classifier: Classifier,
    /// Baseline flags raised while fitting, e.g. `"fold 2: EigenvalueTie"`.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub protocol: Protocol,
    pub config: EvalConfig,
    pub scores: Vec<FoldScore>,
    pub summaries: Vec<MethodSummary>,
}

impl EvalReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

fn summarize(method: String, scores: &[FoldScore], protocol: Protocol, notes: Vec<String>) -> MethodSummary {
    let classifier_means: Vec<ClassifierMean> = Classifier::ALL
        .into_iter()
        .map(|c| {
            let s: Vec<f64> = scores
                .iter()
                .filter(|x| x.method == method && x.classifier == c)
                .map(|x| x.score)
                .collect();
            ClassifierMean {
                classifier: c,
                mean: s.iter().sum::<f64>() / s.len() as f64,
            }
        })
        .collect();
    let best = classifier_means
        .iter()
        .fold(None::<&ClassifierMean>, |b, c| match b {
            Some(b) if b.mean >= c.mean => Some(b),
            _ => Some(c),
        })
        .expect("two classifiers");
    let mean_bac = match protocol {
        Protocol::Pipeline => best.mean,
        Protocol::Separability => {
            classifier_means.iter().map(|c| c.mean).sum::<f64>() / classifier_means.len() as f64
        }
    };
    MethodSummary {
        method,
        mean_bac,
        best_classifier: best.classifier,
        classifier_means,
        notes,
    }
}

/// Training/test coordinates for one outer fold.
#[derive(Debug, Clone)]
pub struct FoldProjection {
    pub projection: FittedProjection,
    /// Standardization fitted on the training split, if enabled.
    pub standardizer: Option<AffineMap>,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Fit `method` on the training split of `fold` only and project both
/// splits. Test samples never enter the fit.
pub fn fit_fold_projection<P: Projector, E: Executor>(
    ds: &LabeledDataset,
    plan: &FoldPlan,
    fold: usize,
    method: &P,
    cfg: &EvalConfig,
    exec: &E,
) -> Result<FoldProjection> {
    let (train, test) = split(ds, plan, fold)?;
    let (train, test, standardizer) = if cfg.standardize {
        let (t, map) = dataset::standardize(&train);
        let test = test.with_points(map.apply(test.points()))?;
        (t, test, Some(map))
    } else {
        (train, test, None)
    };
    let projection = method.fit(&train, cfg, mix_seed(cfg.seed, STREAM_MELM, fold as u64), exec)?;
    if projection.v.d() != ds.dim() {
        return Err(Error::Dimension(format!(
            "{} returned a {}x{} projection for {}-dimensional data",
            method.name(),
            projection.v.d(),
            projection.v.k(),
            ds.dim()
        )));
    }
    let train = train.with_points(projection.v.project(train.points()))?;
    let test = test.with_points(projection.v.project(test.points()))?;
    Ok(FoldProjection {
        projection,
        standardizer,
        train,
        test,
    })
}

/// Split → fit projection on train → tune classifiers on projected train →
/// score on projected test, for every method and outer fold.
pub fn pipeline_benchmark<P: Projector, E: Executor>(
    ds: &LabeledDataset,
    methods: &[P],
    cfg: &EvalConfig,
    exec: &E,
) -> Result<EvalReport> {
    cfg.validate()?;
    let plan = dataset::split_kfold(ds, cfg.folds, cfg.seed)?;
    let mut scores = Vec::new();
    let mut summaries = Vec::new();
    for method in methods {
        let name = method.name();
        let wrap = |fold: usize| {
            let name = name.clone();
            move |e: Error| Error::MethodFailed {
                method: name,
                fold,
                source: alloc::boxed::Box::new(e),
            }
        };
        let mut notes = Vec::new();
        let start = scores.len();
        for fold in 0..plan.fold_count() {
            let fp = fit_fold_projection(ds, &plan, fold, method, cfg, exec).map_err(wrap(fold))?;
            if let Some(flag) = fp.projection.flag {
                notes.push(format!("fold {fold}: {flag:?}"));
            }
            for classifier in Classifier::ALL {
                let param = tune_classifier(classifier, &fp.train, cfg, mix_seed(cfg.seed, STREAM_INNER, fold as u64))
                    .map_err(wrap(fold))?;
                let pred = predict_with(param, &fp.train, fp.test.points()).map_err(wrap(fold))?;
                scores.push(FoldScore {
                    method: name.clone(),
                    classifier,
                    repetition: 0,
                    fold,
                    score: bac(fp.test.labels(), &pred)?,
                    param,
                });
            }
        }
        summaries.push(summarize(name, &scores[start..], Protocol::Pipeline, notes));
    }
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        protocol: Protocol::Pipeline,
        config: cfg.clone(),
        scores,
        summaries,
    })
}

/// Stratified random subset keeping `fraction` of each class (at least
/// `min_per_class` samples), in original order.
pub fn stratified_subset(ds: &LabeledDataset, fraction: f64, min_per_class: usize, seed: u64) -> Result<LabeledDataset> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if fraction >= 1.0 {
        return Ok(ds.clone());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for label in [Label::Minus, Label::Plus] {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i] == label).collect();
        let take = ((idx.len() as f64 * fraction) as usize).max(min_per_class).min(idx.len());
        idx.shuffle(&mut rng);
        keep.extend_from_slice(&idx[..take]);
    }
    keep.sort_unstable();
    ds.subset(&keep)
}

/// Fit each projection on all (subset) data, then cross-validate the
/// classifiers on the projected points. Repeated `cfg.repetitions` times on
/// stratified subsets of size `cfg.subset_fraction`.
pub fn visual_separability<P: Projector, E: Executor>(
    ds: &LabeledDataset,
    methods: &[P],
    cfg: &EvalConfig,
    exec: &E,
) -> Result<EvalReport> {
    cfg.validate()?;
    let mut scores = Vec::new();
    let mut summaries = Vec::new();
    for method in methods {
        let name = method.name();
        let mut notes = Vec::new();
        let start = scores.len();
        let mut cached: Option<FittedProjection> = None;
        for rep in 0..cfg.repetitions {
            let subset = stratified_subset(ds, cfg.subset_fraction, cfg.folds, mix_seed(cfg.seed, STREAM_SUBSET, rep as u64))?;
            let base = if cfg.standardize { dataset::standardize(&subset).0 } else { subset };
            let fitted = match &cached {
                Some(f) => f.clone(),
                None => {
                    let f = method
                        .fit(&base, cfg, mix_seed(cfg.seed, STREAM_MELM, rep as u64), exec)
                        .map_err(|e| Error::MethodFailed {
                            method: name.clone(),
                            fold: 0,
                            source: alloc::boxed::Box::new(e),
                        })?;
                    if let Some(flag) = f.flag {
                        notes.push(format!("repetition {rep}: {flag:?}"));
                    }
                    if cfg.subset_fraction >= 1.0 {
                        cached = Some(f.clone());
                    }
                    f
                }
            };
            let projected = base.with_points(fitted.v.project(base.points()))?;
            let plan = dataset::split_kfold(&projected, cfg.folds, mix_seed(cfg.seed, STREAM_REP, rep as u64))?;
            for fold in 0..plan.fold_count() {
                let (tr, te) = split(&projected, &plan, fold)?;
                for classifier in Classifier::ALL {
                    let seed = mix_seed(mix_seed(cfg.seed, STREAM_REP, rep as u64), STREAM_INNER, fold as u64);
                    let param = tune_classifier(classifier, &tr, cfg, seed)?;
                    let pred = predict_with(param, &tr, te.points())?;
                    scores.push(FoldScore {
                        method: name.clone(),
                        classifier,
                        repetition: rep,
                        fold,
                        score: bac(te.labels(), &pred)?,
                        param,
                    });
                }
            }
        }
        summaries.push(summarize(name, &scores[start..], Protocol::Separability, notes));
    }
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        protocol: Protocol::Separability,
        config: cfg.clone(),
        scores,
        summaries,
    })
}

//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage error.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use melm_core::eval::{self, EvalConfig, GammaChoice, Method, MelmSettings};
use melm_core::{
    dataset, objective, optimizer, BandwidthConfig, KdeModel, LabeledDataset, Matrix, ObjectiveWorkspace,
    OptimConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::exec::RayonExecutor;
use crate::io::{self, Format, LabelColumn};
use crate::model::ModelFile;

/// Largest acceptable gradient relative error for `gradcheck`.
pub const GRADCHECK_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "melm", version, about = "Maximum-divergence linear projections for binary labeled data")]
pub struct Cli {
    /// Worker threads for parallel restarts (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a projection and save it as a model file.
    Fit(FitArgs),
    /// Project a dataset with a saved model.
    Transform(TransformArgs),
    /// Cross-validated benchmark of reduction methods.
    Eval(EvalArgs),
    /// Run many restarts and record every final divergence.
    Restarts(RestartsArgs),
    /// Compare the analytic gradient with finite differences.
    Gradcheck(GradcheckArgs),
    /// Export projected points and class density rasters.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// CSV label column: zero-based index or header name (default: last).
    #[arg(long = "label-col")]
    pub label_col: Option<LabelColumn>,
}

impl DataArgs {
    fn load(&self) -> Result<LabeledDataset, CliError> {
        let label = self.label_col.clone().unwrap_or_default();
        io::load(&self.data, self.format, &label).map_err(|e| CliError::new("load data", e))
    }
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    /// Bandwidth scale γ.
    #[arg(long, conflicts_with = "gamma_grid")]
    pub gamma: Option<f64>,
    /// Choose γ from {0.25, 0.5, 1, 1.5, 2} by inner cross-validation.
    #[arg(long = "gamma-grid")]
    pub gamma_grid: bool,
}

impl GammaArgs {
    fn choice(&self) -> GammaChoice {
        if self.gamma_grid {
            GammaChoice::Grid
        } else {
            GammaChoice::Fixed(self.gamma.unwrap_or(1.0))
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Target dimension.
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub gamma: GammaArgs,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-iters", default_value_t = 500)]
    pub max_iters: usize,
    /// Gradient max-norm tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProtocolArg {
    Pipeline,
    Separability,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    /// Comma-separated subset of melm,pca,cpca,2epca,ppca,identity.
    #[arg(long, value_delimiter = ',', value_parser = parse_method,
          default_value = "melm,pca,cpca,2epca,ppca,identity")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Z-score features (training statistics only) before fitting.
    #[arg(long)]
    pub standardize: bool,
    #[command(flatten)]
    pub gamma: GammaArgs,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Separability protocol: fraction of each class per repetition.
    #[arg(long = "subset-fraction", default_value_t = 1.0)]
    pub subset_fraction: f64,
    /// Separability protocol: number of repetitions.
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RestartsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub k: usize,
    /// Number of restarts.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long = "max-iters", default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Append the expected best divergence after s = 1..=S restarts.
    #[arg(long, value_name = "S")]
    pub curve: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Raster cells per axis.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

/// A runtime failure tagged with the stage that failed.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    fn new(stage: &'static str, err: impl fmt::Display) -> Self {
        Self {
            stage,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

/// Parse `args` (including the program name) and run.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let exec = RayonExecutor::new(cli.threads).map_err(|e| CliError::new("start thread pool", e))?;
    match &cli.command {
        Command::Fit(a) => fit(a, &exec),
        Command::Transform(a) => transform(a),
        Command::Eval(a) => evaluate(a, &exec),
        Command::Restarts(a) => restarts(a, &exec),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Plotdata(a) => plotdata(a),
    }
}

fn bandwidth(gamma: f64) -> Result<BandwidthConfig, CliError> {
    BandwidthConfig::new(gamma).map_err(|e| CliError::new("parse arguments", e))
}

fn fit(a: &FitArgs, exec: &RayonExecutor) -> Result<(), CliError> {
    let ds = a.data.load()?;
    let opt = OptimConfig {
        max_iters: a.max_iters,
        grad_tol: a.tol,
        seed: a.seed,
        ..OptimConfig::default()
    };
    let gamma = match a.gamma.choice() {
        GammaChoice::Fixed(g) => g,
        GammaChoice::Grid => {
            let cfg = EvalConfig {
                k: a.k,
                seed: a.seed,
                melm: MelmSettings {
                    restarts: a.restarts,
                    gamma: GammaChoice::Grid,
                    optim: opt,
                },
                ..EvalConfig::default()
            };
            eval::select_gamma(&ds, &cfg, a.seed, exec).map_err(|e| CliError::new("gamma selection", e))?
        }
    };
    let (model, trace) = optimizer::fit(&ds, a.k, bandwidth(gamma)?, &opt, a.restarts, exec)
        .map_err(|e| CliError::new("fit", e))?;
    ModelFile::from(&model)
        .save(&a.out)
        .map_err(|e| CliError::new("write model", e))?;
    println!(
        "dcs {} (restart {} of {}), gamma {}, wrote {}",
        model.dcs_achieved,
        trace.best_index,
        a.restarts,
        gamma,
        a.out.display()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<ModelFile, CliError> {
    ModelFile::load(path).map_err(|e| CliError::new("load model", e))
}

fn check_compatible(model: &ModelFile, ds: &LabeledDataset) -> Result<(), CliError> {
    if ds.dim() != model.d {
        return Err(CliError::new(
            "transform",
            format!("model expects {} features, data has {}", model.d, ds.dim()),
        ));
    }
    if ds.fingerprint() != model.fingerprint {
        eprintln!("warning: data differs from the data the model was fitted on");
    }
    Ok(())
}

fn transform(a: &TransformArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let ds = a.data.load()?;
    check_compatible(&model, &ds)?;
    let v = model.projection().map_err(|e| CliError::new("load model", e))?;
    let projected = v.project(ds.points());
    io::write_atomic(&a.out, io::points_csv(&projected, ds.labels()).as_bytes())
        .map_err(|e| CliError::new("write output", e))
}

fn evaluate(a: &EvalArgs, exec: &RayonExecutor) -> Result<(), CliError> {
    let ds = a.data.load()?;
    let cfg = EvalConfig {
        k: a.k,
        folds: a.folds,
        seed: a.seed,
        standardize: a.standardize,
        melm: MelmSettings {
            restarts: a.restarts,
            gamma: a.gamma.choice(),
            optim: OptimConfig::default(),
        },
        subset_fraction: a.subset_fraction,
        repetitions: a.repetitions,
        ..EvalConfig::default()
    };
    let report = match a.protocol {
        ProtocolArg::Pipeline => eval::pipeline_benchmark(&ds, &a.methods, &cfg, exec),
        ProtocolArg::Separability => eval::visual_separability(&ds, &a.methods, &cfg, exec),
    }
    .map_err(|e| CliError::new("eval", e))?;
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CliError::new("eval", e))?;
    json.push('\n');
    io::write_atomic(&a.out, json.as_bytes()).map_err(|e| CliError::new("write report", e))?;
    for s in &report.summaries {
        println!("{:<9} {:.4}  ({})", s.method, s.mean_bac, s.best_classifier.name());
        for note in &s.notes {
            println!("          note: {note}");
        }
    }
    Ok(())
}

fn restarts(a: &RestartsArgs, exec: &RayonExecutor) -> Result<(), CliError> {
    let ds = a.data.load()?;
    let opt = OptimConfig {
        max_iters: a.max_iters,
        grad_tol: a.tol,
        seed: a.seed,
        ..OptimConfig::default()
    };
    let (model, trace) = optimizer::fit(&ds, a.k, bandwidth(a.gamma)?, &opt, a.n, exec)
        .map_err(|e| CliError::new("restarts", e))?;
    let mut out = String::new();
    for v in &trace.final_dcs {
        out.push_str(&format!("{v}\n"));
    }
    if let Some(s_max) = a.curve {
        let ok: Vec<f64> = trace.final_dcs.iter().copied().filter(|v| v.is_finite()).collect();
        let curve = optimizer::expected_max_curve(&ok, s_max).map_err(|e| CliError::new("expected-max curve", e))?;
        out.push_str("# expected_max\ns,value\n");
        for (s, v) in curve.iter().enumerate() {
            out.push_str(&format!("{},{v}\n", s + 1));
        }
    }
    io::write_atomic(&a.out, out.as_bytes()).map_err(|e| CliError::new("write trace", e))?;
    let failed = trace.final_dcs.iter().filter(|v| !v.is_finite()).count();
    println!("best dcs {} at restart {}; {failed} failed", model.dcs_achieved, trace.best_index);
    Ok(())
}

/// Random `V` near the Stiefel manifold: orthonormal plus `N(0, 0.1²)`
/// noise, so the penalty gradient is exercised as well.
pub fn gradcheck_point(d: usize, k: usize, seed: u64) -> melm_core::Result<Matrix> {
    let base = optimizer::random_orthonormal(d, k, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let noise = Matrix::from_fn(d, k, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        0.1 * z
    });
    Ok(base.matrix() + noise)
}

/// Largest relative gradient error over `trials` random points.
pub fn max_gradient_error(ds: &LabeledDataset, k: usize, gamma: f64, trials: usize, seed: u64) -> melm_core::Result<f64> {
    let ws = ObjectiveWorkspace::from_dataset(ds, k, BandwidthConfig::new(gamma)?)?;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let v = gradcheck_point(ds.dim(), k, seed.wrapping_add(t as u64))?;
        worst = worst.max(objective::gradient_check(&ws, &v)?);
    }
    Ok(worst)
}

fn gradcheck(a: &GradcheckArgs) -> Result<(), CliError> {
    let ds = a.data.load()?;
    let worst = max_gradient_error(&ds, a.k, a.gamma, a.trials, a.seed).map_err(|e| CliError::new("gradcheck", e))?;
    println!("max relative error {worst:.3e} over {} trials", a.trials);
    if worst > GRADCHECK_THRESHOLD {
        return Err(CliError::new(
            "gradcheck",
            format!("relative error {worst:.3e} exceeds {GRADCHECK_THRESHOLD:e}"),
        ));
    }
    Ok(())
}

fn raster_csv(values: &[f64], cols: usize) -> String {
    let mut out = String::new();
    for row in values.chunks(cols) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn plotdata(a: &PlotArgs) -> Result<(), CliError> {
    let stage = "plotdata";
    let model = load_model(&a.model)?;
    let ds = a.data.load()?;
    check_compatible(&model, &ds)?;
    if model.k > 2 {
        return Err(CliError::new(stage, format!("density rasters need k <= 2, model has k = {}", model.k)));
    }
    if a.grid < 2 {
        return Err(CliError::new(stage, "--grid must be at least 2"));
    }
    let v = model.projection().map_err(|e| CliError::new("load model", e))?;
    let projected = ds.with_points(v.project(ds.points())).map_err(|e| CliError::new(stage, e))?;
    let (xm, xp) = dataset::class_partition(&projected);
    let cfg = bandwidth(model.gamma)?;
    let fm = KdeModel::fit(&xm, cfg).map_err(|e| CliError::new(stage, e))?;
    let fp = KdeModel::fit(&xp, cfg).map_err(|e| CliError::new(stage, e))?;
    let k = model.k;
    let pts = projected.points();
    let axes: Vec<Vec<f64>> = (0..k)
        .map(|r| {
            let sd = fm.covariance()[(r, r)].max(fp.covariance()[(r, r)]).sqrt();
            let (lo, hi) = (pts.row(r).min() - 3.0 * sd, pts.row(r).max() + 3.0 * sd);
            (0..a.grid)
                .map(|i| lo + (hi - lo) * i as f64 / (a.grid - 1) as f64)
                .collect()
        })
        .collect();
    // row-major raster: rows follow x2 (k = 2), columns follow x1
    let cells: Vec<Vec<f64>> = if k == 1 {
        axes[0].iter().map(|&x| vec![x]).collect()
    } else {
        axes[1]
            .iter()
            .flat_map(|&y| axes[0].iter().map(move |&x| vec![x, y]))
            .collect()
    };
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::new(stage, format!("{}: {e}", a.out.display())))?;
    let write = |name: &str, text: String| {
        io::write_atomic(&a.out.join(name), text.as_bytes()).map_err(|e| CliError::new(stage, e))
    };
    write("points.csv", io::points_csv(pts, projected.labels()))?;
    for (name, f) in [("density_minus.csv", &fm), ("density_plus.csv", &fp)] {
        let vals: Vec<f64> = cells.iter().map(|x| f.log_density(x).exp()).collect();
        write(name, raster_csv(&vals, a.grid))?;
    }
    let mut axes_csv = String::from(if k == 1 { "index,x1\n" } else { "index,x1,x2\n" });
    for i in 0..a.grid {
        let coords: Vec<String> = axes.iter().map(|ax| ax[i].to_string()).collect();
        axes_csv.push_str(&format!("{i},{}\n", coords.join(",")));
    }
    write("axes.csv", axes_csv)?;
    println!("wrote points.csv, density_minus.csv, density_plus.csv, axes.csv to {}", a.out.display());
    Ok(())
}

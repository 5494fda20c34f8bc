use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dldl::graph::build_laplacian;
use dldl::metrics::Metric;
use dldl::{fit, predict_unseen, Distributions, HyperParams, MetricReport, OneErrorVariant, Sigma};
use dldl_harness::{
    binarize, grid_search, load_dataset, load_features, run_experiment, split, synth_dataset, write_dataset,
    write_report, DatasetFormat, ExperimentConfig, GridSpec, HarnessError, LdlDataset, ModelFile, ReportFormat,
    Result, SplitSpec, SynthSpec, DEFAULT_DELTA,
};

#[derive(Parser)]
#[command(name = "dldl", version, about = "Label distributions from logical labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic csv-ld dataset.
    Synth(SynthArgs),
    /// Threshold a csv-ld dataset into logical labels.
    Binarize(BinarizeArgs),
    /// Shuffle and split a dataset into train/val/test files.
    Split(SplitArgs),
    /// Fit the model on logical labels and save the weights.
    Fit(FitArgs),
    /// Recover label distributions for a logically labelled dataset.
    Recover(FitArgs),
    /// Predict label distributions for new features with a saved model.
    Predict(PredictArgs),
    /// Score predicted distributions against ground truth.
    Eval(EvalArgs),
    /// Grid search over alpha, beta and gamma on a validation split.
    Grid(GridArgs),
    /// Full protocol: binarize, split, grid search, fit and score.
    Experiment(ExperimentArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone, Default)]
struct Params {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// A positive number or `auto`.
    #[arg(long)]
    sigma: Option<Sigma>,
    #[arg(long = "outer-iters")]
    outer_iters: Option<usize>,
    /// TOML file with hyperparameter fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Params {
    fn resolve(&self, seed: u64) -> Result<HyperParams> {
        let mut p = match &self.config {
            Some(path) => {
                let s = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                toml::from_str::<HyperParams>(&s).map_err(|e| HarnessError::Format(e.to_string()))?
            }
            None => HyperParams::default(),
        };
        if let Some(v) = self.alpha {
            p.alpha = v;
        }
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.k {
            p.k_neighbors = v;
        }
        if let Some(v) = self.sigma {
            p.sigma = v;
        }
        if let Some(v) = self.outer_iters {
            p.outer_iters = v;
        }
        p.seed = seed;
        p.validate()?;
        Ok(p)
    }

    /// The default grid, with any axis given on the command line pinned to that value.
    fn grid(&self) -> GridSpec {
        let mut g = GridSpec::default();
        if let Some(v) = self.alpha {
            g.alpha_grid = vec![v];
        }
        if let Some(v) = self.beta {
            g.beta_grid = vec![v];
        }
        if let Some(v) = self.gamma {
            g.gamma_grid = vec![v];
        }
        g
    }
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum VariantArg {
    Mismatch,
    #[default]
    Irrelevant,
}

impl From<VariantArg> for OneErrorVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Mismatch => OneErrorVariant::Top1Mismatch,
            VariantArg::Irrelevant => OneErrorVariant::Top1Irrelevant,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum FormatArg {
    #[default]
    Text,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 5)]
    c: usize,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 0.01)]
    sparsify: f64,
}

#[derive(Args)]
struct BinarizeArgs {
    #[command(flatten)]
    common: Common,
    /// csv-ld input.
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    common: Common,
    input: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset with `y*` columns.
    input: PathBuf,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    /// Model written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Dataset whose `f*` columns are used.
    input: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// csv-ld file with ground-truth distributions.
    #[arg(long)]
    truth: PathBuf,
    /// csv-ld file with predicted distributions.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long = "one-error-variant", value_enum, default_value_t)]
    one_error_variant: VariantArg,
    #[arg(long, value_enum, default_value_t)]
    format: FormatArg,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    /// Training split with `y*` columns.
    #[arg(long)]
    train: PathBuf,
    /// Validation split with `d*` columns.
    #[arg(long)]
    val: PathBuf,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// csv-ld dataset with ground-truth distributions.
    input: PathBuf,
    #[command(flatten)]
    params: Params,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long = "one-error-variant", value_enum, default_value_t)]
    one_error_variant: VariantArg,
    #[arg(long, value_enum, default_value_t)]
    format: FormatArg,
    /// Record wall-clock times in the report.
    #[arg(long)]
    timings: bool,
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.to_path_buf(), source: e }
}

fn write_text(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s).map_err(|e| io_err(path, e))
}

fn load_any(path: &Path) -> Result<LdlDataset> {
    match load_dataset(path, DatasetFormat::CsvLogical) {
        Err(HarnessError::HeaderMismatch(_)) => load_dataset(path, DatasetFormat::CsvLd),
        r => r,
    }
}

fn fit_dataset(ds: &LdlDataset, params: &HyperParams) -> Result<dldl::Fit> {
    let g = build_laplacian(&ds.x, params.k_neighbors, params.sigma)?;
    Ok(fit(&ds.x, ds.require_labels()?, params, Some(&g))?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let mut spec = SynthSpec::new(a.n, a.m, a.c, a.common.seed);
            if let Some(k) = a.clusters {
                spec.n_clusters = k;
            }
            spec.temperature = a.temperature;
            spec.sparsify_delta = a.sparsify;
            let ds = synth_dataset(&spec)?;
            write_dataset(&ds, &a.common.out)?;
            println!("seed: {}", a.common.seed);
            println!("wrote {} ({} samples)", a.common.out.display(), ds.n_samples());
        }
        Command::Binarize(a) => {
            let ds = load_dataset(&a.input, DatasetFormat::CsvLd)?;
            let y = binarize(ds.require_truth()?, a.delta)?;
            write_dataset(&LdlDataset { y: Some(y), ..ds }, &a.common.out)?;
            println!("seed: {}", a.common.seed);
            println!("wrote {} (delta {})", a.common.out.display(), a.delta);
        }
        Command::Split(a) => {
            let ds = load_any(&a.input)?;
            let (train, val, test) = split(&ds, &SplitSpec::new(a.common.seed))?;
            fs::create_dir_all(&a.common.out).map_err(|e| io_err(&a.common.out, e))?;
            println!("seed: {}", a.common.seed);
            for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
                let p = a.common.out.join(format!("{name}.csv"));
                write_dataset(part, &p)?;
                println!("wrote {} ({} samples)", p.display(), part.n_samples());
            }
        }
        Command::Fit(a) => {
            let params = a.params.resolve(a.common.seed)?;
            let ds = load_any(&a.input)?;
            let result = fit_dataset(&ds, &params)?;
            ModelFile::from_fit(&result, &params).write(&a.common.out)?;
            println!("seed: {}", a.common.seed);
            println!("wrote {}", a.common.out.display());
        }
        Command::Recover(a) => {
            let params = a.params.resolve(a.common.seed)?;
            let ds = load_any(&a.input)?;
            let result = fit_dataset(&ds, &params)?;
            let out = LdlDataset { name: ds.name.clone(), x: ds.x, d_true: Some(result.d), y: ds.y };
            write_dataset(&out, &a.common.out)?;
            println!("seed: {}", a.common.seed);
            println!("wrote {}", a.common.out.display());
        }
        Command::Predict(a) => {
            let model = ModelFile::read(&a.model)?;
            let x = load_features(&a.input)?;
            let p = predict_unseen(&model.weights()?, &x)?;
            let d = Distributions::new(p.into_inner())?;
            write_dataset(&LdlDataset { name: "predictions".into(), x, d_true: Some(d), y: None }, &a.common.out)?;
            println!("seed: {}", a.common.seed);
            println!("wrote {}", a.common.out.display());
        }
        Command::Eval(a) => {
            let truth = load_dataset(&a.truth, DatasetFormat::CsvLd)?;
            let pred = load_dataset(&a.pred, DatasetFormat::CsvLd)?;
            let report = MetricReport::compute(
                truth.require_truth()?.values(),
                pred.require_truth()?.values(),
                a.one_error_variant.into(),
            )?;
            let text = match a.format {
                FormatArg::Text => {
                    let mut s = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Format(e.to_string()))?;
                    s.push('\n');
                    s
                }
                FormatArg::Csv => {
                    let names: Vec<&str> = Metric::ALL.iter().map(|m| m.name()).collect();
                    let values: Vec<String> = Metric::ALL.iter().map(|m| report.get(*m).to_string()).collect();
                    format!("method,{}\nmodel,{}\n", names.join(","), values.join(","))
                }
            };
            write_text(&a.common.out, &text)?;
            println!("seed: {}", a.common.seed);
            print!("{text}");
        }
        Command::Grid(a) => {
            let params = a.params.resolve(a.common.seed)?;
            let train = load_any(&a.train)?;
            let val = load_dataset(&a.val, DatasetFormat::CsvLd)?;
            let result = grid_search(&train, &val, &a.params.grid(), &params)?;
            let mut s = serde_json::to_string_pretty(&result).map_err(|e| HarnessError::Format(e.to_string()))?;
            s.push('\n');
            write_text(&a.common.out, &s)?;
            println!("seed: {}", a.common.seed);
            println!(
                "best alpha={} beta={} gamma={} score={}",
                result.best.alpha, result.best.beta, result.best.gamma, result.best_score
            );
        }
        Command::Experiment(a) => {
            let params = a.params.resolve(a.common.seed)?;
            let ds = load_dataset(&a.input, DatasetFormat::CsvLd)?;
            let cfg = ExperimentConfig {
                split: SplitSpec::new(a.common.seed),
                grid: a.params.grid(),
                params,
                delta: a.delta,
                one_error_variant: a.one_error_variant.into(),
                record_timings: a.timings,
            };
            let report = run_experiment(&ds, &cfg)?;
            write_report(&report, &a.common.out, a.format.into())?;
            println!("seed: {}", report.seed);
            println!(
                "recovery chebyshev {} (baseline {}), predictive chebyshev {} (baseline {})",
                report.recovery.chebyshev,
                report.baselines.recovery.chebyshev,
                report.predictive.chebyshev,
                report.baselines.predictive.chebyshev
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

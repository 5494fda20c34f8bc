//! End-to-end protocol: binarize, split, grid search, final fit, recovery and predictive scores.

use std::time::Instant;

use dldl::graph::build_laplacian;
use dldl::metrics::{baseline_recover, rank_methods, Ranking};
use dldl::solver::{update_w, OuterDiagnostics};
use dldl::{fit, predict_unseen, HyperParams, MetricReport, Objective, OneErrorVariant, Weights};
use serde::{Deserialize, Serialize};

use crate::dataset::LdlDataset;
use crate::error::Result;
use crate::grid::{grid_search, CellRecord, GridSpec};
use crate::protocol::{with_binarized_labels, split, SplitSpec};

pub const METHOD_NAME: &str = "dldl";
pub const BASELINE_NAME: &str = "baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReports {
    /// Row-normalized logical labels vs training ground truth.
    pub recovery: MetricReport,
    /// Softmax model fitted to the baseline distributions, scored on the test split.
    pub predictive: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rankings {
    pub recovery: Ranking,
    pub predictive: Ranking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub initial_objective: Objective,
    pub objective_trace: Vec<Objective>,
    pub inner: Vec<OuterDiagnostics>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub grid_seconds: f64,
    pub final_fit_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub seed: u64,
    pub delta: f64,
    pub one_error_variant: OneErrorVariant,
    pub split: SplitSpec,
    pub split_sizes: [usize; 3],
    pub hyperparameters: HyperParams,
    pub recovery: MetricReport,
    pub predictive: MetricReport,
    pub baselines: BaselineReports,
    pub rankings: Rankings,
    pub diagnostics: SolverDiagnostics,
    pub grid: Vec<CellRecord>,
    /// Wall-clock times; only recorded on request so reports stay reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub split: SplitSpec,
    pub grid: GridSpec,
    pub params: HyperParams,
    pub delta: f64,
    pub one_error_variant: OneErrorVariant,
    pub record_timings: bool,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            split: SplitSpec::new(seed),
            grid: GridSpec::default(),
            params: HyperParams { seed, ..HyperParams::default() },
            delta: crate::protocol::DEFAULT_DELTA,
            one_error_variant: OneErrorVariant::Top1Irrelevant,
            record_timings: false,
        }
    }
}

pub fn run_experiment(dataset: &LdlDataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    dataset.require_truth()?;
    let labelled = with_binarized_labels(dataset, cfg.delta)?;
    let (train, val, test) = split(&labelled, &cfg.split)?;

    let grid = grid_search(&train, &val, &cfg.grid, &cfg.params)?;
    let grid_seconds = start.elapsed().as_secs_f64();

    let fit_start = Instant::now();
    let y = train.require_labels()?;
    let g = build_laplacian(&train.x, grid.best.k_neighbors, grid.best.sigma)?;
    let result = fit(&train.x, y, &grid.best, Some(&g))?;
    let final_fit_seconds = fit_start.elapsed().as_secs_f64();

    let variant = cfg.one_error_variant;
    let train_truth = train.require_truth()?.values();
    let test_truth = test.require_truth()?.values();
    let recovery = MetricReport::compute(train_truth, result.d.values(), variant)?;
    let test_pred = predict_unseen(&result.w, &test.x)?;
    let predictive = MetricReport::compute(test_truth, test_pred.values(), variant)?;

    let base_d = baseline_recover::<f64>(y);
    let base_recovery = MetricReport::compute(train_truth, base_d.values(), variant)?;
    let w0 = Weights::identity(train.x.n_features(), y.n_labels());
    let (base_w, _) = update_w(&w0, train.x.values(), base_d.values(), grid.best.gamma, &grid.best)?;
    let base_pred = predict_unseen(&base_w, &test.x)?;
    let base_predictive = MetricReport::compute(test_truth, base_pred.values(), variant)?;

    let rankings = Rankings {
        recovery: rank_methods(&[
            (METHOD_NAME.to_string(), recovery),
            (BASELINE_NAME.to_string(), base_recovery),
        ])?,
        predictive: rank_methods(&[
            (METHOD_NAME.to_string(), predictive),
            (BASELINE_NAME.to_string(), base_predictive),
        ])?,
    };

    let timings = cfg.record_timings.then(|| Timings {
        grid_seconds,
        final_fit_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    });

    Ok(ExperimentReport {
        dataset: dataset.name.clone(),
        seed: cfg.split.seed,
        delta: cfg.delta,
        one_error_variant: variant,
        split: cfg.split,
        split_sizes: [train.n_samples(), val.n_samples(), test.n_samples()],
        hyperparameters: grid.best,
        recovery,
        predictive,
        baselines: BaselineReports { recovery: base_recovery, predictive: base_predictive },
        rankings,
        diagnostics: SolverDiagnostics {
            initial_objective: result.initial_objective,
            objective_trace: result.objective_trace,
            inner: result.inner_diagnostics,
            converged: result.converged,
        },
        grid: grid.records,
        timings,
    })
}

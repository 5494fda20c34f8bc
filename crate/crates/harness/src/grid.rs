//! Hyperparameter grid search scored on the validation split.

use dldl::graph::build_laplacian;
use dldl::metrics::{chebyshev, clark, intersection, one_error, Metric};
use dldl::{fit, predict_unseen, HyperParams, OneErrorVariant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LdlDataset;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub selection_metric: Metric,
}

impl Default for GridSpec {
    fn default() -> Self {
        let wide = vec![1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];
        Self {
            alpha_grid: wide.clone(),
            beta_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            gamma_grid: wide,
            selection_metric: Metric::Chebyshev,
        }
    }
}

impl GridSpec {
    /// A single cell at the given parameters.
    pub fn single(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha_grid: vec![alpha],
            beta_grid: vec![beta],
            gamma_grid: vec![gamma],
            selection_metric: Metric::Chebyshev,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("alpha", &self.alpha_grid), ("beta", &self.beta_grid), ("gamma", &self.gamma_grid)] {
            if g.is_empty() || g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(HarnessError::InvalidArgument(format!(
                    "{name} grid must be nonempty with positive entries"
                )));
            }
        }
        Ok(())
    }

    /// Cells in lexicographic order of their `(alpha, beta, gamma)` grid indices.
    pub fn cells(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for a in 0..self.alpha_grid.len() {
            for b in 0..self.beta_grid.len() {
                for g in 0..self.gamma_grid.len() {
                    out.push([a, b, g]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub index: [usize; 3],
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Validation score under the selection metric; absent when the fit failed.
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: HyperParams,
    pub best_index: [usize; 3],
    pub best_score: f64,
    pub records: Vec<CellRecord>,
}

pub fn score(metric: Metric, truth: ndarray::ArrayView2<f64>, pred: ndarray::ArrayView2<f64>) -> Result<f64> {
    Ok(match metric {
        Metric::Chebyshev => chebyshev(truth, pred)?,
        Metric::Clark => clark(truth, pred)?,
        Metric::OneError => one_error(truth, pred, OneErrorVariant::Top1Irrelevant)?,
        Metric::Intersection => intersection(truth, pred)?,
    })
}

/// Fits every cell on `train` and scores its predictions for `val` against the validation
/// ground truth. The best score wins; ties go to the earliest cell in grid order.
pub fn grid_search(
    train: &LdlDataset,
    val: &LdlDataset,
    grid: &GridSpec,
    params: &HyperParams,
) -> Result<GridResult> {
    grid.validate()?;
    params.validate()?;
    let y = train.require_labels()?;
    let truth = val.require_truth()?;
    let g = build_laplacian(&train.x, params.k_neighbors, params.sigma)?;

    let cells = grid.cells();
    let records: Vec<CellRecord> = cells
        .par_iter()
        .map(|&[a, b, c]| {
            let cell = HyperParams {
                alpha: grid.alpha_grid[a],
                beta: grid.beta_grid[b],
                gamma: grid.gamma_grid[c],
                ..params.clone()
            };
            let outcome = fit(&train.x, y, &cell, Some(&g))
                .map_err(HarnessError::from)
                .and_then(|r| Ok(predict_unseen(&r.w, &val.x)?))
                .and_then(|p| score(grid.selection_metric, truth.values(), p.values()));
            let (score, error) = match outcome {
                Ok(s) if s.is_finite() => (Some(s), None),
                Ok(s) => (None, Some(format!("non-finite score {s}"))),
                Err(e) => (None, Some(e.to_string())),
            };
            CellRecord { index: [a, b, c], alpha: cell.alpha, beta: cell.beta, gamma: cell.gamma, score, error }
        })
        .collect();

    let higher = grid.selection_metric.higher_is_better();
    let mut best: Option<(usize, f64)> = None;
    for (i, rec) in records.iter().enumerate() {
        let Some(s) = rec.score else { continue };
        let better = match best {
            None => true,
            Some((_, b)) => if higher { s > b } else { s < b },
        };
        if better {
            best = Some((i, s));
        }
    }
    let Some((i, best_score)) = best else {
        let first = records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(HarnessError::AllCellsFailed(first));
    };
    let rec = &records[i];
    Ok(GridResult {
        best: HyperParams { alpha: rec.alpha, beta: rec.beta, gamma: rec.gamma, ..params.clone() },
        best_index: rec.index,
        best_score,
        records,
    })
}

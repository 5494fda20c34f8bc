use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::admm::{solve_d, AdmmDiagnostics};
use super::weights::{update_w, WDiagnostics};
use crate::data::{
    FeatureMatrix, HyperParams, LabelDistributionMatrix, LogicalLabelMatrix, WeightMatrix,
    SOLVER_ROW_SUM_TOL,
};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, LaplacianMatrix};
use crate::objective::{full_objective, predict, ObjectiveBreakdown};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterDiagnostics {
    pub w: WDiagnostics,
    pub d: AdmmDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    /// Recovered training distributions, feasible for the training labels.
    pub d: LabelDistributionMatrix<T>,
    pub w: WeightMatrix<T>,
    /// Joint objective at the initial `(D, W)`.
    pub initial_objective: ObjectiveBreakdown<T>,
    /// Joint objective after each outer iteration.
    pub objective_trace: Vec<ObjectiveBreakdown<T>>,
    pub inner_diagnostics: Vec<OuterDiagnostics>,
    /// Whether the relative objective change fell below `outer_rel_tol`.
    pub converged: bool,
}

/// Uniform distribution over each row's positive labels.
pub fn uniform_over_positives<T: Scalar>(y: &LogicalLabelMatrix) -> LabelDistributionMatrix<T> {
    let mut d: Array2<T> = y.values().mapv(|v| T::from(v).unwrap());
    for mut row in d.outer_iter_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    LabelDistributionMatrix::from_unchecked(d)
}

/// Alternates weight and distribution updates from `W = I`, `D = rownorm(Y)`.
///
/// Builds the kNN Laplacian from `params` when `g` is not supplied.
pub fn fit<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LogicalLabelMatrix,
    params: &HyperParams,
    g: Option<&LaplacianMatrix<T>>,
) -> Result<FitResult<T>> {
    params.validate()?;
    if x.n_samples() != y.n_samples() {
        return Err(Error::RowCountMismatch { features: x.n_samples(), labels: y.n_samples() });
    }
    let built;
    let g = match g {
        Some(g) => {
            if g.n() != x.n_samples() {
                return Err(Error::DimensionMismatch(format!(
                    "Laplacian is {0}x{0} for {1} samples",
                    g.n(),
                    x.n_samples()
                )));
            }
            g
        }
        None => {
            built = build_laplacian(x, params.k_neighbors, params.sigma)?;
            &built
        }
    };

    let (alpha, beta, gamma) = (T::lit(params.alpha), T::lit(params.beta), T::lit(params.gamma));
    let xv = x.values();
    let mut w = WeightMatrix::identity(x.n_features(), y.n_labels());
    let mut d = uniform_over_positives::<T>(y);
    let objective = |d: ArrayView2<'_, T>, w: ArrayView2<'_, T>| {
        full_objective(d, w, xv, g, alpha, beta, gamma)
    };

    let initial_objective = objective(d.values(), w.values())?;
    let mut prev_total = initial_objective.total;
    let mut objective_trace = Vec::with_capacity(params.outer_iters);
    let mut inner_diagnostics = Vec::with_capacity(params.outer_iters);
    let mut converged = false;

    for _ in 0..params.outer_iters {
        let (w_new, w_diag) = update_w(&w, xv, d.values(), gamma, params)?;
        w = w_new;
        let p = predict(xv, w.values())?;
        let (d_new, d_diag) = solve_d(&d, p.values(), g, y, alpha, beta, params)?;
        d = d_new;

        let ob = objective(d.values(), w.values())?;
        objective_trace.push(ob);
        inner_diagnostics.push(OuterDiagnostics { w: w_diag, d: d_diag });

        let scale = prev_total.abs().max(T::min_positive_value());
        let rel = (prev_total - ob.total).abs() / scale;
        prev_total = ob.total;
        if rel <= T::lit(params.outer_rel_tol) {
            converged = true;
            break;
        }
    }

    let d = LabelDistributionMatrix::with_tolerance(d.into_inner(), SOLVER_ROW_SUM_TOL)?;
    d.check_dominated_by(y)?;
    Ok(FitResult { d, w, initial_objective, objective_trace, inner_diagnostics, converged })
}

/// Softmax predictions for new samples.
pub fn predict_unseen<T: Scalar>(
    w: &WeightMatrix<T>,
    x_new: &FeatureMatrix<T>,
) -> Result<LabelDistributionMatrix<T>> {
    let p = predict(x_new.values(), w.values())?;
    Ok(LabelDistributionMatrix::from_unchecked(p.into_inner()))
}

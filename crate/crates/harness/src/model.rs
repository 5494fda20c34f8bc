//! Fitted model files.

use std::fs;
use std::path::Path;

use dldl::solver::OuterDiagnostics;
use dldl::{Fit, HyperParams, Objective, Weights};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub seed: u64,
    pub hyperparameters: HyperParams,
    pub n_features: usize,
    pub n_labels: usize,
    /// Row-major `n_features × n_labels` weights.
    pub weights: Vec<Vec<f64>>,
    pub initial_objective: Objective,
    pub objective_trace: Vec<Objective>,
    pub inner: Vec<OuterDiagnostics>,
    pub converged: bool,
}

impl ModelFile {
    pub fn from_fit(fit: &Fit, params: &HyperParams) -> Self {
        let w = fit.w.values();
        Self {
            seed: params.seed,
            hyperparameters: params.clone(),
            n_features: w.nrows(),
            n_labels: w.ncols(),
            weights: w.rows().into_iter().map(|r| r.to_vec()).collect(),
            initial_objective: fit.initial_objective,
            objective_trace: fit.objective_trace.clone(),
            inner: fit.inner_diagnostics.clone(),
            converged: fit.converged,
        }
    }

    pub fn weights(&self) -> Result<Weights> {
        if self.weights.len() != self.n_features || self.weights.iter().any(|r| r.len() != self.n_labels) {
            return Err(HarnessError::Format("weight rows do not match the declared shape".into()));
        }
        let flat: Vec<f64> = self.weights.iter().flatten().copied().collect();
        let a = Array2::from_shape_vec((self.n_features, self.n_labels), flat)
            .map_err(|e| HarnessError::Format(e.to_string()))?;
        Ok(Weights::new(a)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = serde_json::to_string_pretty(self).map_err(|e| HarnessError::Format(e.to_string()))?;
        s.push('\n');
        fs::write(path, s).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| HarnessError::Format(e.to_string()))
    }
}

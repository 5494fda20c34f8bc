//! Gradient descent for the softmax weights with the distributions held fixed.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::data::{HyperParams, WeightMatrix};
use crate::error::Result;
use crate::objective::{w_gradient, w_objective};
use crate::scalar::Scalar;

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WDiagnostics {
    pub iterations: usize,
    pub grad_norm: f64,
    pub stalled: bool,
    pub objective_in: f64,
    pub objective_out: f64,
}

/// Minimizes the convex weight objective from `w0` by gradient descent with Armijo
/// backtracking (`c = 1e-4`, step halving).
///
/// Each iteration first tries twice the previously accepted step. Stops when the gradient
/// Frobenius norm drops to `w_grad_tol`, after `w_max_iters` iterations, or when no step
/// satisfies the Armijo condition (flagged as stalled).
pub fn update_w<T: Scalar>(
    w0: &WeightMatrix<T>,
    x: ArrayView2<'_, T>,
    d: ArrayView2<'_, T>,
    gamma: T,
    params: &HyperParams,
) -> Result<(WeightMatrix<T>, WDiagnostics)> {
    let tol = T::lit(params.w_grad_tol);
    let c = T::lit(ARMIJO_C);
    let half = T::lit(0.5);

    let mut w = w0.values().to_owned();
    let mut t = w_objective(w.view(), x, d, gamma)?;
    let objective_in = t;
    let mut step = T::one();
    let mut iterations = 0;
    let mut stalled = false;
    let mut grad = w_gradient(w.view(), x, d, gamma)?;
    let mut norm_sq = grad.fold(T::zero(), |a, &g| a + g * g);
    let mut trial = Array2::zeros(w.dim());

    while iterations < params.w_max_iters && norm_sq.sqrt() > tol {
        let mut eta = step;
        let mut accepted = false;
        while eta >= T::lit(MIN_STEP) {
            Zip::from(&mut trial).and(&w).and(&grad).for_each(|tr, &wv, &g| *tr = wv - eta * g);
            let t_trial = w_objective(trial.view(), x, d, gamma)?;
            if t_trial <= t - c * eta * norm_sq {
                std::mem::swap(&mut w, &mut trial);
                t = t_trial;
                accepted = true;
                break;
            }
            eta = eta * half;
        }
        if !accepted {
            stalled = true;
            break;
        }
        iterations += 1;
        step = (eta * T::lit(2.0)).min(T::lit(MAX_STEP));
        grad = w_gradient(w.view(), x, d, gamma)?;
        norm_sq = grad.fold(T::zero(), |a, &g| a + g * g);
    }

    let diagnostics = WDiagnostics {
        iterations,
        grad_norm: norm_sq.sqrt().to_f64().unwrap_or(f64::NAN),
        stalled,
        objective_in: objective_in.to_f64().unwrap_or(f64::NAN),
        objective_out: t.to_f64().unwrap_or(f64::NAN),
    };
    Ok((WeightMatrix::new(w)?, diagnostics))
}

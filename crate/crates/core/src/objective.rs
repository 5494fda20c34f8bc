//! Softmax predictor, KL loss, and the two block objectives with their gradients.

use ndarray::{Array2, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{smoothness, LaplacianMatrix};
use crate::scalar::Scalar;

/// Floor applied inside `ln` for strictly positive degrees.
pub const LOG_FLOOR: f64 = 1e-12;

/// Row-wise softmax outputs, strictly positive with unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix<T> {
    values: Array2<T>,
}

impl<T: Scalar> PredictionMatrix<T> {
    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown<T> {
    pub kl_term: T,
    pub laplacian_term: T,
    pub d_frob_term: T,
    pub w_frob_term: T,
    pub total: T,
}

/// `softmax(X W)` per row, with max-logit subtraction.
pub fn predict<T: Scalar>(x: ArrayView2<'_, T>, w: ArrayView2<'_, T>) -> Result<PredictionMatrix<T>> {
    if x.ncols() != w.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} columns but W has {} rows",
            x.ncols(),
            w.nrows()
        )));
    }
    let mut values = x.dot(&w);
    for mut row in values.outer_iter_mut() {
        let max = row.fold(T::neg_infinity(), |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let z = row.sum();
        row.mapv_inplace(|v| v / z);
    }
    Ok(PredictionMatrix { values })
}

/// `sum_ij D_ij ln(D_ij / P_ij)` with `0 ln 0 = 0`. Roundoff negatives are reported as 0.
pub fn kl_divergence<T: Scalar>(d: ArrayView2<'_, T>, p: ArrayView2<'_, T>) -> Result<T> {
    let kl = kl_sum(d, p)?;
    Ok(if kl < T::zero() && kl > T::lit(-1e-12) { T::zero() } else { kl })
}

fn kl_sum<T: Scalar>(d: ArrayView2<'_, T>, p: ArrayView2<'_, T>) -> Result<T> {
    same_shape(d, p)?;
    let mut acc = T::zero();
    for ((idx, &dij), &pij) in d.indexed_iter().zip(p.iter()) {
        if dij == T::zero() {
            continue;
        }
        if !(pij > T::zero()) {
            return Err(Error::NonPositivePrediction { row: idx.0, col: idx.1 });
        }
        acc = acc + dij * (dij / pij).ln();
    }
    Ok(acc)
}

fn log_sum_exp<T: Scalar>(row: ArrayView1<'_, T>) -> T {
    let max = row.fold(T::neg_infinity(), |m, &v| m.max(v));
    max + row.fold(T::zero(), |acc, &v| acc + (v - max).exp()).ln()
}

fn frob_sq<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    a.fold(T::zero(), |acc, &v| acc + v * v)
}

fn check_w_shapes<T: Scalar>(
    w: ArrayView2<'_, T>,
    x: ArrayView2<'_, T>,
    d: ArrayView2<'_, T>,
) -> Result<()> {
    if x.ncols() != w.nrows() || d.nrows() != x.nrows() || d.ncols() != w.ncols() {
        return Err(Error::ShapeMismatch { left: x.dim(), right: w.dim() });
    }
    Ok(())
}

/// `T(W) = sum_i lse((XW)_i) - sum_ij D_ij (XW)_ij + gamma |W|_F^2`.
///
/// Equals `KL(D, softmax(XW)) + gamma |W|_F^2` minus the entropy-like constant `sum D ln D`.
pub fn w_objective<T: Scalar>(
    w: ArrayView2<'_, T>,
    x: ArrayView2<'_, T>,
    d: ArrayView2<'_, T>,
    gamma: T,
) -> Result<T> {
    check_w_shapes(w, x, d)?;
    let logits = x.dot(&w);
    let lse = logits.outer_iter().fold(T::zero(), |acc, r| acc + log_sum_exp(r));
    let fit = Zip::from(&logits).and(d).fold(T::zero(), |acc, &l, &dij| acc + l * dij);
    Ok(lse - fit + gamma * frob_sq(w))
}

/// `X^T (P - D) + 2 gamma W` with `P = softmax(XW)`.
pub fn w_gradient<T: Scalar>(
    w: ArrayView2<'_, T>,
    x: ArrayView2<'_, T>,
    d: ArrayView2<'_, T>,
    gamma: T,
) -> Result<Array2<T>> {
    check_w_shapes(w, x, d)?;
    let p = predict(x, w)?.into_inner();
    let resid = p - &d;
    let two_gamma = T::lit(2.0) * gamma;
    Ok(x.t().dot(&resid) + &w.mapv(|v| v * two_gamma))
}

/// Inputs of the distribution block of the augmented Lagrangian, everything except `D`.
#[derive(Debug, Clone, Copy)]
pub struct DSubproblem<'a, T> {
    pub p: ArrayView2<'a, T>,
    pub g: &'a LaplacianMatrix<T>,
    /// Auxiliary feasible copy of `D`.
    pub b: ArrayView2<'a, T>,
    /// Multiplier of the `B = D` constraint.
    pub phi: ArrayView2<'a, T>,
    pub alpha: T,
    pub beta: T,
    pub tau: T,
}

impl<T: Scalar> DSubproblem<'_, T> {
    fn check(&self, d: ArrayView2<'_, T>) -> Result<()> {
        same_shape(d, self.p)?;
        same_shape(d, self.b)?;
        same_shape(d, self.phi)?;
        if self.g.n() != d.nrows() {
            return Err(Error::ShapeMismatch { left: d.dim(), right: (self.g.n(), self.g.n()) });
        }
        Ok(())
    }
}

/// `U(D) = KL(D,P) + alpha tr(D^T G D) + beta |D|_F^2 + <Phi, B - D> + tau/2 |B - D|_F^2`.
pub fn d_objective<T: Scalar>(d: ArrayView2<'_, T>, sub: &DSubproblem<'_, T>) -> Result<T> {
    sub.check(d)?;
    let kl = kl_sum(d, sub.p)?;
    let lap = smoothness(d, sub.g)?;
    let mut inner = T::zero();
    let mut penalty = T::zero();
    Zip::from(d).and(sub.b).and(sub.phi).for_each(|&dij, &bij, &phij| {
        let gap = bij - dij;
        inner = inner + phij * gap;
        penalty = penalty + gap * gap;
    });
    Ok(kl + sub.alpha * lap + sub.beta * frob_sq(d) + inner + sub.tau * T::lit(0.5) * penalty)
}

/// Gradient of [`d_objective`]. Entries with `D_ij = 0` are pinned and get a zero gradient.
pub fn d_gradient<T: Scalar>(d: ArrayView2<'_, T>, sub: &DSubproblem<'_, T>) -> Result<Array2<T>> {
    sub.check(d)?;
    if let Some(((row, col), _)) = d.indexed_iter().find(|(_, &v)| v < T::zero()) {
        return Err(Error::NegativeD { row, col });
    }
    let g = sub.g.values();
    let hd = g.dot(&d) + &g.t().dot(&d);
    let mut grad = Array2::zeros(d.dim());
    for (((i, j), out), &dij) in grad.indexed_iter_mut().zip(d.iter()) {
        if dij == T::zero() {
            continue;
        }
        let pij = sub.p[[i, j]];
        if !(pij > T::zero()) {
            return Err(Error::NonPositivePrediction { row: i, col: j });
        }
        *out = entry_gradient(dij, pij, hd[[i, j]], sub.b[[i, j]], sub.phi[[i, j]], sub);
    }
    Ok(grad)
}

/// Gradient entry for a strictly positive degree, given `hd = [(G + G^T) D]_ij`.
#[inline]
pub(crate) fn entry_gradient<T: Scalar>(
    dij: T,
    pij: T,
    hd: T,
    bij: T,
    phij: T,
    sub: &DSubproblem<'_, T>,
) -> T {
    let floor = T::lit(LOG_FLOOR);
    T::one() + dij.max(floor).ln() - pij.ln() + sub.alpha * hd + T::lit(2.0) * sub.beta * dij - phij
        + sub.tau * (dij - bij)
}

/// Evaluates every term of the joint objective at `(D, W)`.
pub fn full_objective<T: Scalar>(
    d: ArrayView2<'_, T>,
    w: ArrayView2<'_, T>,
    x: ArrayView2<'_, T>,
    g: &LaplacianMatrix<T>,
    alpha: T,
    beta: T,
    gamma: T,
) -> Result<ObjectiveBreakdown<T>> {
    let p = predict(x, w)?;
    let kl_term = kl_divergence(d, p.values())?;
    let laplacian_term = smoothness(d, g)?;
    let d_frob_term = frob_sq(d);
    let w_frob_term = frob_sq(w);
    Ok(ObjectiveBreakdown {
        kl_term,
        laplacian_term,
        d_frob_term,
        w_frob_term,
        total: kl_term + alpha * laplacian_term + beta * d_frob_term + gamma * w_frob_term,
    })
}

fn same_shape<T>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

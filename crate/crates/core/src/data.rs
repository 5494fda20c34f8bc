//! Domain matrices and hyperparameters shared by every module.
//!
//! All matrices are dense and row-major: one row per sample.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-sum tolerance for distributions supplied by callers.
pub const USER_ROW_SUM_TOL: f64 = 1e-6;
/// Row-sum tolerance for distributions produced by the solver.
pub const SOLVER_ROW_SUM_TOL: f64 = 1e-9;

/// `n x m` sample features, `n >= 2`, `m >= 1`, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    values: Array2<T>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        let (n, m) = values.dim();
        if n < 1 || m < 1 {
            return Err(Error::InvalidShape(format!(
                "feature matrix must be at least 1x1, got {n}x{m}"
            )));
        }
        check_finite(values.view())?;
        Ok(Self { values })
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        Self::new(self.values.select(Axis(0), indices))
    }

    pub fn into_inner(self) -> Array2<T> {
        self.values
    }
}

/// `n x c` binary relevance matrix. Every row has at least one positive label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalLabelMatrix {
    values: Array2<u8>,
}

impl LogicalLabelMatrix {
    pub fn new(values: Array2<u8>) -> Result<Self> {
        let (n, c) = values.dim();
        if n < 1 || c < 2 {
            return Err(Error::InvalidShape(format!(
                "label matrix needs at least one row and two labels, got {n}x{c}"
            )));
        }
        for ((row, col), &v) in values.indexed_iter() {
            if v > 1 {
                return Err(Error::NonBinaryLabel { row, col });
            }
        }
        for (i, row) in values.outer_iter().enumerate() {
            if row.iter().all(|&v| v == 0) {
                return Err(Error::AllZeroLabelRow(i));
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> ArrayView2<'_, u8> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, u8> {
        self.values.row(i)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_labels(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        Self::new(self.values.select(Axis(0), indices))
    }

    pub fn into_inner(self) -> Array2<u8> {
        self.values
    }
}

/// `n x c` matrix whose rows are probability distributions over labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistributionMatrix<T> {
    values: Array2<T>,
}

impl<T: Scalar> LabelDistributionMatrix<T> {
    /// Validates nonnegativity and unit row sums within [`USER_ROW_SUM_TOL`].
    pub fn new(values: Array2<T>) -> Result<Self> {
        Self::with_tolerance(values, USER_ROW_SUM_TOL)
    }

    pub fn with_tolerance(values: Array2<T>, tol: f64) -> Result<Self> {
        if values.nrows() < 1 || values.ncols() < 1 {
            return Err(Error::InvalidShape("empty label distribution matrix".into()));
        }
        check_finite(values.view())?;
        for ((row, col), &v) in values.indexed_iter() {
            if v < T::zero() {
                return Err(Error::NegativeD { row, col });
            }
        }
        for (i, row) in values.outer_iter().enumerate() {
            let sum = row.sum();
            if (sum - T::one()).abs() > T::attainable_tol(tol, row.len()) {
                return Err(Error::NotADistribution {
                    row: i,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { values })
    }

    /// Like [`Self::new`], additionally requiring `D <= Y` elementwise.
    pub fn dominated_by(values: Array2<T>, labels: &LogicalLabelMatrix) -> Result<Self> {
        let d = Self::new(values)?;
        d.check_dominated_by(labels)?;
        Ok(d)
    }

    pub fn check_dominated_by(&self, labels: &LogicalLabelMatrix) -> Result<()> {
        if self.values.dim() != labels.dim() {
            return Err(Error::ShapeMismatch { left: self.values.dim(), right: labels.dim() });
        }
        for ((row, col), &v) in self.values.indexed_iter() {
            if v > T::from(labels.values[[row, col]]).unwrap() {
                return Err(Error::DominanceViolation { row, col });
            }
        }
        Ok(())
    }

    pub(crate) fn from_unchecked(values: Array2<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_labels(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self { values: self.values.select(Axis(0), indices) }
    }

    pub fn into_inner(self) -> Array2<T> {
        self.values
    }
}

/// `m x c` weights of the softmax predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    values: Array2<T>,
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        check_finite(values.view())?;
        Ok(Self { values })
    }

    pub fn zeros(m: usize, c: usize) -> Self {
        Self { values: Array2::zeros((m, c)) }
    }

    /// Rectangular identity: ones on the main diagonal up to `min(m, c)`.
    pub fn identity(m: usize, c: usize) -> Self {
        let mut values = Array2::zeros((m, c));
        for i in 0..m.min(c) {
            values[[i, i]] = T::one();
        }
        Self { values }
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.values
    }
}

/// RBF bandwidth policy for the kNN graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sigma {
    /// Median Euclidean length of the kNN edges (1 if that median is 0).
    #[default]
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for Sigma {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Sigma::Auto);
        }
        s.parse::<f64>()
            .map(Sigma::Fixed)
            .map_err(|e| format!("sigma must be a number or `auto`: {e}"))
    }
}

impl std::fmt::Display for Sigma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sigma::Auto => f.write_str("auto"),
            Sigma::Fixed(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    /// Weight of the graph smoothness term.
    pub alpha: f64,
    /// Weight of the squared Frobenius norm of the distributions.
    pub beta: f64,
    /// Weight of the squared Frobenius norm of the predictor weights.
    pub gamma: f64,
    pub k_neighbors: usize,
    pub sigma: Sigma,
    pub outer_iters: usize,
    /// Growth factor of the augmented Lagrangian penalty.
    pub rho: f64,
    pub tau_init: f64,
    pub tau_max: f64,
    /// Stop once the max-abs gap between the auxiliary copy and the distributions is this small.
    pub admm_tol: f64,
    pub admm_max_iters: usize,
    pub qp_tol: f64,
    pub d_inner_iters: usize,
    pub d_step_tol: f64,
    pub w_grad_tol: f64,
    pub w_max_iters: usize,
    /// Relative change of the joint objective that ends the outer alternation early.
    pub outer_rel_tol: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 1e-2,
            beta: 1e-2,
            gamma: 1e-2,
            k_neighbors: 20,
            sigma: Sigma::Auto,
            outer_iters: 5,
            rho: 1.2,
            tau_init: 1e-3,
            tau_max: 2e-3,
            admm_tol: 1e-3,
            admm_max_iters: 500,
            qp_tol: 1e-9,
            d_inner_iters: 50,
            d_step_tol: 1e-6,
            w_grad_tol: 1e-5,
            w_max_iters: 200,
            outer_rel_tol: 1e-6,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(what.to_string()));
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !nonneg(self.alpha) || !nonneg(self.beta) || !nonneg(self.gamma) {
            return bad("alpha, beta and gamma must be finite and nonnegative");
        }
        if self.k_neighbors == 0 {
            return bad("k_neighbors must be positive");
        }
        if let Sigma::Fixed(s) = self.sigma {
            if !pos(s) {
                return Err(Error::SigmaNonPositive);
            }
        }
        if self.outer_iters == 0 || self.admm_max_iters == 0 || self.d_inner_iters == 0 {
            return bad("iteration counts must be positive");
        }
        if self.w_max_iters == 0 {
            return bad("w_max_iters must be positive");
        }
        if !(self.rho.is_finite() && self.rho > 1.0) {
            return bad("rho must be greater than 1");
        }
        if !pos(self.tau_init) || !pos(self.tau_max) || self.tau_max < self.tau_init {
            return bad("need 0 < tau_init <= tau_max");
        }
        for (name, v) in [
            ("admm_tol", self.admm_tol),
            ("qp_tol", self.qp_tol),
            ("d_step_tol", self.d_step_tol),
            ("w_grad_tol", self.w_grad_tol),
            ("outer_rel_tol", self.outer_rel_tol),
        ] {
            if !pos(v) {
                return bad(&format!("{name} must be positive"));
            }
        }
        Ok(())
    }
}

/// Checks a raw feature/label pair and returns it wrapped in validated types.
pub fn validate_dataset<T: Scalar>(
    x: Array2<T>,
    y: Array2<u8>,
) -> Result<(FeatureMatrix<T>, LogicalLabelMatrix)> {
    if x.nrows() != y.nrows() {
        return Err(Error::RowCountMismatch { features: x.nrows(), labels: y.nrows() });
    }
    let x = FeatureMatrix::new(x)?;
    let y = LogicalLabelMatrix::new(y)?;
    Ok((x, y))
}

/// True iff `0 <= d_j <= y_j` for every `j` and `|sum(d) - 1| <= tol`.
pub fn row_is_distribution<T: Scalar>(d: &[T], y: &[u8], tol: T) -> Result<bool> {
    if d.len() != y.len() {
        return Err(Error::LengthMismatch { left: d.len(), right: y.len() });
    }
    let within = d
        .iter()
        .zip(y)
        .all(|(&dj, &yj)| dj >= T::zero() && dj <= T::from(yj).unwrap());
    let sum = d.iter().fold(T::zero(), |acc, &v| acc + v);
    Ok(within && (sum - T::one()).abs() <= tol)
}

pub(crate) fn check_finite<T: Scalar>(values: ArrayView2<'_, T>) -> Result<()> {
    match values.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, col), _)) => Err(Error::NonFiniteEntry { row, col }),
        None => Ok(()),
    }
}

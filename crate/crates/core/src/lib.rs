//! Learning label distributions directly from logical (0/1) multi-label annotations.
//!
//! A softmax predictor `P = softmax(X W)` and the training label distributions `D` are
//! fitted jointly by minimizing
//!
//! ```text
//! KL(D, P) + alpha tr(D^T G D) + beta |D|_F^2 + gamma |W|_F^2
//! s.t. 0 <= D <= Y, D 1 = 1
//! ```
//!
//! where `G` is the Laplacian of a kNN similarity graph over the features. Every numeric
//! routine is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix `f64`.

pub mod data;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod objective;
pub mod scalar;
pub mod solver;

pub use data::{
    row_is_distribution, validate_dataset, FeatureMatrix, HyperParams, LabelDistributionMatrix,
    LogicalLabelMatrix, Sigma, WeightMatrix,
};
pub use error::{Error, Result};
pub use metrics::{MetricReport, OneErrorVariant};
pub use scalar::Scalar;
pub use solver::{fit, predict_unseen, FitResult};

pub type Features = FeatureMatrix<f64>;
pub type Distributions = LabelDistributionMatrix<f64>;
pub type Weights = WeightMatrix<f64>;
pub type Laplacian = graph::LaplacianMatrix<f64>;
pub type Similarity = graph::SimilarityMatrix<f64>;
pub type Predictions = objective::PredictionMatrix<f64>;
pub type Objective = objective::ObjectiveBreakdown<f64>;
pub type Fit = FitResult<f64>;

pub type Features32 = FeatureMatrix<f32>;
pub type Distributions32 = LabelDistributionMatrix<f32>;
pub type Weights32 = WeightMatrix<f32>;
pub type Fit32 = FitResult<f32>;

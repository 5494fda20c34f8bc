//! Logical-label generation and train/validation/test splitting.

use dldl::{Distributions, LogicalLabelMatrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LdlDataset;
use crate::error::{HarnessError, Result};

/// Default binarization threshold.
pub const DEFAULT_DELTA: f64 = 0.01;

/// `Y_ij = 1` iff `D_ij > delta`.
pub fn binarize(d: &Distributions, delta: f64) -> Result<LogicalLabelMatrix> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HarnessError::InvalidArgument(format!("delta must be in (0, 1), got {delta}")));
    }
    let y = d.values().mapv(|v| u8::from(v > delta));
    if let Some(i) = y.outer_iter().position(|row| row.iter().all(|&v| v == 0)) {
        return Err(HarnessError::AllZeroAfterThreshold(i));
    }
    Ok(LogicalLabelMatrix::new(y)?)
}

/// Attaches logical labels thresholded from the dataset's ground truth.
pub fn with_binarized_labels(ds: &LdlDataset, delta: f64) -> Result<LdlDataset> {
    let y = binarize(ds.require_truth()?, delta)?;
    Ok(LdlDataset { y: Some(y), ..ds.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self { train_frac: 0.6, val_frac: 0.2, test_frac: 0.2, seed }
    }

    /// `(floor(train_frac n), floor(val_frac n), remainder)`.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(*f > 0.0)) || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(HarnessError::InvalidArgument("split fractions must be positive and sum to 1".into()));
        }
        if n < 5 {
            return Err(HarnessError::TooFewSamples(n));
        }
        let floor = |f: f64| (f * n as f64 + 1e-9).floor() as usize;
        let train = floor(self.train_frac);
        let val = floor(self.val_frac);
        let test = n - train - val;
        if train == 0 || val == 0 || test == 0 {
            return Err(HarnessError::TooFewSamples(n));
        }
        Ok((train, val, test))
    }

    /// Seeded permutation cut into contiguous train, validation, and test index blocks.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let (train, val, _) = self.sizes(n)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let test = order.split_off(train + val);
        let val = order.split_off(train);
        Ok((order, val, test))
    }
}

pub fn split(ds: &LdlDataset, spec: &SplitSpec) -> Result<(LdlDataset, LdlDataset, LdlDataset)> {
    let (tr, va, te) = spec.indices(ds.n_samples())?;
    Ok((
        ds.select(&tr, format!("{}-train", ds.name))?,
        ds.select(&va, format!("{}-val", ds.name))?,
        ds.select(&te, format!("{}-test", ds.name))?,
    ))
}

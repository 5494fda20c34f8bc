//! Synthetic datasets with clustered features and softmax-linear ground truth.

use dldl::{Distributions, Features};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::LdlDataset;
use crate::error::{HarnessError, Result};

const FEATURE_NOISE: f64 = 0.1;
const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub m: usize,
    pub c: usize,
    pub n_clusters: usize,
    pub temperature: f64,
    /// Degrees below this are zeroed and rows renormalized; 0 disables.
    pub sparsify_delta: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(n: usize, m: usize, c: usize, seed: u64) -> Self {
        Self { n, m, c, n_clusters: 5.min(n), temperature: 1.0, sparsify_delta: 0.01, seed }
    }
}

fn softmax_row(logits: &Array1<f64>, temperature: f64) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let e = logits.mapv(|v| ((v - max) / temperature).exp());
    let z = e.sum();
    e / z
}

/// Cluster centers uniform in `[-1, 1]^m`, features = center + N(0, 0.1^2) noise, ground truth
/// = `softmax(x W* / temperature)` with standard normal `W*`, optionally sparsified.
pub fn synth_dataset(spec: &SynthSpec) -> Result<LdlDataset> {
    let SynthSpec { n, m, c, n_clusters, temperature, sparsify_delta, seed } = *spec;
    if n < 2 || m < 1 || c < 2 || n_clusters == 0 || n_clusters > n {
        return Err(HarnessError::InvalidArgument(format!(
            "need n >= 2, m >= 1, c >= 2 and 1 <= n_clusters <= n (got n={n}, m={m}, c={c}, clusters={n_clusters})"
        )));
    }
    if !(temperature > 0.0 && temperature.is_finite()) || !(sparsify_delta >= 0.0) {
        return Err(HarnessError::InvalidArgument("temperature must be positive, sparsify_delta >= 0".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = Array2::from_shape_fn((n_clusters, m), |_| rng.random_range(-1.0..=1.0));
    let w_star = Array2::from_shape_fn((m, c), |_| StandardNormal.sample(&mut rng));
    let noise = Normal::new(0.0, FEATURE_NOISE).expect("valid normal");

    let mut x = Array2::zeros((n, m));
    let mut d = Array2::zeros((n, c));
    for i in 0..n {
        let cluster = rng.random_range(0..n_clusters);
        let mut accepted = false;
        for _ in 0..MAX_RESAMPLES {
            let xi: Array1<f64> = centers.row(cluster).mapv(|v| v + noise.sample(&mut rng));
            let mut di = softmax_row(&xi.dot(&w_star), temperature);
            if sparsify_delta > 0.0 {
                di.mapv_inplace(|v| if v < sparsify_delta { 0.0 } else { v });
                let s = di.sum();
                if s <= 0.0 {
                    continue;
                }
                di /= s;
            }
            x.row_mut(i).assign(&xi);
            d.row_mut(i).assign(&di);
            accepted = true;
            break;
        }
        if !accepted {
            return Err(HarnessError::DegenerateRow(i));
        }
    }

    Ok(LdlDataset {
        name: format!("synth-n{n}-m{m}-c{c}-s{seed}"),
        x: Features::new(x)?,
        d_true: Some(Distributions::new(d)?),
        y: None,
    })
}

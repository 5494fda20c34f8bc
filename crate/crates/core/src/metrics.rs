//! Distribution comparison metrics, method ranking, and the row-normalized baseline.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{LabelDistributionMatrix, LogicalLabelMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::uniform_over_positives;

/// How one-error judges the top predicted label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OneErrorVariant {
    /// Top predicted label differs from the top true label.
    #[serde(rename = "top1-mismatch")]
    Top1Mismatch,
    /// Top predicted label has zero true degree.
    #[default]
    #[serde(rename = "top1-irrelevant")]
    Top1Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Chebyshev,
    Clark,
    OneError,
    Intersection,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Chebyshev, Metric::Clark, Metric::OneError, Metric::Intersection];

    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Intersection)
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Chebyshev => "chebyshev",
            Metric::Clark => "clark",
            Metric::OneError => "one_error",
            Metric::Intersection => "intersection",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "chebyshev" => Ok(Metric::Chebyshev),
            "clark" => Ok(Metric::Clark),
            "one_error" => Ok(Metric::OneError),
            "intersection" => Ok(Metric::Intersection),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub chebyshev: f64,
    pub clark: f64,
    pub one_error: f64,
    pub intersection: f64,
    pub n_instances: usize,
    pub one_error_variant: OneErrorVariant,
}

impl MetricReport {
    pub fn compute<T: Scalar>(
        truth: ArrayView2<'_, T>,
        pred: ArrayView2<'_, T>,
        variant: OneErrorVariant,
    ) -> Result<Self> {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        Ok(Self {
            chebyshev: f(chebyshev(truth, pred)?),
            clark: f(clark(truth, pred)?),
            one_error: f(one_error(truth, pred, variant)?),
            intersection: f(intersection(truth, pred)?),
            n_instances: truth.nrows(),
            one_error_variant: variant,
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Chebyshev => self.chebyshev,
            Metric::Clark => self.clark,
            Metric::OneError => self.one_error,
            Metric::Intersection => self.intersection,
        }
    }
}

fn mean_over_rows<T: Scalar>(
    truth: ArrayView2<'_, T>,
    pred: ArrayView2<'_, T>,
    per_row: impl Fn(ArrayView1<'_, T>, ArrayView1<'_, T>) -> T,
) -> Result<T> {
    if truth.dim() != pred.dim() {
        return Err(Error::ShapeMismatch { left: truth.dim(), right: pred.dim() });
    }
    if truth.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    let total = truth
        .outer_iter()
        .zip(pred.outer_iter())
        .fold(T::zero(), |acc, (d, p)| acc + per_row(d, p));
    Ok(total / T::from_count(truth.nrows()))
}

/// Mean over rows of `max_j |d_j - p_j|`.
pub fn chebyshev<T: Scalar>(truth: ArrayView2<'_, T>, pred: ArrayView2<'_, T>) -> Result<T> {
    mean_over_rows(truth, pred, |d, p| {
        d.iter().zip(p.iter()).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    })
}

/// Mean over rows of `sqrt(sum_j (d_j - p_j)^2 / (d_j + p_j)^2)`; `0/0` terms count as 0.
pub fn clark<T: Scalar>(truth: ArrayView2<'_, T>, pred: ArrayView2<'_, T>) -> Result<T> {
    mean_over_rows(truth, pred, |d, p| {
        d.iter()
            .zip(p.iter())
            .fold(T::zero(), |acc, (&a, &b)| {
                let s = a + b;
                if s == T::zero() {
                    acc
                } else {
                    acc + (a - b) * (a - b) / (s * s)
                }
            })
            .sqrt()
    })
}

/// Mean over rows of `sum_j min(d_j, p_j)`.
pub fn intersection<T: Scalar>(truth: ArrayView2<'_, T>, pred: ArrayView2<'_, T>) -> Result<T> {
    mean_over_rows(truth, pred, |d, p| {
        d.iter().zip(p.iter()).fold(T::zero(), |acc, (&a, &b)| acc + a.min(b))
    })
}

/// Index of the first maximum.
fn argmax<T: Scalar>(row: ArrayView1<'_, T>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

pub fn one_error<T: Scalar>(
    truth: ArrayView2<'_, T>,
    pred: ArrayView2<'_, T>,
    variant: OneErrorVariant,
) -> Result<T> {
    mean_over_rows(truth, pred, |d, p| {
        let top = argmax(p);
        let miss = match variant {
            OneErrorVariant::Top1Mismatch => top != argmax(d),
            OneErrorVariant::Top1Irrelevant => d[top] == T::zero(),
        };
        if miss {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Row-normalized logical labels: uniform over each row's positive labels.
pub fn baseline_recover<T: Scalar>(y: &LogicalLabelMatrix) -> LabelDistributionMatrix<T> {
    uniform_over_positives(y)
}

/// Per-metric ranks (1 = best, ties share their mean rank) and the average rank per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub methods: Vec<String>,
    pub chebyshev: Vec<f64>,
    pub clark: Vec<f64>,
    pub one_error: Vec<f64>,
    pub intersection: Vec<f64>,
    pub average: Vec<f64>,
}

impl Ranking {
    pub fn get(&self, metric: Metric) -> &[f64] {
        match metric {
            Metric::Chebyshev => &self.chebyshev,
            Metric::Clark => &self.clark,
            Metric::OneError => &self.one_error,
            Metric::Intersection => &self.intersection,
        }
    }
}

fn mean_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let key = |i: usize| if higher_is_better { -values[i] } else { values[i] };
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && key(order[end]) == key(order[start]) {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn rank_methods(reports: &[(String, MetricReport)]) -> Result<Ranking> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let column = |m: Metric| {
        let vals: Vec<f64> = reports.iter().map(|(_, r)| r.get(m)).collect();
        mean_ranks(&vals, m.higher_is_better())
    };
    let chebyshev = column(Metric::Chebyshev);
    let clark = column(Metric::Clark);
    let one_error = column(Metric::OneError);
    let intersection = column(Metric::Intersection);
    let average = (0..reports.len())
        .map(|i| (chebyshev[i] + clark[i] + one_error[i] + intersection[i]) / 4.0)
        .collect();
    Ok(Ranking {
        methods: reports.iter().map(|(name, _)| name.clone()).collect(),
        chebyshev,
        clark,
        one_error,
        intersection,
        average,
    })
}

//! kNN similarity graph and its Laplacian.

use ndarray::{Array2, ArrayView2};

use crate::data::{FeatureMatrix, Sigma};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SYMMETRY_TOL: f64 = 1e-10;

/// `n x n` nonnegative similarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    values: Array2<T>,
    symmetric: bool,
}

impl<T: Scalar> SimilarityMatrix<T> {
    /// Wraps a user supplied matrix. Entries must lie in `[0, 1]` with a zero diagonal.
    pub fn new(values: Array2<T>) -> Result<Self> {
        let (n, n2) = values.dim();
        if n != n2 {
            return Err(Error::DimensionMismatch(format!("similarity matrix is {n}x{n2}")));
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !(v >= T::zero() && v <= T::one()) || (i == j && v != T::zero()) {
                return Err(Error::InvalidShape(format!("similarity entry ({i}, {j}) out of range")));
            }
        }
        let symmetric = max_asymmetry(values.view()) <= T::lit(SYMMETRY_TOL);
        Ok(Self { values, symmetric })
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrized(&self) -> Self {
        let half = T::lit(0.5);
        let values = (&self.values + &self.values.t()) * half;
        Self { values, symmetric: true }
    }
}

/// `n x n` graph Laplacian `diag(rowsum(A)) - A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix<T> {
    values: Array2<T>,
}

impl<T: Scalar> LaplacianMatrix<T> {
    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Directed kNN RBF similarities: row `i` holds `exp(-|x_i - x_j|^2 / (2 sigma^2))` for the
/// `k` nearest `j != i`, zero elsewhere. Distance ties go to the lower index.
pub fn knn_similarity_directed<T: Scalar>(
    x: &FeatureMatrix<T>,
    k: usize,
    sigma: Sigma,
) -> Result<SimilarityMatrix<T>> {
    let n = x.n_samples();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    if let Sigma::Fixed(s) = sigma {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::SigmaNonPositive);
        }
    }

    let sq = pairwise_sq_distances(x.values());
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| sq[[i, a]].partial_cmp(&sq[[i, b]]).unwrap().then(a.cmp(&b)));
        neighbors.push(order[..k].to_vec());
    }

    let sigma = match sigma {
        Sigma::Fixed(s) => T::lit(s),
        Sigma::Auto => {
            let mut edges: Vec<T> = neighbors
                .iter()
                .enumerate()
                .flat_map(|(i, nb)| nb.iter().map(move |&j| (i, j)))
                .map(|(i, j)| sq[[i, j]].sqrt())
                .collect();
            let med = median(&mut edges);
            if med > T::zero() {
                med
            } else {
                T::one()
            }
        }
    };

    let denom = T::lit(2.0) * sigma * sigma;
    let mut values = Array2::zeros((n, n));
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            values[[i, j]] = (-sq[[i, j]] / denom).exp();
        }
    }
    Ok(SimilarityMatrix { values, symmetric: false })
}

/// Symmetrized kNN RBF similarity matrix used to build the Laplacian.
pub fn knn_similarity<T: Scalar>(
    x: &FeatureMatrix<T>,
    k: usize,
    sigma: Sigma,
) -> Result<SimilarityMatrix<T>> {
    Ok(knn_similarity_directed(x, k, sigma)?.symmetrized())
}

pub fn laplacian<T: Scalar>(a: &SimilarityMatrix<T>) -> Result<LaplacianMatrix<T>> {
    let asym = max_asymmetry(a.values());
    if asym > T::lit(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric(asym.to_f64().unwrap_or(f64::NAN)));
    }
    let mut g = a.values.mapv(|v| -v);
    for (i, row) in a.values.outer_iter().enumerate() {
        g[[i, i]] = g[[i, i]] + row.sum();
    }
    Ok(LaplacianMatrix { values: g })
}

/// Laplacian of the symmetrized kNN graph of `x`.
pub fn build_laplacian<T: Scalar>(
    x: &FeatureMatrix<T>,
    k: usize,
    sigma: Sigma,
) -> Result<LaplacianMatrix<T>> {
    laplacian(&knn_similarity(x, k, sigma)?)
}

/// `tr(D^T G D)`.
pub fn smoothness<T: Scalar>(d: ArrayView2<'_, T>, g: &LaplacianMatrix<T>) -> Result<T> {
    if g.n() != d.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Laplacian is {0}x{0} but D has {1} rows",
            g.n(),
            d.nrows()
        )));
    }
    let gd = g.values.dot(&d);
    Ok(d.iter().zip(gd.iter()).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
}

fn pairwise_sq_distances<T: Scalar>(x: ArrayView2<'_, T>) -> Array2<T> {
    let n = x.nrows();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = x
                .row(i)
                .iter()
                .zip(x.row(j).iter())
                .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
            out[[i, j]] = d;
            out[[j, i]] = d;
        }
    }
    out
}

fn max_asymmetry<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n.min(a.ncols()) {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

fn median<T: Scalar>(v: &mut [T]) -> T {
    if v.is_empty() {
        return T::zero();
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) * T::lit(0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn fm(v: Array2<f64>) -> FeatureMatrix<f64> {
        FeatureMatrix::new(v).unwrap()
    }

    #[test]
    fn identical_points_have_unit_similarity() {
        let x = fm(array![[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]]);
        let a = knn_similarity(&x, 1, Sigma::Fixed(1.0)).unwrap();
        assert_eq!(a.values()[[0, 1]], 1.0);
        assert_eq!(a.values()[[1, 0]], 1.0);
    }

    #[test]
    fn sqrt_two_distance_gives_exp_minus_one() {
        let x = fm(array![[0.0, 0.0], [1.0, 1.0]]);
        let a = knn_similarity(&x, 1, Sigma::Fixed(1.0)).unwrap();
        assert_abs_diff_eq!(a.values()[[0, 1]], (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(a.values()[[0, 1]], 0.36788, epsilon = 1e-5);
        assert_eq!(a.values()[[0, 0]], 0.0);
    }

    #[test]
    fn k_and_sigma_are_checked() {
        let x = fm(array![[0.0], [1.0], [2.0]]);
        assert_eq!(knn_similarity(&x, 3, Sigma::Auto), Err(Error::KTooLarge { k: 3, n: 3 }));
        assert_eq!(knn_similarity(&x, 1, Sigma::Fixed(0.0)), Err(Error::SigmaNonPositive));
    }

    #[test]
    fn ties_go_to_lower_index() {
        // Points 0 and 2 are equidistant from point 1.
        let x = fm(array![[0.0], [1.0], [2.0]]);
        let a = knn_similarity_directed(&x, 1, Sigma::Fixed(1.0)).unwrap();
        assert!(a.values()[[1, 0]] > 0.0);
        assert_eq!(a.values()[[1, 2]], 0.0);
    }

    #[test]
    fn auto_sigma_uses_median_edge_length() {
        // 1-NN edges: 0->1 (1), 1->0 (1), 2->1 (3). Median 1.
        let x = fm(array![[0.0], [1.0], [4.0]]);
        let auto = knn_similarity_directed(&x, 1, Sigma::Auto).unwrap();
        let fixed = knn_similarity_directed(&x, 1, Sigma::Fixed(1.0)).unwrap();
        assert_eq!(auto, fixed);
    }

    #[test]
    fn auto_sigma_falls_back_to_one_for_duplicates() {
        let x = fm(array![[3.0], [3.0], [3.0]]);
        let a = knn_similarity(&x, 1, Sigma::Auto).unwrap();
        assert!(a.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn laplacian_examples() {
        let a = SimilarityMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let g = laplacian(&a).unwrap();
        assert_eq!(g.values(), array![[1.0, -1.0], [-1.0, 1.0]].view());

        let z = SimilarityMatrix::new(Array2::<f64>::zeros((3, 3))).unwrap();
        assert!(laplacian(&z).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn asymmetric_similarity_is_rejected() {
        let a = SimilarityMatrix::new(array![[0.0, 1.0], [0.5, 0.0]]).unwrap();
        assert!(!a.is_symmetric());
        assert!(matches!(laplacian(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn smoothness_two_node_example() {
        let a = SimilarityMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let g = laplacian(&a).unwrap();
        let d = array![[1.0, 0.0], [0.0, 1.0]];
        assert_abs_diff_eq!(smoothness(d.view(), &g).unwrap(), 2.0, epsilon = 1e-15);

        let same = array![[0.3, 0.7], [0.3, 0.7]];
        assert_abs_diff_eq!(smoothness(same.view(), &g).unwrap(), 0.0, epsilon = 1e-15);

        let bad = array![[1.0, 0.0]];
        assert!(matches!(smoothness(bad.view(), &g), Err(Error::DimensionMismatch(_))));
    }
}

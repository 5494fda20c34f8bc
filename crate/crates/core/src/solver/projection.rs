//! Euclidean projection onto the capped simplex `{b : 0 <= b <= y, sum(b) = 1}`.

use ndarray::{Array2, ArrayView2, ArrayViewMut1, Zip};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_BISECTIONS: usize = 200;

/// Projects `v` onto `{b : 0 <= b_j <= y_j, sum_j b_j = 1}`.
///
/// The minimizer has the form `b_j = clamp(v_j - lambda, 0, 1)` on coordinates with `y_j = 1`
/// and `b_j = 0` elsewhere. `lambda` is bracketed and bisected until the mass is within `tol`
/// of one, then recomputed in closed form from the identified active set.
pub fn capped_simplex_project<T: Scalar>(v: &[T], y: &[u8], tol: T) -> Result<Vec<T>> {
    if v.len() != y.len() {
        return Err(Error::LengthMismatch { left: v.len(), right: y.len() });
    }
    let mut out = v.to_vec();
    project_in_place(ArrayViewMut1::from(out.as_mut_slice()), y.iter().copied(), tol)?;
    Ok(out)
}

/// In-place variant used by the row-wise B update.
pub(crate) fn project_in_place<T: Scalar>(
    mut v: ArrayViewMut1<'_, T>,
    y: impl Iterator<Item = u8> + Clone,
    tol: T,
) -> Result<()> {
    let active: Vec<bool> = y.map(|yj| yj != 0).collect();
    let n_active = active.iter().filter(|&&a| a).count();
    if n_active == 0 {
        return Err(Error::InfeasibleCap { row: None });
    }
    if n_active == 1 {
        for (vj, &a) in v.iter_mut().zip(&active) {
            *vj = if a { T::one() } else { T::zero() };
        }
        return Ok(());
    }

    let coords: Vec<T> = v.iter().zip(&active).filter(|(_, &a)| a).map(|(&x, _)| x).collect();
    let mass = |lambda: T| {
        coords
            .iter()
            .fold(T::zero(), |acc, &x| acc + (x - lambda).max(T::zero()).min(T::one()))
    };

    let (mut lo, mut hi) = coords.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    // mass(lo) = n_active >= 1, mass(hi) = 0
    lo = lo - T::one();
    let two = T::lit(2.0);
    let mut lambda = (lo + hi) / two;
    for _ in 0..MAX_BISECTIONS {
        lambda = (lo + hi) / two;
        let excess = mass(lambda) - T::one();
        if excess.abs() <= tol.max(T::epsilon() * T::from_count(4 * coords.len())) {
            break;
        }
        if excess > T::zero() {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }

    // Closed-form shift for the active set found by bisection.
    let (mut interior_sum, mut n_interior, mut n_upper) = (T::zero(), 0usize, 0usize);
    for &x in &coords {
        let b = x - lambda;
        if b >= T::one() {
            n_upper += 1;
        } else if b > T::zero() {
            interior_sum = interior_sum + x;
            n_interior += 1;
        }
    }
    if n_interior > 0 {
        lambda = (interior_sum + T::from_count(n_upper) - T::one()) / T::from_count(n_interior);
    }

    for (vj, &a) in v.iter_mut().zip(&active) {
        *vj = if a { (*vj - lambda).max(T::zero()).min(T::one()) } else { T::zero() };
    }

    // Spread the last rounding residue over the strictly interior coordinates.
    let total = v.sum();
    let free = v.iter().filter(|&&b| b > T::zero() && b < T::one()).count();
    if free > 0 && total != T::one() {
        let shift = (T::one() - total) / T::from_count(free);
        for vj in v.iter_mut() {
            if *vj > T::zero() && *vj < T::one() {
                *vj = (*vj + shift).max(T::zero()).min(T::one());
            }
        }
    }
    Ok(())
}

/// Minimizes `<Phi, B - D> + tau/2 |B - D|_F^2` over row-wise capped simplices.
///
/// Completing the square gives the target `D - Phi / tau`, and the constraints separate by
/// row, so each row is an independent projection.
pub fn update_b<T: Scalar>(
    d: ArrayView2<'_, T>,
    phi: ArrayView2<'_, T>,
    tau: T,
    y: ArrayView2<'_, u8>,
    tol: T,
) -> Result<Array2<T>> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidParam("tau must be positive".into()));
    }
    if d.dim() != phi.dim() {
        return Err(Error::ShapeMismatch { left: d.dim(), right: phi.dim() });
    }
    if d.dim() != y.dim() {
        return Err(Error::ShapeMismatch { left: d.dim(), right: y.dim() });
    }
    let mut b = Array2::zeros(d.dim());
    Zip::from(&mut b).and(d).and(phi).for_each(|bij, &dij, &phij| *bij = dij - phij / tau);
    for (i, (row, yrow)) in b.outer_iter_mut().zip(y.outer_iter()).enumerate() {
        project_in_place(row, yrow.iter().copied(), tol).map_err(|e| match e {
            Error::InfeasibleCap { .. } => Error::InfeasibleCap { row: Some(i) },
            other => other,
        })?;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn proj(v: &[f64], y: &[u8]) -> Vec<f64> {
        capped_simplex_project(v, y, 1e-9).unwrap()
    }

    #[test]
    fn feasible_point_is_fixed() {
        assert_eq!(proj(&[0.5, 0.5], &[1, 1]), vec![0.5, 0.5]);
    }

    #[test]
    fn vertex_projection() {
        let b = proj(&[2.0, 0.0], &[1, 1]);
        assert_abs_diff_eq!(b[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn capped_coordinate_is_exactly_zero() {
        let b = proj(&[0.6, 0.6, 0.6], &[1, 1, 0]);
        assert_abs_diff_eq!(b[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1], 0.5, epsilon = 1e-12);
        assert_eq!(b[2], 0.0);
    }

    #[test]
    fn single_positive_label() {
        assert_eq!(proj(&[-3.0, 7.0, 0.2], &[0, 0, 1]), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn infeasible_cap() {
        assert_eq!(
            capped_simplex_project(&[0.1, 0.2], &[0, 0], 1e-9),
            Err(Error::InfeasibleCap { row: None })
        );
    }

    #[test]
    fn sums_to_one_tightly() {
        let b = proj(&[0.31, -0.2, 0.77, 0.05, 0.4], &[1, 1, 1, 0, 1]);
        assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        assert_eq!(b[3], 0.0);
        assert!(b.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn works_in_single_precision() {
        let b = capped_simplex_project(&[0.9f32, 0.3, 0.1], &[1, 1, 1], 1e-6).unwrap();
        assert!((b.iter().sum::<f32>() - 1.0).abs() <= 1e-6);
        assert!((b[0] - 0.8).abs() < 1e-6 && (b[1] - 0.2).abs() < 1e-6 && b[2] == 0.0);
    }

    #[test]
    fn update_b_examples() {
        let d = array![[0.2, 0.8, 0.0], [1.0, 0.0, 0.0]];
        let y = array![[1u8, 1, 0], [1, 0, 1]];
        let b = update_b(d.view(), Array2::zeros((2, 3)).view(), 0.001, y.view(), 1e-9).unwrap();
        for (a, e) in b.iter().zip(d.iter()) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-15);
        }

        let tau = 0.001;
        let d = array![[0.7, 0.3]];
        let phi = array![[tau * 0.2, -tau * 0.2]];
        let b = update_b(d.view(), phi.view(), tau, array![[1u8, 1]].view(), 1e-9).unwrap();
        assert_abs_diff_eq!(b[[0, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b[[0, 1]], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn update_b_reports_row() {
        let d = array![[0.5, 0.5], [0.5, 0.5]];
        let y = array![[1u8, 1], [0, 0]];
        assert_eq!(
            update_b(d.view(), Array2::zeros((2, 2)).view(), 1.0, y.view(), 1e-9),
            Err(Error::InfeasibleCap { row: Some(1) })
        );
    }
}

//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use dldl::graph::{laplacian, LaplacianMatrix, SimilarityMatrix};
use dldl::objective::DSubproblem;
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Euclidean projection onto `{b : 0 <= b <= y, sum b = 1}` by enumerating which positive
/// coordinates sit at 0, at 1, or strictly between, keeping the best feasible candidate.
pub fn qp_project_oracle(v: &[f64], y: &[u8]) -> Vec<f64> {
    let pos: Vec<usize> = (0..v.len()).filter(|&j| y[j] == 1).collect();
    assert!(!pos.is_empty());
    let patterns = 3usize.pow(pos.len() as u32);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..patterns {
        let mut state = vec![0u8; pos.len()];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = pos.iter().zip(&state).filter(|(_, &s)| s == 2).map(|(&j, _)| j).collect();
        let n_upper = state.iter().filter(|&&s| s == 1).count() as f64;
        let mut b = vec![0.0; v.len()];
        for (&j, &s) in pos.iter().zip(&state) {
            if s == 1 {
                b[j] = 1.0;
            }
        }
        if free.is_empty() {
            if n_upper != 1.0 {
                continue;
            }
        } else {
            let shift = (free.iter().map(|&j| v[j]).sum::<f64>() + n_upper - 1.0) / free.len() as f64;
            for &j in &free {
                b[j] = v[j] - shift;
            }
        }
        if b.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) {
            continue;
        }
        let cost: f64 = b.iter().zip(v).map(|(a, c)| (a - c) * (a - c)).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, b));
        }
    }
    best.expect("some pattern is feasible").1
}

/// Central difference of `f` along coordinate `idx` of `x`.
pub fn central_diff(x: &Array2<f64>, idx: (usize, usize), h: f64, f: impl Fn(ArrayView2<f64>) -> f64) -> f64 {
    let mut plus = x.clone();
    plus[idx] += h;
    let mut minus = x.clone();
    minus[idx] -= h;
    (f(plus.view()) - f(minus.view())) / (2.0 * h)
}

/// Directed kNN RBF similarities: `j` is a neighbour of `i` when fewer than `k` other points
/// come before it in (distance, index) order.
pub fn knn_oracle(x: ArrayView2<f64>, k: usize, sigma: f64) -> Array2<f64> {
    let n = x.nrows();
    let dist2 = |i: usize, j: usize| -> f64 {
        x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let dj = dist2(i, j);
            let ahead = (0..n)
                .filter(|&l| l != i && l != j)
                .filter(|&l| {
                    let dl = dist2(i, l);
                    dl < dj || (dl == dj && l < j)
                })
                .count();
            if ahead < k {
                a[[i, j]] = (-dj / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    a
}

/// `0.5 * sum_ij A_ij |d_i - d_j|^2`.
pub fn double_sum_smoothness(a: ArrayView2<f64>, d: ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let diff: f64 = d.row(i).iter().zip(d.row(j).iter()).map(|(p, q)| (p - q) * (p - q)).sum();
            s += a[[i, j]] * diff;
        }
    }
    0.5 * s
}

/// Softmax straight from the definition, without max subtraction.
pub fn naive_softmax(x: ArrayView2<f64>, w: ArrayView2<f64>) -> Array2<f64> {
    let mut p = Array2::zeros((x.nrows(), w.ncols()));
    for i in 0..x.nrows() {
        let mut z = 0.0;
        for j in 0..w.ncols() {
            let logit: f64 = (0..x.ncols()).map(|k| x[[i, k]] * w[[k, j]]).sum();
            p[[i, j]] = logit.exp();
            z += p[[i, j]];
        }
        for j in 0..w.ncols() {
            p[[i, j]] /= z;
        }
    }
    p
}

pub fn kl_oracle(d: ArrayView2<f64>, p: ArrayView2<f64>) -> f64 {
    let mut s = 0.0;
    for (a, b) in d.iter().zip(p.iter()) {
        if *a > 0.0 {
            s += a * (a / b).ln();
        }
    }
    s
}

pub fn frob_sq(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// `U(D)` summed term by term with explicit loops.
pub fn d_objective_oracle(d: ArrayView2<f64>, sub: &DSubproblem<'_, f64>, a: ArrayView2<f64>) -> f64 {
    let mut inner = 0.0;
    let mut penalty = 0.0;
    for ((dv, bv), fv) in d.iter().zip(sub.b.iter()).zip(sub.phi.iter()) {
        inner += fv * (bv - dv);
        penalty += (bv - dv) * (bv - dv);
    }
    kl_oracle(d, sub.p)
        + sub.alpha * double_sum_smoothness(a, d)
        + sub.beta * frob_sq(d)
        + inner
        + 0.5 * sub.tau * penalty
}

/// Minimizes a convex function of two variables on a box by repeated grid search, shrinking
/// the box around the best grid point each round.
pub fn grid_refine_2d(f: impl Fn(f64, f64) -> f64, mut lo: [f64; 2], mut hi: [f64; 2]) -> [f64; 2] {
    const STEPS: usize = 40;
    let mut best = [0.0; 2];
    while hi[0] - lo[0] > 1e-10 || hi[1] - lo[1] > 1e-10 {
        let step = [(hi[0] - lo[0]) / STEPS as f64, (hi[1] - lo[1]) / STEPS as f64];
        let mut fbest = f64::INFINITY;
        for a in 0..=STEPS {
            for b in 0..=STEPS {
                let p = [lo[0] + a as f64 * step[0], lo[1] + b as f64 * step[1]];
                let v = f(p[0], p[1]);
                if v < fbest {
                    fbest = v;
                    best = p;
                }
            }
        }
        for t in 0..2 {
            lo[t] = best[t] - 2.0 * step[t];
            hi[t] = best[t] + 2.0 * step[t];
        }
    }
    best
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

/// Logical labels with at least one positive per row.
pub fn random_labels(rng: &mut impl Rng, n: usize, c: usize, p_one: f64) -> Array2<u8> {
    let mut y = Array2::from_shape_fn((n, c), |_| u8::from(rng.random_bool(p_one)));
    for mut row in y.outer_iter_mut() {
        if row.iter().all(|&v| v == 0) {
            row[rng.random_range(0..c)] = 1;
        }
    }
    y
}

/// Random distribution rows supported on the positive labels, each degree at least `floor`.
pub fn random_feasible(rng: &mut impl Rng, y: ArrayView2<u8>, floor: f64) -> Array2<f64> {
    let mut d = Array2::zeros(y.dim());
    for (i, row) in y.outer_iter().enumerate() {
        let raw: Vec<f64> = row.iter().map(|&v| if v == 1 { rng.random_range(0.1..1.0) } else { 0.0 }).collect();
        let s: f64 = raw.iter().sum();
        let count = row.iter().filter(|&&v| v == 1).count() as f64;
        for (j, r) in raw.iter().enumerate() {
            if row[j] == 1 {
                d[[i, j]] = floor + (1.0 - count * floor) * r / s;
            }
        }
    }
    d
}

/// Random row-stochastic matrix with strictly positive entries.
pub fn random_distributions(rng: &mut impl Rng, n: usize, c: usize) -> Array2<f64> {
    let ones = Array2::from_elem((n, c), 1u8);
    random_feasible(rng, ones.view(), 0.0)
}

/// Random symmetric similarities in `[0, 1]` with a zero diagonal and roughly `density` fill.
pub fn random_similarity(rng: &mut impl Rng, n: usize, density: f64) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(density) {
                let v = rng.random_range(0.0..1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
    }
    a
}

pub fn random_laplacian(rng: &mut impl Rng, n: usize) -> (Array2<f64>, LaplacianMatrix<f64>) {
    let a = random_similarity(rng, n, 0.5);
    let g = laplacian(&SimilarityMatrix::new(a.clone()).unwrap()).unwrap();
    (a, g)
}

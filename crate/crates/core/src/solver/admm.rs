//! Augmented Lagrangian loop for the distribution block.
//!
//! `D` carries the KL, smoothness and norm terms and is updated by projected gradient
//! descent; the auxiliary copy `B` carries the feasibility constraints and is updated by
//! row-wise capped simplex projections; `Phi` is the multiplier of `B = D`.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use super::projection::update_b;
use crate::data::{HyperParams, LabelDistributionMatrix, LogicalLabelMatrix};
use crate::error::{Error, Result};
use crate::graph::LaplacianMatrix;
use crate::objective::LOG_FLOOR;
use crate::scalar::Scalar;

const INITIAL_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState<T> {
    pub d: Array2<T>,
    pub b: Array2<T>,
    pub phi: Array2<T>,
    pub tau: T,
    pub iteration: usize,
    /// `max |B - D|` after the latest B update.
    pub residual_inf: T,
}

impl<T: Scalar> AdmmState<T> {
    /// Starts from a feasible `D0` with `B = D0`, `Phi = 0`.
    pub fn new(d0: Array2<T>, tau: T) -> Self {
        let dim = d0.dim();
        Self {
            b: d0.clone(),
            d: d0,
            phi: Array2::zeros(dim),
            tau,
            iteration: 0,
            residual_inf: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DInnerReport {
    pub steps: usize,
    pub stalled: bool,
    /// Max-abs projected gradient over free entries at exit.
    pub grad_inf: f64,
    pub objective_in: f64,
    pub objective_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AdmmExit {
    Converged,
    MaxIterationsExceeded { residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmDiagnostics {
    pub iterations: usize,
    pub final_residual: f64,
    pub exit: AdmmExit,
    pub d_steps: usize,
    pub line_search_stalls: usize,
    /// Iteration whose `B` was returned; 0 means the starting point.
    pub returned_iteration: usize,
    pub objective_in: f64,
    pub objective_out: f64,
}

impl AdmmDiagnostics {
    pub fn converged(&self) -> bool {
        self.exit == AdmmExit::Converged
    }
}

/// Row-compressed `G + G^T`; kNN graphs leave most entries zero.
struct SparseSym<T> {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<T>,
}

impl<T: Scalar> SparseSym<T> {
    fn from_dense(a: &Array2<T>) -> Self {
        let mut ptr = vec![0];
        let (mut idx, mut val) = (Vec::new(), Vec::new());
        for row in a.outer_iter() {
            for (k, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    idx.push(k);
                    val.push(v);
                }
            }
            ptr.push(idx.len());
        }
        Self { ptr, idx, val }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.ptr[i]..self.ptr[i + 1];
        self.idx[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    /// `out = H x` for row-major `n × c` buffers.
    fn mul(&self, x: &[T], c: usize, out: &mut [T]) {
        match c {
            1 => self.mul_fixed::<1>(x, out),
            2 => self.mul_fixed::<2>(x, out),
            3 => self.mul_fixed::<3>(x, out),
            4 => self.mul_fixed::<4>(x, out),
            5 => self.mul_fixed::<5>(x, out),
            6 => self.mul_fixed::<6>(x, out),
            7 => self.mul_fixed::<7>(x, out),
            8 => self.mul_fixed::<8>(x, out),
            _ => {
                out.fill(T::zero());
                for (orow, span) in out.chunks_exact_mut(c).zip(self.ptr.windows(2)) {
                    let r = span[0]..span[1];
                    for (&k, &h) in self.idx[r.clone()].iter().zip(&self.val[r]) {
                        for (o, &xv) in orow.iter_mut().zip(&x[k * c..(k + 1) * c]) {
                            *o = *o + h * xv;
                        }
                    }
                }
            }
        }
    }

    fn mul_fixed<const C: usize>(&self, x: &[T], out: &mut [T]) {
        let (xrows, _) = x.as_chunks::<C>();
        let (orows, _) = out.as_chunks_mut::<C>();
        for (orow, span) in orows.iter_mut().zip(self.ptr.windows(2)) {
            let r = span[0]..span[1];
            let mut acc = [T::zero(); C];
            for (&k, &h) in self.idx[r.clone()].iter().zip(&self.val[r]) {
                let xrow = &xrows[k];
                for j in 0..C {
                    acc[j] = acc[j] + h * xrow[j];
                }
            }
            *orow = acc;
        }
    }
}

/// Precomputed pieces shared by every D step of one solve.
struct DContext<T> {
    c: usize,
    ln_p: Vec<T>,
    h: SparseSym<T>,
    h_dense: Array2<T>,
    free: Vec<bool>,
    alpha: T,
    beta: T,
}

impl<T: Scalar> DContext<T> {
    fn new(
        p: ArrayView2<'_, T>,
        g: &LaplacianMatrix<T>,
        y: &LogicalLabelMatrix,
        alpha: T,
        beta: T,
    ) -> Result<Self> {
        let dim = y.dim();
        if p.dim() != dim {
            return Err(Error::ShapeMismatch { left: p.dim(), right: dim });
        }
        if g.n() != dim.0 {
            return Err(Error::ShapeMismatch { left: dim, right: (g.n(), g.n()) });
        }
        let mut free = Vec::with_capacity(dim.0 * dim.1);
        let mut ln_p = Vec::with_capacity(dim.0 * dim.1);
        for ((row, col), &yv) in y.values().indexed_iter() {
            let pij = p[[row, col]];
            if yv != 0 && !(pij > T::zero()) {
                return Err(Error::NonPositivePrediction { row, col });
            }
            free.push(yv != 0);
            ln_p.push(if yv != 0 { pij.ln() } else { T::zero() });
        }
        let gv = g.values();
        let h_dense = &gv + &gv.t();
        let h = SparseSym::from_dense(&h_dense);
        Ok(Self { c: dim.1, ln_p, h, h_dense, free, alpha, beta })
    }

    /// `U(D)` given `hd = (G + G^T) D`, writing `ln D` of the free entries into `ln_d`.
    /// Pinned entries are zero and contribute only through the coupling terms.
    fn objective(&self, d: &[T], hd: &[T], b: &[T], phi: &[T], tau: T, ln_d: &mut [T]) -> T {
        let half = T::lit(0.5);
        let mut acc = T::zero();
        for k in 0..d.len() {
            let dk = d[k];
            if self.free[k] {
                let l = dk.ln();
                ln_d[k] = l;
                acc = acc + dk * (l - self.ln_p[k]) + self.alpha * half * dk * hd[k] + self.beta * dk * dk;
            }
            let gap = b[k] - dk;
            acc = acc + phi[k] * gap + tau * half * gap * gap;
        }
        acc
    }

    /// `KL(D, P) + alpha tr(D^T G D) + beta |D|_F^2`, the constrained problem the loop solves.
    fn block_objective(&self, d: &[T], scratch: &mut [T]) -> T {
        self.h.mul(d, self.c, scratch);
        let half = T::lit(0.5);
        let mut acc = T::zero();
        for k in 0..d.len() {
            let dk = d[k];
            if dk > T::zero() {
                acc = acc + dk * (dk.ln() - self.ln_p[k]) + self.alpha * half * dk * scratch[k] + self.beta * dk * dk;
            }
        }
        acc
    }
}

fn standardize<T: Scalar>(a: &mut Array2<T>) {
    if !a.is_standard_layout() {
        *a = a.as_standard_layout().into_owned();
    }
}

/// Projected gradient descent on `U(D)` with backtracking from a unit step.
///
/// Free entries (positive labels) are kept in `[1e-12, 1]`, pinned entries stay at exactly 0.
/// The returned iterate never has a larger `U` than the (clamped) input.
pub fn update_d_inner<T: Scalar>(
    state: &mut AdmmState<T>,
    p: ArrayView2<'_, T>,
    g: &LaplacianMatrix<T>,
    y: &LogicalLabelMatrix,
    alpha: T,
    beta: T,
    params: &HyperParams,
) -> Result<DInnerReport> {
    if state.d.dim() != y.dim() {
        return Err(Error::ShapeMismatch { left: state.d.dim(), right: y.dim() });
    }
    if state.b.dim() != y.dim() || state.phi.dim() != y.dim() {
        return Err(Error::ShapeMismatch { left: state.b.dim(), right: state.phi.dim() });
    }
    let ctx = DContext::new(p, g, y, alpha, beta)?;
    d_steps(&ctx, state, params)
}

fn d_steps<T: Scalar>(ctx: &DContext<T>, state: &mut AdmmState<T>, params: &HyperParams) -> Result<DInnerReport> {
    standardize(&mut state.d);
    standardize(&mut state.b);
    standardize(&mut state.phi);
    let c = ctx.c;
    let floor = T::lit(LOG_FLOOR);
    let one = T::one();
    let two = T::lit(2.0);
    let clamp = |v: T| v.max(floor).min(one);
    let tau = state.tau;
    let (alpha, beta) = (ctx.alpha, ctx.beta);

    let d = state.d.as_slice_mut().expect("standard layout");
    let b = state.b.as_slice().expect("standard layout");
    let phi = state.phi.as_slice().expect("standard layout");
    let len = d.len();
    for (dk, &f) in d.iter_mut().zip(&ctx.free) {
        *dk = if f { clamp(*dk) } else { T::zero() };
    }

    let tol = T::lit(params.d_step_tol);
    let mut hd = vec![T::zero(); len];
    ctx.h.mul(d, c, &mut hd);
    let mut ln_d = vec![T::zero(); len];
    let mut ln_trial = vec![T::zero(); len];
    let mut u = ctx.objective(d, &hd, b, phi, tau, &mut ln_d);
    let objective_in = u;
    let mut grad = vec![T::zero(); len];
    let mut hg = vec![T::zero(); len];
    let mut trial = vec![T::zero(); len];
    let mut clamped: Vec<(usize, T)> = Vec::new();
    let half_alpha = T::lit(0.5) * alpha;
    let half_tau = T::lit(0.5) * tau;
    let mut steps = 0;
    let mut stalled = false;
    let mut grad_inf = T::zero();
    let mut eta_start = T::lit(INITIAL_STEP);

    for _ in 0..params.d_inner_iters {
        grad_inf = T::zero();
        for k in 0..len {
            if !ctx.free[k] {
                grad[k] = T::zero();
                continue;
            }
            let dk = d[k];
            let gk = one + ln_d[k] - ctx.ln_p[k] + alpha * hd[k] + two * beta * dk - phi[k] + tau * (dk - b[k]);
            let blocked = (dk <= floor && gk > T::zero()) || (dk >= one && gk < T::zero());
            if blocked {
                grad[k] = T::zero();
            } else {
                grad[k] = gk;
                grad_inf = grad_inf.max(gk.abs());
            }
        }
        if grad_inf <= tol {
            break;
        }

        ctx.h.mul(&grad, c, &mut hg);
        let mut eta = eta_start;
        let mut accepted = None;
        while eta >= T::lit(MIN_STEP) {
            // Fused U(trial): H trial = (HD - eta Hg) + H c, where c holds the clamping corrections.
            clamped.clear();
            let mut acc = T::zero();
            for k in 0..len {
                let (t, gap);
                if ctx.free[k] {
                    let raw = d[k] - eta * grad[k];
                    t = clamp(raw);
                    if t != raw {
                        clamped.push((k, t - raw));
                    }
                    let l = if t == d[k] { ln_d[k] } else { t.ln() };
                    ln_trial[k] = l;
                    let hd_lin = hd[k] - eta * hg[k];
                    gap = b[k] - t;
                    acc = acc
                        + (t * (l - ctx.ln_p[k] + half_alpha * hd_lin + beta * t) + gap * (phi[k] + half_tau * gap));
                } else {
                    t = T::zero();
                    gap = b[k];
                    acc = acc + gap * (phi[k] + half_tau * gap);
                }
                trial[k] = t;
            }
            // sum_k t_k (H c)_k = sum_a c_a (H t)_a with (H t)_a = hd_lin_a + (H c)_a.
            for &(ka, ca) in &clamped {
                let (ia, ja) = (ka / c, ka % c);
                let mut hc = T::zero();
                for &(kb, cb) in &clamped {
                    if kb % c == ja {
                        hc = hc + ctx.h_dense[[ia, kb / c]] * cb;
                    }
                }
                acc = acc + half_alpha * ca * (hd[ka] - eta * hg[ka] + hc);
            }
            if acc < u {
                accepted = Some(acc);
                break;
            }
            eta = eta * T::lit(0.5);
        }
        match accepted {
            Some(u_new) => {
                d.copy_from_slice(&trial);
                for k in 0..len {
                    hd[k] = hd[k] - eta * hg[k];
                }
                for &(k, corr) in &clamped {
                    let (i, j) = (k / c, k % c);
                    // H is symmetric, so column i equals row i.
                    for (r, h) in ctx.h.row(i) {
                        hd[r * c + j] = hd[r * c + j] + h * corr;
                    }
                }
                std::mem::swap(&mut ln_d, &mut ln_trial);
                u = u_new;
                steps += 1;
                // Grow the step only after it was accepted without backtracking.
                eta_start = if eta == eta_start { (eta * two).min(T::lit(INITIAL_STEP)) } else { eta };
            }
            None => {
                stalled = true;
                break;
            }
        }
    }

    Ok(DInnerReport {
        steps,
        stalled,
        grad_inf: grad_inf.to_f64().unwrap_or(f64::NAN),
        objective_in: objective_in.to_f64().unwrap_or(f64::NAN),
        objective_out: u.to_f64().unwrap_or(f64::NAN),
    })
}

fn max_abs_diff<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> T {
    Zip::from(a).and(b).fold(T::zero(), |m, &x, &y| m.max((x - y).abs()))
}

/// Runs the augmented Lagrangian loop from a feasible `D0` and returns a feasible `D`.
///
/// Each iteration takes projected gradient steps on `D`, projects `D - Phi / tau` to get `B`,
/// then sets `Phi += tau (B - D)` and `tau = min(rho tau, tau_max)`. The loop stops once
/// `max |B - D| <= admm_tol` or after `admm_max_iters` iterations. The returned matrix is the
/// final `B` unless an earlier feasible iterate (including `D0`) scored a strictly lower block
/// objective, in which case that one is returned.
pub fn solve_d<T: Scalar>(
    d0: &LabelDistributionMatrix<T>,
    p: ArrayView2<'_, T>,
    g: &LaplacianMatrix<T>,
    y: &LogicalLabelMatrix,
    alpha: T,
    beta: T,
    params: &HyperParams,
) -> Result<(LabelDistributionMatrix<T>, AdmmDiagnostics)> {
    d0.check_dominated_by(y)?;
    let ctx = DContext::new(p, g, y, alpha, beta)?;
    let qp_tol = T::lit(params.qp_tol);
    let admm_tol = T::lit(params.admm_tol);
    let rho = T::lit(params.rho);
    let tau_max = T::lit(params.tau_max);

    let start = d0.values().as_standard_layout().into_owned();
    let mut scratch = vec![T::zero(); start.len()];
    let mut best_f = ctx.block_objective(start.as_slice().expect("standard layout"), &mut scratch);
    let objective_in = best_f;
    let mut best = start.clone();
    let mut best_iter = 0;

    let mut state = AdmmState::new(start, T::lit(params.tau_init));
    let mut d_steps_total = 0;
    let mut stalls = 0;
    loop {
        let rep = d_steps(&ctx, &mut state, params)?;
        d_steps_total += rep.steps;
        stalls += rep.stalled as usize;

        state.b = update_b(state.d.view(), state.phi.view(), state.tau, y.values(), qp_tol)?;
        state.residual_inf = max_abs_diff(&state.b, &state.d);
        let tau = state.tau;
        Zip::from(&mut state.phi)
            .and(&state.b)
            .and(&state.d)
            .for_each(|phi, &b, &d| *phi = *phi + tau * (b - d));
        state.tau = (rho * state.tau).min(tau_max);
        state.iteration += 1;

        let f = ctx.block_objective(state.b.as_slice().expect("standard layout"), &mut scratch);
        if f <= best_f {
            best_f = f;
            best.assign(&state.b);
            best_iter = state.iteration;
        }

        if state.residual_inf <= admm_tol || state.iteration >= params.admm_max_iters {
            break;
        }
    }

    let residual = state.residual_inf.to_f64().unwrap_or(f64::NAN);
    let exit = if state.residual_inf <= admm_tol {
        AdmmExit::Converged
    } else {
        AdmmExit::MaxIterationsExceeded { residual }
    };
    let diagnostics = AdmmDiagnostics {
        iterations: state.iteration,
        final_residual: residual,
        exit,
        d_steps: d_steps_total,
        line_search_stalls: stalls,
        returned_iteration: best_iter,
        objective_in: objective_in.to_f64().unwrap_or(f64::NAN),
        objective_out: best_f.to_f64().unwrap_or(f64::NAN),
    };
    Ok((LabelDistributionMatrix::from_unchecked(best), diagnostics))
}

//! Three-operator (Davis–Yin) splitting for the relaxed green precoding problem
//!
//! ```text
//! minimize_b  ‖s − H b‖² + κ‖b‖∞² + λ Σ_m ‖(b_m, b_{M+m})‖₂
//! ```
//!
//! over the real-lifted transmit vector `b` of length `2M`. The smooth data
//! term `d1` enters through its gradient, the squared infinity norm `d2` and
//! the group-sparsity term `d3` through their proximal operators:
//!
//! ```text
//! a ← prox_{γ d3}(c)
//! b ← prox_{γ d2}(2a − c − γ ∇d1(a))
//! c ← c + ψ (b − a)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::{dist2, norm_inf, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid solver config: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("splitting iteration diverged (non-finite value) at iteration {iteration}")]
    Diverged { iteration: usize },
}

/// Step, relaxation and stopping controls for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    /// Group-sparsity weight λ ≥ 0.
    pub lambda: T,
    /// Step size γ > 0.
    pub gamma: T,
    /// Relaxation ψ ∈ (0, 2).
    pub psi: T,
    pub max_iters: usize,
    /// Stop once `‖b − a‖₂ ≤ tolerance`.
    pub tolerance: T,
    /// Weight κ of the squared infinity norm.
    pub kappa: T,
}

impl<T: Real> SolverConfig<T> {
    /// Default rule: `γ = gamma_scale / (2σ²_max(H_r))` with `gamma_scale = 0.1`,
    /// `κ = 2NKσ²/P`, `ψ = 1`, 200 iterations and tolerance `1e-6·sqrt(2M)`.
    pub fn for_problem(
        lambda: T,
        largest_singular_value_sq: T,
        antennas_per_ap: usize,
        num_ues: usize,
        num_antennas: usize,
        sigma2: T,
        power: T,
    ) -> Self {
        let two = T::of(2.0);
        Self {
            lambda,
            gamma: T::of(0.1) / (two * largest_singular_value_sq),
            psi: T::one(),
            max_iters: 200,
            tolerance: T::of(1e-6) * T::of((2 * num_antennas) as f64).sqrt(),
            kappa: two * T::of((antennas_per_ap * num_ues) as f64) * sigma2 / power,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |field: &'static str, reason: &str| {
            Err(SolverError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return bad("lambda", "must be finite and >= 0");
        }
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return bad("gamma", "must be finite and > 0");
        }
        if !(self.psi > T::zero() && self.psi < T::of(2.0)) {
            return bad("psi", "must lie in (0, 2)");
        }
        if !(self.tolerance >= T::zero()) {
            return bad("tolerance", "must be >= 0");
        }
        if !(self.kappa >= T::zero()) || !self.kappa.is_finite() {
            return bad("kappa", "must be finite and >= 0");
        }
        Ok(())
    }

    /// Weight of the squared infinity norm inside `prox_{γ d2}`: `2γκ`.
    pub fn linf_weight(&self) -> T {
        T::of(2.0) * self.gamma * self.kappa
    }
}

/// Iterates of the splitting at termination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState<T> {
    /// Output of the group-sparsity prox; the solution estimate.
    pub a_r: Vec<T>,
    /// Output of the infinity-norm prox.
    pub b_r: Vec<T>,
    /// Auxiliary variable after the final update.
    pub c_r: Vec<T>,
    /// Iterations performed.
    pub iter: usize,
    /// `‖b_r − a_r‖₂`
    pub residual: T,
}

impl<T: Real> SolverState<T> {
    pub fn converged(&self, cfg: &SolverConfig<T>) -> bool {
        self.residual <= cfg.tolerance
    }
}

/// One line of the optional per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord<T> {
    pub iter: usize,
    pub objective: T,
    pub residual: T,
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), SolverError> {
    if got == expected {
        Ok(())
    } else {
        Err(SolverError::Dimension {
            what,
            expected,
            got,
        })
    }
}

fn check_problem<T: Real>(b_r: &[T], s_r: &[T], h_r: &Matrix<T>) -> Result<(), SolverError> {
    check_len("b_r", b_r.len(), h_r.cols())?;
    check_len("s_r", s_r.len(), h_r.rows())?;
    if !h_r.cols().is_multiple_of(2) {
        return Err(SolverError::Dimension {
            what: "H_r columns",
            expected: h_r.cols() + 1,
            got: h_r.cols(),
        });
    }
    Ok(())
}

/// Sum of per-antenna group norms `Σ_m ‖(b_m, b_{M+m})‖₂`.
pub fn group_norm_sum<T: Real>(b_r: &[T]) -> T {
    let m = b_r.len() / 2;
    (0..m).map(|i| b_r[i].hypot(b_r[m + i])).sum()
}

/// `d1(b) = ‖s − H_r b‖²`
pub fn data_fit<T: Real>(b_r: &[T], s_r: &[T], h_r: &Matrix<T>) -> T {
    let hb = h_r.mul_vec(b_r);
    s_r.iter().zip(&hb).map(|(&s, &v)| (s - v) * (s - v)).sum()
}

/// Relaxed objective `‖s − H_r b‖² + κ‖b‖∞² + λ Σ_m ‖b̄_m‖₂`.
pub fn objective<T: Real>(
    b_r: &[T],
    s_r: &[T],
    h_r: &Matrix<T>,
    kappa: T,
    lambda: T,
) -> Result<T, SolverError> {
    check_problem(b_r, s_r, h_r)?;
    let inf = norm_inf(b_r);
    Ok(data_fit(b_r, s_r, h_r) + kappa * inf * inf + lambda * group_norm_sum(b_r))
}

/// `∇d1(a) = 2 H_rᵀ (H_r a − s)`
pub fn grad_d1<T: Real>(a_r: &[T], s_r: &[T], h_r: &Matrix<T>) -> Result<Vec<T>, SolverError> {
    check_problem(a_r, s_r, h_r)?;
    let mut residual = h_r.mul_vec(a_r);
    for (r, &s) in residual.iter_mut().zip(s_r) {
        *r = T::of(2.0) * (*r - s);
    }
    Ok(h_r.tr_mul_vec(&residual))
}

/// Block soft-thresholding of every antenna pair `(c_m, c_{M+m})` by `threshold`.
///
/// A group with norm at or below the threshold, including the zero group, maps
/// to exactly zero.
pub fn prox_group_lasso<T: Real>(c_r: &[T], threshold: T) -> Vec<T> {
    let mut out = vec![T::zero(); c_r.len()];
    prox_group_lasso_into(c_r, threshold, &mut out);
    out
}

pub fn prox_group_lasso_into<T: Real>(c_r: &[T], threshold: T, out: &mut [T]) {
    assert!(c_r.len().is_multiple_of(2) && out.len() == c_r.len());
    let m = c_r.len() / 2;
    for i in 0..m {
        let (re, im) = (c_r[i], c_r[m + i]);
        let norm = re.hypot(im);
        let scale = if norm > threshold {
            T::one() - threshold / norm
        } else {
            T::zero()
        };
        out[i] = scale * re;
        out[m + i] = scale * im;
    }
}

/// Proximal operator of `(w/2)‖·‖∞²` by the sort-and-average rule:
/// with `f` the magnitudes sorted in descending order, the clipping level is
/// `α = max(0, max_m Σ_{j≤m} f_j / (w + m))` and `u_i = min(|v_i|, α)·sgn(v_i)`.
pub fn prox_linf_sq<T: Real>(v: &[T], w: T) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    let mut scratch = Vec::with_capacity(v.len());
    prox_linf_sq_into(v, w, &mut out, &mut scratch);
    out
}

/// Clipping level `α` of [`prox_linf_sq`]; `scratch` is reused for the sort.
pub fn linf_sq_level<T: Real>(v: &[T], w: T, scratch: &mut Vec<T>) -> T {
    scratch.clear();
    scratch.extend(v.iter().map(|x| x.abs()));
    // magnitudes are compared by value, so tie order cannot change the result
    scratch.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut partial = T::zero();
    let mut alpha = T::zero();
    for (m, &f) in scratch.iter().enumerate() {
        partial = partial + f;
        let g = partial / (w + T::of((m + 1) as f64));
        if g > alpha {
            alpha = g;
        }
    }
    alpha
}

pub fn prox_linf_sq_into<T: Real>(v: &[T], w: T, out: &mut [T], scratch: &mut Vec<T>) {
    assert_eq!(v.len(), out.len());
    let alpha = linf_sq_level(v, w, scratch);
    for (o, &x) in out.iter_mut().zip(v) {
        *o = x.abs().min(alpha) * x.sign_nonneg();
    }
}

/// Runs the splitting from `c_init` (zero when `None`).
///
/// Stops when `‖b − a‖₂ ≤ tolerance` or after `max_iters` iterations. The
/// optional `trace` callback receives the objective at `a` and the residual
/// for every iteration.
pub fn solve<T: Real>(
    s_r: &[T],
    h_r: &Matrix<T>,
    cfg: &SolverConfig<T>,
    c_init: Option<&[T]>,
    mut trace: Option<&mut dyn FnMut(TraceRecord<T>)>,
) -> Result<SolverState<T>, SolverError> {
    cfg.validate()?;
    let n = h_r.cols();
    check_len("s_r", s_r.len(), h_r.rows())?;
    if !n.is_multiple_of(2) {
        return Err(SolverError::Dimension {
            what: "H_r columns",
            expected: n + 1,
            got: n,
        });
    }
    let mut c = match c_init {
        Some(c0) => {
            check_len("c_r_init", c0.len(), n)?;
            c0.to_vec()
        }
        None => vec![T::zero(); n],
    };

    let threshold = cfg.gamma * cfg.lambda;
    let weight = cfg.linf_weight();
    let two = T::of(2.0);
    let mut a = vec![T::zero(); n];
    let mut b = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut grad = vec![T::zero(); n];
    let mut fit = vec![T::zero(); h_r.rows()];
    let mut scratch = Vec::with_capacity(n);
    let mut residual = T::infinity();
    let mut iter = 0;

    while iter < cfg.max_iters {
        prox_group_lasso_into(&c, threshold, &mut a);
        h_r.mul_vec_into(&a, &mut fit);
        for (r, &s) in fit.iter_mut().zip(s_r) {
            *r = two * (*r - s);
        }
        h_r.tr_mul_vec_into(&fit, &mut grad);
        for i in 0..n {
            v[i] = two * a[i] - c[i] - cfg.gamma * grad[i];
        }
        // min/max inside the prox would silently drop a NaN
        if v.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::Diverged {
                iteration: iter + 1,
            });
        }
        prox_linf_sq_into(&v, weight, &mut b, &mut scratch);
        residual = dist2(&b, &a);
        for i in 0..n {
            c[i] = c[i] + cfg.psi * (b[i] - a[i]);
        }
        iter += 1;
        if !residual.is_finite() || c.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::Diverged { iteration: iter });
        }
        if let Some(sink) = trace.as_deref_mut() {
            let inf = norm_inf(&a);
            let obj =
                data_fit(&a, s_r, h_r) + cfg.kappa * inf * inf + cfg.lambda * group_norm_sum(&a);
            sink(TraceRecord {
                iter,
                objective: obj,
                residual,
            });
        }
        if residual <= cfg.tolerance {
            break;
        }
    }

    Ok(SolverState {
        a_r: a,
        b_r: b,
        c_r: c,
        iter,
        residual,
    })
}

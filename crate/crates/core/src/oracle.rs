//! Slow, independent reference routines used to check the splitting solver.
//!
//! Nothing here shares code with [`crate::solver`]: the proximal operators are
//! recomputed by one-dimensional searches on their optimality conditions, and
//! the reference minimizer is accelerated proximal gradient with an exact
//! (search-based) proximal operator for the combined nonsmooth part.
//!
//! The public operators are checked against these, so the prox functions are
//! imported only by [`prox_check`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::solver::{prox_group_lasso, prox_linf_sq};

const BISECTION_STEPS: usize = 200;

/// Prox of `(w/2)‖·‖∞²` at `v` by bisection on the clipping level.
///
/// For a fixed level α the minimizer of `½‖u − v‖² + (w/2)α²` subject to
/// `‖u‖∞ ≤ α` is `clip(v, α)`, leaving the convex scalar function
/// `Φ(α) = ½Σ(|v_i| − α)₊² + (w/2)α²`, whose derivative
/// `wα − Σ(|v_i| − α)₊` is nondecreasing.
pub fn prox_linf_sq_bisection<T: Real>(v: &[T], w: T) -> Vec<T> {
    let top = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if top == T::zero() {
        return vec![T::zero(); v.len()];
    }
    let slope = |alpha: T| -> T {
        let excess: T = v.iter().map(|&x| (x.abs() - alpha).max(T::zero())).sum();
        w * alpha - excess
    };
    let (mut lo, mut hi) = (T::zero(), top);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = (lo + hi) / T::of(2.0);
    v.iter()
        .map(|&x| {
            let mag = x.abs().min(alpha);
            if x < T::zero() {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

/// Minimizes `½‖u − c‖² + t‖u‖₂` over the plane.
///
/// Any component of `u` orthogonal to `c` raises both terms, so the search
/// runs over the radius along `c`, bisecting the derivative `ρ − ‖c‖ + t`.
pub fn prox_group_pair_search<T: Real>(c: [T; 2], t: T) -> [T; 2] {
    let r = c[0].hypot(c[1]);
    if r == T::zero() || t >= r {
        return [T::zero(), T::zero()];
    }
    let (mut lo, mut hi) = (T::zero(), r);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid - r + t < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho = (lo + hi) / T::of(2.0);
    [c[0] * rho / r, c[1] * rho / r]
}

/// Group-lasso prox over the `(m, M+m)` pairs via [`prox_group_pair_search`].
pub fn prox_group_lasso_search<T: Real>(c_r: &[T], t: T) -> Vec<T> {
    let m = c_r.len() / 2;
    let mut out = vec![T::zero(); c_r.len()];
    for i in 0..m {
        let [a, b] = prox_group_pair_search([c_r[i], c_r[m + i]], t);
        out[i] = a;
        out[m + i] = b;
    }
    out
}

/// Solves `min ½‖u − p‖² + τ‖u‖₂` over the box `[0, α]²` for `p ≥ 0`.
///
/// Returns the minimizer and the derivative of the optimal value with respect
/// to α.
fn boxed_pair(p: [f64; 2], tau: f64, alpha: f64) -> ([f64; 2], f64) {
    let r = p[0].hypot(p[1]);
    if r <= tau {
        return ([0.0, 0.0], 0.0);
    }
    let shrink = 1.0 - tau / r;
    if p[0] * shrink <= alpha && p[1] * shrink <= alpha {
        return ([p[0] * shrink, p[1] * shrink], 0.0);
    }
    if alpha <= 0.0 {
        return ([0.0, 0.0], f64::NEG_INFINITY);
    }
    let (big, small) = if p[0] >= p[1] { (0, 1) } else { (1, 0) };
    let q = p[small];
    let h = |x: f64| x - q + tau * x / (alpha * alpha + x * x).sqrt();
    let mut u = [0.0; 2];
    u[big] = alpha;
    if h(alpha) <= 0.0 {
        u[small] = alpha;
        let norm = alpha * 2f64.sqrt();
        let d = (alpha - p[0]) + (alpha - p[1]) + 2.0 * tau * alpha / norm;
        return (u, d);
    }
    // h is increasing and concave on [0, α]; Newton from 0 approaches from below.
    let mut x: f64 = 0.0;
    for _ in 0..100 {
        let den = (alpha * alpha + x * x).sqrt();
        let hx = x - q + tau * x / den;
        let dh = 1.0 + tau * alpha * alpha / (den * den * den);
        let next = (x - hx / dh).clamp(0.0, alpha);
        if (next - x).abs() <= 1e-16 * alpha.max(1e-300) {
            x = next;
            break;
        }
        x = next;
    }
    u[small] = x;
    let norm = alpha.hypot(x);
    let d = (alpha - p[big]) + tau * alpha / norm;
    (u, d)
}

/// Prox of `(w/2)‖·‖∞² + τ Σ_m ‖(u_m, u_{M+m})‖₂` by a nested search: the outer
/// bisection runs over the infinity-norm level α, the inner problem per pair is
/// a box-constrained shrinkage.
pub fn prox_linf_sq_plus_group(v: &[f64], w: f64, tau: f64) -> Vec<f64> {
    let m = v.len() / 2;
    let top = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if top == 0.0 {
        return vec![0.0; v.len()];
    }
    let pair = |i: usize| [v[i].abs(), v[m + i].abs()];
    let slope = |alpha: f64| -> f64 {
        w * alpha
            + (0..m)
                .map(|i| boxed_pair(pair(i), tau, alpha).1)
                .sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let mut out = vec![0.0; v.len()];
    for i in 0..m {
        let (u, _) = boxed_pair(pair(i), tau, alpha);
        out[i] = u[0].copysign(v[i]);
        out[m + i] = u[1].copysign(v[m + i]);
    }
    out
}

fn reference_objective(b: &[f64], s: &[f64], h: &Matrix<f64>, kappa: f64, lambda: f64) -> f64 {
    let m = b.len() / 2;
    let fit: f64 = h
        .mul_vec(b)
        .iter()
        .zip(s)
        .map(|(x, y)| (y - x) * (y - x))
        .sum();
    let inf = b.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let groups: f64 = (0..m).map(|i| b[i].hypot(b[m + i])).sum();
    fit + kappa * inf * inf + lambda * groups
}

/// Largest eigenvalue of `HᵀH` by power iteration.
fn power_iteration(h: &Matrix<f64>, iters: usize) -> f64 {
    let n = h.cols();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618).sin()).collect();
    let mut value = 0.0;
    for _ in 0..iters {
        let y = h.tr_mul_vec(&h.mul_vec(&x));
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        value = norm / x.iter().map(|a| a * a).sum::<f64>().sqrt();
        x = y.into_iter().map(|a| a / norm).collect();
    }
    value
}

/// Result of [`reference_minimize`].
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub b_r: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// High-accuracy minimizer of the relaxed objective by accelerated proximal
/// gradient with adaptive restart.
///
/// Runs up to `max_iters` iterations, stopping early once the iterate has been
/// stationary to machine precision for 20 consecutive steps.
pub fn reference_minimize(
    s_r: &[f64],
    h_r: &Matrix<f64>,
    kappa: f64,
    lambda: f64,
    max_iters: usize,
) -> ReferenceSolution {
    let n = h_r.cols();
    let lipschitz = 2.0 * power_iteration(h_r, 500) * 1.01;
    let step = 1.0 / lipschitz;
    let mut x = vec![0.0; n];
    let mut x_prev = x.clone();
    let mut t = 1.0f64;
    let mut still = 0;
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        let y: Vec<f64> = x
            .iter()
            .zip(&x_prev)
            .map(|(a, b)| a + mom * (a - b))
            .collect();
        let resid: Vec<f64> = h_r
            .mul_vec(&y)
            .iter()
            .zip(s_r)
            .map(|(a, b)| 2.0 * (a - b))
            .collect();
        let grad = h_r.tr_mul_vec(&resid);
        let z: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let x_new = prox_linf_sq_plus_group(&z, 2.0 * step * kappa, step * lambda);

        let restart: f64 = y
            .iter()
            .zip(&x_new)
            .zip(&x)
            .map(|((yy, xn), xo)| (yy - xn) * (xn - xo))
            .sum();
        let change = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = 1.0 + x_new.iter().map(|a| a * a).sum::<f64>().sqrt();
        x_prev = std::mem::replace(&mut x, x_new);
        t = if restart > 0.0 { 1.0 } else { t_next };
        if change <= 1e-15 * scale {
            still += 1;
            if still >= 20 {
                break;
            }
        } else {
            still = 0;
        }
    }
    let objective = reference_objective(&x, s_r, h_r, kappa, lambda);
    ReferenceSolution {
        b_r: x,
        objective,
        iterations,
    }
}

/// Worst-case disagreement between the fast prox operators and the oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxCheckReport {
    pub cases: usize,
    pub max_linf_deviation: f64,
    pub max_group_deviation: f64,
    /// Cases run with `w = 0` (identity prox).
    pub zero_weight_cases: usize,
}

impl ProxCheckReport {
    pub const LINF_TOLERANCE: f64 = 1e-6;
    pub const GROUP_TOLERANCE: f64 = 1e-8;

    pub fn passed(&self) -> bool {
        self.max_linf_deviation <= Self::LINF_TOLERANCE
            && self.max_group_deviation <= Self::GROUP_TOLERANCE
    }
}

/// Compares [`prox_linf_sq`] and [`prox_group_lasso`] against the search
/// oracles on `cases` random instances of dimension at most 16. Every tenth
/// case uses `w = 0` and a zero threshold.
pub fn prox_check(cases: usize, seed: u64) -> ProxCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ProxCheckReport {
        cases,
        max_linf_deviation: 0.0,
        max_group_deviation: 0.0,
        zero_weight_cases: 0,
    };
    for case in 0..cases {
        let groups = rng.random_range(1..=8usize);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let v: Vec<f64> = (0..2 * groups)
            .map(|_| scale * f64::standard_normal(&mut rng))
            .collect();
        let (w, t) = if case % 10 == 0 {
            report.zero_weight_cases += 1;
            (0.0, 0.0)
        } else {
            (
                10f64.powf(rng.random_range(-3.0..2.0)),
                scale * rng.random_range(0.0..2.0),
            )
        };
        let dim = rng.random_range(1..=2 * groups);
        let fast = prox_linf_sq(&v[..dim], w);
        let slow = prox_linf_sq_bisection(&v[..dim], w);
        report.max_linf_deviation = report.max_linf_deviation.max(max_abs_diff(&fast, &slow));
        let fast = prox_group_lasso(&v, t);
        let slow = prox_group_lasso_search(&v, t);
        report.max_group_deviation = report.max_group_deviation.max(max_abs_diff(&fast, &slow));
    }
    report
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prox_objective(u: &[f64], v: &[f64], w: f64, tau: f64) -> f64 {
        let m = u.len() / 2;
        let d: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        let inf = u.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let g: f64 = (0..m).map(|i| u[i].hypot(u[m + i])).sum();
        0.5 * d + 0.5 * w * inf * inf + tau * g
    }

    #[test]
    fn prox_check_passes_and_counts_identity_cases() {
        let report = prox_check(100, 3);
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.zero_weight_cases, 10);
        assert!(report.max_linf_deviation >= 0.0 && report.max_group_deviation >= 0.0);
    }

    #[test]
    fn linf_bisection_reference_value() {
        let u = prox_linf_sq_bisection(&[2.0, -1.0], 1.0);
        assert_relative_eq!(u[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(u[1], -1.0, epsilon = 1e-12);
        assert_eq!(prox_linf_sq_bisection(&[1.5, -0.5], 0.0), vec![1.5, -0.5]);
    }

    #[test]
    fn group_search_reference_value() {
        let [a, b] = prox_group_pair_search([3.0, 4.0], 2.5);
        assert_relative_eq!(a, 1.5, epsilon = 1e-12);
        assert_relative_eq!(b, 2.0, epsilon = 1e-12);
        assert_eq!(prox_group_pair_search([0.3, 0.4], 0.5), [0.0, 0.0]);
    }

    #[test]
    fn combined_prox_beats_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let n = 2 * rng.random_range(1..6);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let w = rng.random_range(0.0..3.0);
            let tau = rng.random_range(0.0..1.5);
            let u = prox_linf_sq_plus_group(&v, w, tau);
            let best = prox_objective(&u, &v, w, tau);
            for _ in 0..50 {
                let scale = 10f64.powf(rng.random_range(-6.0..-1.0));
                let p: Vec<f64> = u
                    .iter()
                    .map(|x| x + scale * rng.random_range(-1.0..1.0))
                    .collect();
                assert!(
                    prox_objective(&p, &v, w, tau) >= best - 1e-12,
                    "v={v:?} w={w} tau={tau}"
                );
            }
        }
    }

    #[test]
    fn combined_prox_reduces_to_parts() {
        let v = [2.0, -1.0, 0.5, 0.25];
        let only_linf = prox_linf_sq_plus_group(&v, 1.3, 0.0);
        let expect = prox_linf_sq_bisection(&v, 1.3);
        for (a, b) in only_linf.iter().zip(&expect) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        let only_group = prox_linf_sq_plus_group(&v, 0.0, 0.7);
        let expect = prox_group_lasso_search(&v, 0.7);
        for (a, b) in only_group.iter().zip(&expect) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn power_iteration_finds_spectral_norm() {
        let h = Matrix::from_fn(2, 2, |i, j| if i == j { [3.0, 1.0][i] } else { 0.0 });
        assert_relative_eq!(power_iteration(&h, 200), 9.0, max_relative = 1e-12);
    }
}

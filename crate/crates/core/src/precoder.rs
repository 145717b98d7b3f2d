//! Per-symbol green precoder. The relaxed solution is quantized to the one-bit
//! codebook, where weak antennas are switched off, and the receiver scale is
//! then chosen to minimize the MSE.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelMatrix;
use crate::linalg::{lift_vec, CMatrix};
use crate::scalar::Real;
use crate::solver::{self, SolverConfig, SolverError};

/// Lower bound on the receiver scale.
pub const BETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecodeError {
    #[error("all antennas deactivated")]
    AllAntennasOff {
        /// Relaxed solution that quantized to all-zero, for fallback handling.
        relaxed: Vec<f64>,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid deactivation threshold {0}: must lie in [0, 1)")]
    InvalidThreshold(f64),
    #[error("regularized Gram matrix is singular: {0}")]
    Singular(String),
}

/// Quantized transmit vector with its receiver scale and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecodeSolution<T> {
    /// Relaxed (pre-quantization) real-lifted transmit vector.
    pub b_r: Vec<T>,
    /// Unscaled transmit vector over `{0, ±√(P/2N) ± j√(P/2N)}`.
    pub x: Vec<Complex<T>>,
    pub beta: T,
    pub active_mask: Vec<bool>,
    /// `‖s − βHx‖² + σ²Kβ²`
    pub mse: T,
    /// Splitting iterations spent (zero for non-iterative precoders).
    pub iterations: usize,
}

impl<T: Real> PrecodeSolution<T> {
    pub fn active_count(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }
}

/// Amplitude `√(P/2N)` of each real and imaginary DAC output.
pub fn dac_level<T: Real>(power: f64, antennas_per_ap: usize) -> T {
    T::of((power / (2.0 * antennas_per_ap as f64)).sqrt())
}

/// Per-antenna group norms `‖(b_m, b_{M+m})‖₂`.
pub fn group_norms<T: Real>(b_r: &[T]) -> Vec<T> {
    let m = b_r.len() / 2;
    (0..m).map(|i| b_r[i].hypot(b_r[m + i])).collect()
}

/// One-bit quantization with shutdown.
///
/// Antenna m is off when its group norm is at most `tau_off` times the largest
/// group norm (an all-zero input switches everything off); active antennas
/// take the component signs of the relaxed solution.
pub fn quantize<T: Real>(
    b_r: &[T],
    power: f64,
    antennas_per_ap: usize,
    tau_off: f64,
) -> Result<(Vec<Complex<T>>, Vec<bool>), PrecodeError> {
    if !(0.0..1.0).contains(&tau_off) {
        return Err(PrecodeError::InvalidThreshold(tau_off));
    }
    let norms = group_norms(b_r);
    let peak = norms.iter().fold(T::zero(), |a, &x| a.max(x));
    let cut = T::of(tau_off) * peak;
    let mask: Vec<bool> = norms.iter().map(|&g| peak > T::zero() && g > cut).collect();
    Ok((quantize_masked(b_r, &mask, power, antennas_per_ap), mask))
}

/// Sign-quantizes every antenna in `mask`, zero elsewhere; `sgn(0) = +1`.
pub fn quantize_masked<T: Real>(
    b_r: &[T],
    mask: &[bool],
    power: f64,
    antennas_per_ap: usize,
) -> Vec<Complex<T>> {
    let m = b_r.len() / 2;
    assert_eq!(mask.len(), m);
    let level = dac_level::<T>(power, antennas_per_ap);
    (0..m)
        .map(|i| {
            if mask[i] {
                Complex::new(
                    level * b_r[i].sign_nonneg(),
                    level * b_r[m + i].sign_nonneg(),
                )
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect()
}

/// Receiver scale minimizing `‖s − βHx‖² + σ²Kβ²`:
/// `β = max(ε, Re(sᴴHx) / (‖Hx‖² + Kσ²))`.
pub fn optimal_beta<T: Real>(
    x: &[Complex<T>],
    s: &[Complex<T>],
    h: &CMatrix<T>,
    sigma2: T,
) -> Result<T, PrecodeError> {
    if x.len() != h.cols() {
        return Err(PrecodeError::Dimension {
            what: "x",
            expected: h.cols(),
            got: x.len(),
        });
    }
    if s.len() != h.rows() {
        return Err(PrecodeError::Dimension {
            what: "s",
            expected: h.rows(),
            got: s.len(),
        });
    }
    if x.iter().all(|z| z.re == T::zero() && z.im == T::zero()) {
        return Err(PrecodeError::AllAntennasOff {
            relaxed: Vec::new(),
        });
    }
    let hx = h.mul_vec(x);
    let k = T::of(h.rows() as f64);
    let corr = s
        .iter()
        .zip(&hx)
        .fold(T::zero(), |acc, (a, b)| acc + a.re * b.re + a.im * b.im);
    let energy = hx.iter().map(|z| z.norm_sqr()).sum::<T>();
    Ok((corr / (energy + k * sigma2)).max(T::of(BETA_FLOOR)))
}

/// `‖s − βHx‖² + σ²Kβ²`
pub fn mse<T: Real>(x: &[Complex<T>], beta: T, s: &[Complex<T>], h: &CMatrix<T>, sigma2: T) -> T {
    let hx = h.mul_vec(x);
    let err = s
        .iter()
        .zip(&hx)
        .map(|(a, b)| (*a - *b * beta).norm_sqr())
        .sum::<T>();
    err + sigma2 * T::of(h.rows() as f64) * beta * beta
}

/// Finishes a solution from a quantized `x`: scale, MSE and bookkeeping.
pub fn finish<T: Real>(
    b_r: Vec<T>,
    x: Vec<Complex<T>>,
    active_mask: Vec<bool>,
    s: &[Complex<T>],
    channel: &ChannelMatrix<T>,
    iterations: usize,
) -> Result<PrecodeSolution<T>, PrecodeError> {
    let beta = optimal_beta(&x, s, &channel.h, channel.sigma2)?;
    let mse = mse(&x, beta, s, &channel.h, channel.sigma2);
    Ok(PrecodeSolution {
        b_r,
        x,
        beta,
        active_mask,
        mse,
        iterations,
    })
}

/// Green precoder for one symbol vector.
///
/// Runs the splitting solver on the lifted problem, quantizes with relative
/// shutdown threshold `tau_off` and computes the optimal receiver scale. An
/// all-off quantization is reported as [`PrecodeError::AllAntennasOff`]
/// carrying the relaxed vector.
pub fn precode_symbol<T: Real>(
    s: &[Complex<T>],
    channel: &ChannelMatrix<T>,
    cfg: &SolverConfig<T>,
    tau_off: f64,
    power: f64,
    c_init: Option<&[T]>,
) -> Result<(PrecodeSolution<T>, Vec<T>), PrecodeError> {
    if s.len() != channel.num_ues() {
        return Err(PrecodeError::Dimension {
            what: "s",
            expected: channel.num_ues(),
            got: s.len(),
        });
    }
    let s_r = lift_vec(s);
    let state = solver::solve(&s_r, &channel.h_r, cfg, c_init, None)?;
    let (x, mask) = quantize(&state.a_r, power, channel.antennas_per_ap, tau_off)?;
    if !mask.iter().any(|&a| a) {
        return Err(PrecodeError::AllAntennasOff {
            relaxed: state.a_r.iter().map(|v| v.as_f64()).collect(),
        });
    }
    let sol = finish(state.a_r, x, mask, s, channel, state.iter)?;
    Ok((sol, state.c_r))
}

/// Fallback for an all-off output: activate only the antenna with the largest
/// relaxed group norm. When the relaxed vector is identically zero the matched
/// filter `H_rᵀ s_r` (the descent direction at the origin) ranks the groups
/// and supplies the signs instead.
pub fn strongest_group_fallback<T: Real>(
    relaxed: &[T],
    s: &[Complex<T>],
    channel: &ChannelMatrix<T>,
    power: f64,
) -> Result<PrecodeSolution<T>, PrecodeError> {
    let mut guide = relaxed.to_vec();
    if guide.iter().all(|&v| v == T::zero()) {
        guide = channel.h_r.tr_mul_vec(&lift_vec(s));
    }
    let norms = group_norms(&guide);
    let mut best = 0;
    for (i, &g) in norms.iter().enumerate() {
        if g > norms[best] {
            best = i;
        }
    }
    let mut mask = vec![false; norms.len()];
    mask[best] = true;
    let x = quantize_masked(&guide, &mask, power, channel.antennas_per_ap);
    finish(relaxed.to_vec(), x, mask, s, channel, 0)
}

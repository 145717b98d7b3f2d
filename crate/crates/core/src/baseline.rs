//! Benchmark precoders for comparison with the green precoder.
//!
//! The SQUID-style baseline is the same splitting engine run with λ = 0 and
//! no zero level. ACR masks switch antennas off at random.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelMatrix;
use crate::linalg::{lift_vec, Matrix};
use crate::precoder::{finish, quantize_masked, PrecodeError, PrecodeSolution};
use crate::scalar::Real;
use crate::solver::{self, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("active antenna target {target} outside 1..={total}")]
    InvalidTarget { target: usize, total: usize },
    #[error("active mask has no active antenna")]
    EmptyMask,
    #[error("active mask has length {got}, expected {expected}")]
    MaskLength { expected: usize, got: usize },
    #[error(transparent)]
    Precode(#[from] PrecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "RZF1")]
    Rzf1,
    #[serde(rename = "SQUID")]
    Squid,
    #[serde(rename = "RZF1_ALIGNED")]
    Rzf1Aligned,
    #[serde(rename = "SQUID_ALIGNED")]
    SquidAligned,
    #[serde(rename = "RZF1_ACR")]
    Rzf1Acr,
    #[serde(rename = "SQUID_ACR")]
    SquidAcr,
}

/// Which antennas a baseline transmits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskPolicy {
    /// Every antenna.
    Full,
    /// The green precoder's mask for the same symbol.
    Aligned,
    /// A random mask with the green precoder's active count.
    Random,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::Rzf1,
        BaselineKind::Squid,
        BaselineKind::Rzf1Aligned,
        BaselineKind::SquidAligned,
        BaselineKind::Rzf1Acr,
        BaselineKind::SquidAcr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Rzf1 => "RZF1",
            BaselineKind::Squid => "SQUID",
            BaselineKind::Rzf1Aligned => "RZF1_ALIGNED",
            BaselineKind::SquidAligned => "SQUID_ALIGNED",
            BaselineKind::Rzf1Acr => "RZF1_ACR",
            BaselineKind::SquidAcr => "SQUID_ACR",
        }
    }

    pub fn mask_policy(self) -> MaskPolicy {
        match self {
            BaselineKind::Rzf1 | BaselineKind::Squid => MaskPolicy::Full,
            BaselineKind::Rzf1Aligned | BaselineKind::SquidAligned => MaskPolicy::Aligned,
            BaselineKind::Rzf1Acr | BaselineKind::SquidAcr => MaskPolicy::Random,
        }
    }

    pub fn is_squid(self) -> bool {
        matches!(
            self,
            BaselineKind::Squid | BaselineKind::SquidAligned | BaselineKind::SquidAcr
        )
    }
}

/// The green precoder or one of the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrecoderKind {
    Green,
    Baseline(BaselineKind),
}

impl PrecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            PrecoderKind::Green => "GREEN",
            PrecoderKind::Baseline(b) => b.name(),
        }
    }
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        if upper == "GREEN" {
            return Ok(PrecoderKind::Green);
        }
        BaselineKind::ALL
            .iter()
            .find(|b| b.name() == upper)
            .map(|&b| PrecoderKind::Baseline(b))
            .ok_or_else(|| format!("unknown precoder {s:?}"))
    }
}

impl Serialize for PrecoderKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PrecoderKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_mask(mask: &[bool], m: usize) -> Result<(), BaselineError> {
    if mask.len() != m {
        return Err(BaselineError::MaskLength {
            expected: m,
            got: mask.len(),
        });
    }
    if !mask.iter().any(|&a| a) {
        return Err(BaselineError::EmptyMask);
    }
    Ok(())
}

/// One-bit RZF on the active antennas.
///
/// `w = H_aᴴ (H_a H_aᴴ + ρ I)⁻¹ s` with `ρ = regularizer`, then component-sign
/// quantization of the active entries. The default regularizer is `Kσ²/P`
/// (see [`rzf_regularizer`]).
pub fn rzf_precode<T: Real>(
    s: &[Complex<T>],
    channel: &ChannelMatrix<T>,
    active_mask: &[bool],
    regularizer: T,
    power: f64,
) -> Result<PrecodeSolution<T>, BaselineError> {
    let m = channel.num_antennas();
    check_mask(active_mask, m)?;
    let reduced = channel.h.select_columns(active_mask);
    let mut gram = reduced.gram_rows();
    for i in 0..gram.rows() {
        gram[(i, i)] = gram[(i, i)] + Complex::new(regularizer, T::zero());
    }
    let z = gram
        .cholesky_solve(s)
        .map_err(|e| PrecodeError::Singular(e.to_string()))?;
    let w_active = reduced.adjoint_mul_vec(&z);
    let mut w = vec![Complex::new(T::zero(), T::zero()); m];
    let mut it = w_active.into_iter();
    for (slot, &on) in w.iter_mut().zip(active_mask) {
        if on {
            *slot = it.next().expect("one entry per active antenna");
        }
    }
    let w_r = lift_vec(&w);
    let x = quantize_masked(&w_r, active_mask, power, channel.antennas_per_ap);
    Ok(finish(w_r, x, active_mask.to_vec(), s, channel, 0)?)
}

/// `Kσ²/P`, scaled by `scale`.
pub fn rzf_regularizer<T: Real>(channel: &ChannelMatrix<T>, power: f64, scale: f64) -> T {
    T::of(scale * channel.num_ues() as f64 / power) * channel.sigma2
}

/// `H_r` with both lifted columns of every inactive antenna zeroed.
pub fn mask_lifted_columns<T: Real>(h_r: &Matrix<T>, active_mask: &[bool]) -> Matrix<T> {
    let m = active_mask.len();
    Matrix::from_fn(h_r.rows(), h_r.cols(), |i, j| {
        if active_mask[j % m] {
            h_r[(i, j)]
        } else {
            T::zero()
        }
    })
}

/// SQUID-style baseline: the splitting solver with λ = 0 on the masked
/// channel, then sign quantization of every active antenna (no zero level).
///
/// The step size in `cfg` is kept; zeroing columns cannot raise the largest
/// singular value, so a step valid for the full channel stays valid.
pub fn squid_precode<T: Real>(
    s: &[Complex<T>],
    channel: &ChannelMatrix<T>,
    active_mask: &[bool],
    cfg: &SolverConfig<T>,
    power: f64,
) -> Result<PrecodeSolution<T>, BaselineError> {
    let m = channel.num_antennas();
    check_mask(active_mask, m)?;
    let cfg = SolverConfig {
        lambda: T::zero(),
        ..*cfg
    };
    let s_r = lift_vec(s);
    let state = if active_mask.iter().all(|&a| a) {
        solver::solve(&s_r, &channel.h_r, &cfg, None, None)
    } else {
        let masked = mask_lifted_columns(&channel.h_r, active_mask);
        solver::solve(&s_r, &masked, &cfg, None, None)
    }
    .map_err(PrecodeError::from)?;
    let x = quantize_masked(&state.a_r, active_mask, power, channel.antennas_per_ap);
    Ok(finish(
        state.a_r,
        x,
        active_mask.to_vec(),
        s,
        channel,
        state.iter,
    )?)
}

/// Uniformly random mask with exactly `target_active` of `m` antennas on.
pub fn acr_mask<R: Rng + ?Sized>(
    target_active: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<bool>, BaselineError> {
    if target_active == 0 || target_active > m {
        return Err(BaselineError::InvalidTarget {
            target: target_active,
            total: m,
        });
    }
    let mut mask = vec![false; m];
    for i in rand::seq::index::sample(rng, m, target_active) {
        mask[i] = true;
    }
    Ok(mask)
}

//! Green one-bit precoding for cell-free massive MIMO downlinks.
//!
//! A Davis–Yin splitting solver handles the group-sparse relaxed precoding
//! problem. Its output is quantized to one-bit DAC levels, and antennas whose
//! relaxed weight vanishes are switched off. [`harness`] measures the BER of
//! this precoder against one-bit RZF and SQUID-style baselines on simulated
//! correlated Rayleigh channels.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar for the common cases.

// `!(x > 0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod channel;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod precoder;
pub mod scalar;
pub mod solver;

pub use baseline::{
    acr_mask, rzf_precode, squid_precode, BaselineError, BaselineKind, MaskPolicy, PrecoderKind,
};
pub use channel::{generate_channel, ChannelError, GeometryRealization, NetworkConfig};
pub use harness::{run_experiment, ExperimentPlan, HarnessError, RunResult, SolverSettings};
pub use linalg::{CMatrix, LinalgError, Matrix};
pub use precoder::{precode_symbol, quantize, PrecodeError};
pub use scalar::Real;
pub use solver::{prox_group_lasso, prox_linf_sq, solve, SolverError};

pub type ChannelMatrix64 = channel::ChannelMatrix<f64>;
pub type ChannelMatrix32 = channel::ChannelMatrix<f32>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type SolverConfig32 = solver::SolverConfig<f32>;
pub type SolverState64 = solver::SolverState<f64>;
pub type SolverState32 = solver::SolverState<f32>;
pub type PrecodeSolution64 = precoder::PrecodeSolution<f64>;
pub type PrecodeSolution32 = precoder::PrecodeSolution<f32>;
pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Monte Carlo BER experiment over a grid of λ values.
//!
//! Each setup draws one channel. Every QPSK symbol vector is then precoded by
//! the green precoder and the requested baselines, sent through the noisy
//! channel, and the bit errors are counted per UE.
//!
//! Every random quantity comes from its own ChaCha stream keyed by
//! `(master_seed, purpose, setup, λ index, symbol)`, so results do not depend
//! on the worker count or scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use log::info;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{
    acr_mask, rzf_precode, rzf_regularizer, squid_precode, BaselineKind, MaskPolicy, PrecoderKind,
};
use crate::channel::{generate_channel, ChannelError, ChannelMatrix, NetworkConfig};
use crate::linalg::lift_vec;
use crate::precoder::{precode_symbol, strongest_group_fallback, PrecodeError, PrecodeSolution};
use crate::scalar::Real;
use crate::solver::{self, SolverConfig, SolverError, TraceRecord};

/// Symbols handled by one work item; warm starts chain within a block only.
pub const BLOCK_SYMBOLS: usize = 64;

/// Abort threshold on the fraction of failed precoder invocations.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid plan: {field} {reason}")]
    InvalidPlan { field: &'static str, reason: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("precoder failure rate {rate:.4} exceeds {limit} ({failures} of {total} invocations)")]
    FailureRate {
        failures: u64,
        total: u64,
        rate: f64,
        limit: f64,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Solver knobs shared by every λ in the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub lambdas: Vec<f64>,
    /// γ = gamma_scale / (2σ²_max(H_r))
    pub gamma_scale: f64,
    pub psi: f64,
    pub max_iters: usize,
    /// Residual tolerance; `None` selects `1e-6·sqrt(2M)`.
    pub tolerance: Option<f64>,
    /// Start each symbol's solve from the previous symbol's auxiliary variable.
    pub warm_start: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            lambdas: vec![1.0, 10.0, 15.0, 20.0, 25.0],
            gamma_scale: 0.1,
            psi: 1.0,
            max_iters: 200,
            tolerance: None,
            warm_start: false,
        }
    }
}

impl SolverSettings {
    /// Concrete solver configuration for one channel and λ.
    pub fn config_for<T: Real>(
        &self,
        channel: &ChannelMatrix<T>,
        lambda: f64,
        power: f64,
    ) -> SolverConfig<T> {
        let mut cfg = SolverConfig::for_problem(
            T::of(lambda),
            channel.largest_singular_value_sq,
            channel.antennas_per_ap,
            channel.num_ues(),
            channel.num_antennas(),
            channel.sigma2,
            T::of(power),
        );
        cfg.gamma = T::of(self.gamma_scale) / (T::of(2.0) * channel.largest_singular_value_sq);
        cfg.psi = T::of(self.psi);
        cfg.max_iters = self.max_iters;
        if let Some(tol) = self.tolerance {
            cfg.tolerance = T::of(tol);
        }
        cfg
    }
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub network: NetworkConfig,
    pub solver: SolverSettings,
    /// Relative group-norm threshold below which the green precoder shuts an antenna off.
    pub tau_off: f64,
    /// Multiplier on the RZF regularizer `Kσ²/P`.
    pub rzf_regularizer_scale: f64,
    pub bits_per_ue: usize,
    pub num_setups: usize,
    /// Reported precoders; GREEN always runs since the other masks derive from it.
    pub precoders: Vec<PrecoderKind>,
    pub master_seed: u64,
    /// Worker threads, 0 for the rayon default. Does not affect results.
    pub threads: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            solver: SolverSettings::default(),
            tau_off: 1e-3,
            rzf_regularizer_scale: 1.0,
            bits_per_ue: 1_000_000,
            num_setups: 10,
            precoders: vec![
                PrecoderKind::Green,
                PrecoderKind::Baseline(BaselineKind::Rzf1Aligned),
                PrecoderKind::Baseline(BaselineKind::SquidAligned),
                PrecoderKind::Baseline(BaselineKind::Rzf1Acr),
                PrecoderKind::Baseline(BaselineKind::SquidAcr),
            ],
            master_seed: 1,
            threads: 0,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad =
            |field: &'static str, reason: String| Err(HarnessError::InvalidPlan { field, reason });
        self.network.validate()?;
        if self.bits_per_ue == 0 || !self.bits_per_ue.is_multiple_of(2) {
            return bad(
                "bits_per_ue",
                format!("must be a positive even count, got {}", self.bits_per_ue),
            );
        }
        if self.bits_per_ue / 2 > u32::MAX as usize {
            return bad("bits_per_ue", "too many symbols per setup".into());
        }
        if self.num_setups == 0 || self.num_setups > 1 << 16 {
            return bad(
                "num_setups",
                format!("must lie in 1..=65536, got {}", self.num_setups),
            );
        }
        if self.solver.lambdas.is_empty() {
            return bad("lambdas", "must not be empty".into());
        }
        if self.solver.lambdas.len() > 1 << 12 {
            return bad("lambdas", "at most 4096 values".into());
        }
        if let Some(l) = self
            .solver
            .lambdas
            .iter()
            .find(|l| !(l.is_finite() && **l >= 0.0))
        {
            return bad(
                "lambdas",
                format!("entries must be finite and >= 0, got {l}"),
            );
        }
        if !(self.solver.gamma_scale.is_finite() && self.solver.gamma_scale > 0.0) {
            return bad(
                "gamma_scale",
                format!("must be > 0, got {}", self.solver.gamma_scale),
            );
        }
        if !(self.solver.psi > 0.0 && self.solver.psi < 2.0) {
            return bad(
                "psi",
                format!("must lie in (0, 2), got {}", self.solver.psi),
            );
        }
        if self.solver.max_iters == 0 {
            return bad("max_iters", "must be >= 1".into());
        }
        if let Some(t) = self.solver.tolerance {
            if !(t.is_finite() && t >= 0.0) {
                return bad("tolerance", format!("must be finite and >= 0, got {t}"));
            }
        }
        if !(0.0..1.0).contains(&self.tau_off) {
            return bad(
                "tau_off",
                format!("must lie in [0, 1), got {}", self.tau_off),
            );
        }
        if !(self.rzf_regularizer_scale.is_finite() && self.rzf_regularizer_scale > 0.0) {
            return bad(
                "rzf_regularizer_scale",
                format!("must be > 0, got {}", self.rzf_regularizer_scale),
            );
        }
        if self.precoders.is_empty() {
            return bad("precoders", "must not be empty".into());
        }
        Ok(())
    }

    /// GREEN first, then the requested baselines in order, without duplicates.
    pub fn reported_precoders(&self) -> Vec<PrecoderKind> {
        let mut out = vec![PrecoderKind::Green];
        for &p in &self.precoders {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    pub fn symbols_per_setup(&self) -> usize {
        self.bits_per_ue / 2
    }
}

/// Purpose tags for derived random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Channel = 1,
    Bits = 2,
    Noise = 3,
    Acr = 4,
}

/// Independent stream for `(tag, setup, lambda_index, symbol)` under `master_seed`.
pub fn stream_rng(
    master_seed: u64,
    tag: StreamTag,
    setup: usize,
    lambda_index: usize,
    symbol: usize,
) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let stream = ((tag as u64) << 60)
        | ((setup as u64) << 44)
        | ((lambda_index as u64) << 32)
        | symbol as u64;
    rng.set_stream(stream);
    rng
}

/// Seeds and stream layout recorded with every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub master_seed: u64,
    pub generator: String,
    pub stream_layout: String,
}

impl SeedManifest {
    fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            generator: "ChaCha8 seeded from master_seed via seed_from_u64".into(),
            stream_layout: "stream = tag<<60 | setup<<44 | lambda_index<<32 | symbol; tags: 1 channel, 2 bits, 3 noise, 4 acr; bits and noise ignore lambda_index".into(),
        }
    }
}

/// Gray-mapped unit-energy QPSK: bit pair `(b0, b1)` maps to
/// `((1 − 2b0) + j(1 − 2b1))/√2`. `bits` holds two bits per UE.
pub fn qpsk_modulate<T: Real>(bits: &[bool]) -> Vec<Complex<T>> {
    assert!(bits.len().is_multiple_of(2), "two bits per symbol");
    let a = T::of(std::f64::consts::FRAC_1_SQRT_2);
    bits.chunks_exact(2)
        .map(|b| {
            let re = if b[0] { -a } else { a };
            let im = if b[1] { -a } else { a };
            Complex::new(re, im)
        })
        .collect()
}

/// Hard decision on one soft estimate; a zero component decides bit 0.
pub fn qpsk_demodulate<T: Real>(s_hat: Complex<T>) -> (bool, bool) {
    (s_hat.re < T::zero(), s_hat.im < T::zero())
}

/// Circularly symmetric complex Gaussian noise with variance `sigma2` per entry.
pub fn draw_noise<T: Real, R: Rng + ?Sized>(k: usize, sigma2: T, rng: &mut R) -> Vec<Complex<T>> {
    let std = (sigma2 / T::of(2.0)).sqrt();
    (0..k)
        .map(|_| {
            let re = T::standard_normal(rng);
            let im = T::standard_normal(rng);
            Complex::new(re * std, im * std)
        })
        .collect()
}

/// `ŝ = β(Hx + n)` for a given noise realization.
pub fn transmit_with_noise<T: Real>(
    sol: &PrecodeSolution<T>,
    channel: &ChannelMatrix<T>,
    noise: &[Complex<T>],
) -> Vec<Complex<T>> {
    channel
        .h
        .mul_vec(&sol.x)
        .into_iter()
        .zip(noise)
        .map(|(y, n)| (y + n) * sol.beta)
        .collect()
}

/// `ŝ = β(Hx + n)` with `n ~ CN(0, σ²I)` drawn from `rng`.
pub fn transmit_symbol<T: Real, R: Rng + ?Sized>(
    sol: &PrecodeSolution<T>,
    channel: &ChannelMatrix<T>,
    rng: &mut R,
) -> Vec<Complex<T>> {
    let noise = draw_noise(channel.num_ues(), channel.sigma2, rng);
    transmit_with_noise(sol, channel, &noise)
}

/// Error and activity counters for one `(setup, λ)` cell or any union of them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tally {
    /// `errors[p][k]`: bit errors of UE k under reported precoder p.
    pub errors: Vec<Vec<u64>>,
    pub failures: Vec<u64>,
    pub symbols: u64,
    pub green_active_sum: u64,
    pub fallbacks: u64,
    pub aligned_mask_violations: u64,
    pub acr_count_violations: u64,
    pub nanos: Vec<u64>,
}

impl Tally {
    fn new(precoders: usize, ues: usize) -> Self {
        Self {
            errors: vec![vec![0; ues]; precoders],
            failures: vec![0; precoders],
            nanos: vec![0; precoders],
            ..Default::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.errors.iter_mut().zip(&other.errors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.failures.iter_mut().zip(&other.failures) {
            *a += b;
        }
        for (a, b) in self.nanos.iter_mut().zip(&other.nanos) {
            *a += b;
        }
        self.symbols += other.symbols;
        self.green_active_sum += other.green_active_sum;
        self.fallbacks += other.fallbacks;
        self.aligned_mask_violations += other.aligned_mask_violations;
        self.acr_count_violations += other.acr_count_violations;
        self
    }
}

fn count_errors<T: Real>(bits: &[bool], s_hat: &[Complex<T>], per_ue: &mut [u64]) {
    for (k, (pair, &z)) in bits.chunks_exact(2).zip(s_hat).enumerate() {
        let (b0, b1) = qpsk_demodulate(z);
        per_ue[k] += u64::from(pair[0] != b0) + u64::from(pair[1] != b1);
    }
}

/// Simulates every symbol of one `(setup, λ)` cell on a fixed channel.
pub fn run_cell<T: Real>(
    plan: &ExperimentPlan,
    channel: &ChannelMatrix<T>,
    setup: usize,
    lambda_index: usize,
) -> Tally {
    let precoders = plan.reported_precoders();
    let k = channel.num_ues();
    let m = channel.num_antennas();
    let power = plan.network.downlink_power_w;
    let lambda = plan.solver.lambdas[lambda_index];
    let green_cfg = plan.solver.config_for(channel, lambda, power);
    let rzf_reg = rzf_regularizer(channel, power, plan.rzf_regularizer_scale);
    let symbols = plan.symbols_per_setup();
    let blocks = symbols.div_ceil(BLOCK_SYMBOLS);

    let simulate_block = |block: usize| -> Tally {
        let mut tally = Tally::new(precoders.len(), k);
        let mut warm: Option<Vec<T>> = None;
        let end = ((block + 1) * BLOCK_SYMBOLS).min(symbols);
        for symbol in block * BLOCK_SYMBOLS..end {
            let (bits, s) = symbol_stream::<T>(plan, k, setup, symbol);
            let mut noise_rng = stream_rng(plan.master_seed, StreamTag::Noise, setup, 0, symbol);
            let noise = draw_noise(k, channel.sigma2, &mut noise_rng);

            let started = Instant::now();
            let c_init = if plan.solver.warm_start {
                warm.as_deref()
            } else {
                None
            };
            let green = match precode_symbol(&s, channel, &green_cfg, plan.tau_off, power, c_init) {
                Ok((sol, c_r)) => {
                    warm = Some(c_r);
                    Ok(sol)
                }
                Err(PrecodeError::AllAntennasOff { relaxed }) => {
                    tally.fallbacks += 1;
                    let relaxed: Vec<T> = relaxed.into_iter().map(T::of).collect();
                    strongest_group_fallback(&relaxed, &s, channel, power)
                }
                Err(e) => Err(e),
            };
            tally.nanos[0] += started.elapsed().as_nanos() as u64;
            let green_mask = match &green {
                Ok(sol) => sol.active_mask.clone(),
                Err(_) => vec![true; m],
            };
            let green_count = green_mask.iter().filter(|&&a| a).count();
            tally.green_active_sum += green_count as u64;

            let mut acr: Option<Vec<bool>> = None;
            for (p, kind) in precoders.iter().enumerate() {
                let started = Instant::now();
                let outcome = match *kind {
                    PrecoderKind::Green => green.clone(),
                    PrecoderKind::Baseline(b) => {
                        let mask = match b.mask_policy() {
                            MaskPolicy::Full => vec![true; m],
                            MaskPolicy::Aligned => green_mask.clone(),
                            MaskPolicy::Random => acr
                                .get_or_insert_with(|| {
                                    let mut rng = stream_rng(
                                        plan.master_seed,
                                        StreamTag::Acr,
                                        setup,
                                        lambda_index,
                                        symbol,
                                    );
                                    acr_mask(green_count, m, &mut rng)
                                        .expect("green count lies in 1..=M")
                                })
                                .clone(),
                        };
                        match b.mask_policy() {
                            MaskPolicy::Aligned if mask != green_mask => {
                                tally.aligned_mask_violations += 1
                            }
                            MaskPolicy::Random
                                if mask.iter().filter(|&&a| a).count() != green_count =>
                            {
                                tally.acr_count_violations += 1
                            }
                            _ => {}
                        }
                        let res = if b.is_squid() {
                            squid_precode(&s, channel, &mask, &green_cfg, power)
                        } else {
                            rzf_precode(&s, channel, &mask, rzf_reg, power)
                        };
                        res.map_err(|e| match e {
                            crate::baseline::BaselineError::Precode(p) => p,
                            other => PrecodeError::Singular(other.to_string()),
                        })
                    }
                };
                if p > 0 {
                    tally.nanos[p] += started.elapsed().as_nanos() as u64;
                }
                let s_hat = match &outcome {
                    Ok(sol) => transmit_with_noise(sol, channel, &noise),
                    Err(_) => {
                        tally.failures[p] += 1;
                        vec![Complex::new(T::zero(), T::zero()); k]
                    }
                };
                count_errors(&bits, &s_hat, &mut tally.errors[p]);
            }
            tally.symbols += 1;
        }
        tally
    };

    (0..blocks)
        .into_par_iter()
        .map(simulate_block)
        .reduce(|| Tally::new(precoders.len(), k), Tally::merge)
}

/// BER results for one `(λ, precoder)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecoderResult {
    pub lambda: f64,
    pub precoder: PrecoderKind,
    /// Per-UE BER averaged over setups, in UE order.
    pub per_ue_avg_ber: Vec<f64>,
    /// `per_ue_avg_ber` sorted ascending.
    pub per_ue_ranked_ber: Vec<f64>,
    pub overall_avg_ber: f64,
    pub per_setup_overall_ber: Vec<f64>,
    pub failures: u64,
}

/// Green antenna activity for one λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaActivity {
    pub lambda: f64,
    pub avg_active_antennas: f64,
    pub per_setup_active: Vec<f64>,
    pub fallbacks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub num_antennas: usize,
    pub num_ues: usize,
    pub precoders: Vec<PrecoderKind>,
    pub entries: Vec<PrecoderResult>,
    pub activity: Vec<LambdaActivity>,
    /// Wall-clock seconds spent inside each precoder, summed over workers.
    pub timings_s: BTreeMap<String, f64>,
    pub seed_manifest: SeedManifest,
    pub aligned_mask_violations: u64,
    pub acr_count_violations: u64,
    pub total_symbols: u64,
}

impl RunResult {
    pub fn entry(&self, lambda: f64, precoder: PrecoderKind) -> Option<&PrecoderResult> {
        self.entries
            .iter()
            .find(|e| e.lambda == lambda && e.precoder == precoder)
    }

    pub fn activity_for(&self, lambda: f64) -> Option<&LambdaActivity> {
        self.activity.iter().find(|a| a.lambda == lambda)
    }
}

/// Channel realization used for `setup`.
pub fn setup_channel<T: Real>(
    plan: &ExperimentPlan,
    setup: usize,
) -> Result<ChannelMatrix<T>, HarnessError> {
    let mut rng = stream_rng(plan.master_seed, StreamTag::Channel, setup, 0, 0);
    Ok(generate_channel::<T, _>(&plan.network, &mut rng)?.1)
}

/// QPSK symbol vector and its bits for `(setup, symbol)`; shared by every λ.
pub fn symbol_stream<T: Real>(
    plan: &ExperimentPlan,
    k: usize,
    setup: usize,
    symbol: usize,
) -> (Vec<bool>, Vec<Complex<T>>) {
    let mut rng = stream_rng(plan.master_seed, StreamTag::Bits, setup, 0, symbol);
    let bits: Vec<bool> = (0..2 * k).map(|_| rng.random()).collect();
    let s = qpsk_modulate(&bits);
    (bits, s)
}

/// Per-iteration solver trace of the green precoder for one symbol of the run,
/// always started from a zero auxiliary variable.
pub fn trace_symbol<T: Real>(
    plan: &ExperimentPlan,
    channel: &ChannelMatrix<T>,
    setup: usize,
    lambda_index: usize,
    symbol: usize,
) -> Result<Vec<TraceRecord<T>>, SolverError> {
    let cfg = plan.solver.config_for(
        channel,
        plan.solver.lambdas[lambda_index],
        plan.network.downlink_power_w,
    );
    let (_, s) = symbol_stream::<T>(plan, channel.num_ues(), setup, symbol);
    let mut records = Vec::new();
    let mut sink = |r: TraceRecord<T>| records.push(r);
    solver::solve(&lift_vec(&s), &channel.h_r, &cfg, None, Some(&mut sink))?;
    Ok(records)
}

/// Runs the full plan: setups × λ grid × symbols.
pub fn run_experiment<T: Real>(plan: &ExperimentPlan) -> Result<RunResult, HarnessError> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads)
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    pool.install(|| run_experiment_in_pool::<T>(plan))
}

fn run_experiment_in_pool<T: Real>(plan: &ExperimentPlan) -> Result<RunResult, HarnessError> {
    let precoders = plan.reported_precoders();
    let lambdas = &plan.solver.lambdas;
    let k = plan.network.num_ues;
    let m = plan.network.num_antennas();
    // tallies[λ][setup]
    let mut tallies: Vec<Vec<Tally>> = vec![Vec::with_capacity(plan.num_setups); lambdas.len()];

    for setup in 0..plan.num_setups {
        let channel = setup_channel::<T>(plan, setup)?;
        for (li, &lambda) in lambdas.iter().enumerate() {
            let tally = run_cell(plan, &channel, setup, li);
            let bits = tally.symbols as f64 * 2.0 * k as f64;
            let green_errors: u64 = tally.errors[0].iter().sum();
            info!(
                "setup {}/{} lambda {}: {} symbols, GREEN BER {:.5}, avg active {:.2}/{}",
                setup + 1,
                plan.num_setups,
                lambda,
                tally.symbols,
                green_errors as f64 / bits,
                tally.green_active_sum as f64 / tally.symbols as f64,
                m
            );
            tallies[li].push(tally);
        }
    }

    let total_symbols: u64 = tallies.iter().flatten().map(|t| t.symbols).sum();
    let invocations = total_symbols * precoders.len() as u64;
    let failures: u64 = tallies
        .iter()
        .flatten()
        .flat_map(|t| t.failures.iter())
        .sum();
    let rate = failures as f64 / invocations.max(1) as f64;
    if rate > MAX_FAILURE_RATE {
        return Err(HarnessError::FailureRate {
            failures,
            total: invocations,
            rate,
            limit: MAX_FAILURE_RATE,
        });
    }

    Ok(aggregate(plan, &precoders, &tallies, total_symbols, k, m))
}

fn aggregate(
    plan: &ExperimentPlan,
    precoders: &[PrecoderKind],
    tallies: &[Vec<Tally>],
    total_symbols: u64,
    k: usize,
    m: usize,
) -> RunResult {
    let bits = plan.bits_per_ue as f64;
    let setups = plan.num_setups as f64;
    let mut entries = Vec::new();
    let mut activity = Vec::new();
    let mut nanos = vec![0u64; precoders.len()];
    for (li, &lambda) in plan.solver.lambdas.iter().enumerate() {
        let cells = &tallies[li];
        for (p, &kind) in precoders.iter().enumerate() {
            let mut per_ue = vec![0.0; k];
            let mut per_setup = Vec::with_capacity(cells.len());
            for cell in cells {
                let mut setup_sum = 0.0;
                for (acc, &e) in per_ue.iter_mut().zip(&cell.errors[p]) {
                    let ber = e as f64 / bits;
                    *acc += ber;
                    setup_sum += ber;
                }
                per_setup.push(setup_sum / k as f64);
            }
            for v in per_ue.iter_mut() {
                *v /= setups;
            }
            let mut ranked = per_ue.clone();
            ranked.sort_by(|a, b| a.total_cmp(b));
            let overall = per_ue.iter().sum::<f64>() / k as f64;
            entries.push(PrecoderResult {
                lambda,
                precoder: kind,
                per_ue_avg_ber: per_ue,
                per_ue_ranked_ber: ranked,
                overall_avg_ber: overall,
                per_setup_overall_ber: per_setup,
                failures: cells.iter().map(|c| c.failures[p]).sum(),
            });
        }
        let per_setup_active: Vec<f64> = cells
            .iter()
            .map(|c| c.green_active_sum as f64 / c.symbols as f64)
            .collect();
        activity.push(LambdaActivity {
            lambda,
            avg_active_antennas: per_setup_active.iter().sum::<f64>() / setups,
            per_setup_active,
            fallbacks: cells.iter().map(|c| c.fallbacks).sum(),
        });
        for cell in cells {
            for (acc, n) in nanos.iter_mut().zip(&cell.nanos) {
                *acc += n;
            }
        }
    }
    let timings_s = precoders
        .iter()
        .zip(&nanos)
        .map(|(p, &n)| (p.name().to_string(), n as f64 * 1e-9))
        .collect();
    RunResult {
        num_antennas: m,
        num_ues: k,
        precoders: precoders.to_vec(),
        entries,
        activity,
        timings_s,
        seed_manifest: SeedManifest::new(plan.master_seed),
        aligned_mask_violations: tallies
            .iter()
            .flatten()
            .map(|t| t.aligned_mask_violations)
            .sum(),
        acr_count_violations: tallies
            .iter()
            .flatten()
            .map(|t| t.acr_count_violations)
            .sum(),
        total_symbols,
    }
}

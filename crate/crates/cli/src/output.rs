//! CSV tables and the run manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use green_precoding::harness::SeedManifest;
use green_precoding::RunResult;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const BER_FILE: &str = "ber_per_ue.csv";
pub const ACTIVITY_FILE: &str = "antenna_activity.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_FILE: &str = "trace.csv";

#[derive(Serialize)]
struct BerRow<'a> {
    lambda: f64,
    precoder: &'a str,
    ue_rank: usize,
    avg_ber: f64,
}

#[derive(Serialize)]
struct ActivityRow<'a> {
    lambda: f64,
    avg_active_antennas: f64,
    precoder: &'a str,
    overall_avg_ber: f64,
}

/// One row per (λ, precoder, UE rank), UEs ranked by ascending BER.
pub fn ber_csv(result: &RunResult) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in &result.entries {
        for (rank, &ber) in e.per_ue_ranked_ber.iter().enumerate() {
            w.serialize(BerRow {
                lambda: e.lambda,
                precoder: e.precoder.name(),
                ue_rank: rank + 1,
                avg_ber: ber,
            })?;
        }
    }
    finish(w)
}

/// One row per (λ, precoder); the activity column is the green precoder's.
pub fn activity_csv(result: &RunResult) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in &result.entries {
        let active = result
            .activity_for(e.lambda)
            .map(|a| a.avg_active_antennas)
            .unwrap_or(f64::NAN);
        w.serialize(ActivityRow {
            lambda: e.lambda,
            avg_active_antennas: active,
            precoder: e.precoder.name(),
            overall_avg_ber: e.overall_avg_ber,
        })?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub config: &'a RunConfig,
    pub seeds: &'a SeedManifest,
    pub versions: Versions,
    pub timings_s: &'a std::collections::BTreeMap<String, f64>,
    pub wall_clock_s: f64,
    pub total_symbols: u64,
    pub precoder_failures: Vec<(String, u64)>,
    pub all_off_fallbacks: Vec<(f64, u64)>,
    pub aligned_mask_violations: u64,
    pub acr_count_violations: u64,
}

#[derive(Serialize)]
pub struct Versions {
    pub green_precoding: &'static str,
    pub greenprec_cli: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            green_precoding: green_precoding::VERSION,
            greenprec_cli: env!("CARGO_PKG_VERSION"),
        }
    }
}

impl<'a> Manifest<'a> {
    pub fn new(config: &'a RunConfig, result: &'a RunResult, wall_clock_s: f64) -> Self {
        let mut failures: Vec<(String, u64)> = result
            .precoders
            .iter()
            .map(|p| (p.name().to_string(), 0))
            .collect();
        for e in &result.entries {
            if let Some(slot) = failures.iter_mut().find(|(n, _)| n == e.precoder.name()) {
                slot.1 += e.failures;
            }
        }
        Self {
            config,
            seeds: &result.seed_manifest,
            versions: Versions::default(),
            timings_s: &result.timings_s,
            wall_clock_s,
            total_symbols: result.total_symbols,
            precoder_failures: failures,
            all_off_fallbacks: result
                .activity
                .iter()
                .map(|a| (a.lambda, a.fallbacks))
                .collect(),
            aligned_mask_violations: result.aligned_mask_violations,
            acr_count_violations: result.acr_count_violations,
        }
    }
}

/// Writes the two CSV tables and the manifest into `dir`.
pub fn write_all(
    dir: &Path,
    config: &RunConfig,
    result: &RunResult,
    wall_clock_s: f64,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(BER_FILE), ber_csv(result)?)?;
    fs::write(dir.join(ACTIVITY_FILE), activity_csv(result)?)?;
    let manifest = Manifest::new(config, result, wall_clock_s);
    let mut f = fs::File::create(dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(&mut f, &manifest)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(f)?;
    Ok(())
}

//! Command implementations behind the `greenprec` binary.

pub mod config;
pub mod output;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use green_precoding::harness::{setup_channel, trace_symbol};
use green_precoding::oracle::{prox_check, ProxCheckReport};
use green_precoding::{run_experiment, ExperimentPlan, Real, RunResult};
use log::info;
use serde::Serialize;
use thiserror::Error;

use config::{Overrides, Precision, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 for configuration problems, 2 for everything that fails while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            _ => 2,
        }
    }
}

/// Defaults, then the optional file, then `GREENPREC_*` variables, then flags.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    cfg.apply_overrides(overrides);
    Ok(cfg)
}

/// Parses and validates, returning the resolved config as TOML.
pub fn cmd_validate(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validated_plan()?;
    Ok(cfg.to_toml())
}

/// Runs the plan in the configured precision.
pub fn execute(cfg: &RunConfig) -> Result<RunResult, CliError> {
    let plan = cfg.validated_plan()?;
    let result = match cfg.precision {
        Precision::F64 => run_experiment::<f64>(&plan),
        Precision::F32 => run_experiment::<f32>(&plan),
    };
    result.map_err(|e| match e {
        green_precoding::HarnessError::InvalidPlan { .. } => CliError::Validation(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })
}

/// Full `run` command: simulate, then write every output file. Nothing is
/// written when the simulation fails.
pub fn cmd_run(cfg: &RunConfig, out_dir: &Path, trace: bool) -> Result<RunResult, CliError> {
    let started = Instant::now();
    let result = execute(cfg)?;
    let wall = started.elapsed().as_secs_f64();
    output::write_all(out_dir, cfg, &result, wall)?;
    if trace {
        let plan = cfg.validated_plan()?;
        let text = match cfg.precision {
            Precision::F64 => trace_csv::<f64>(&plan)?,
            Precision::F32 => trace_csv::<f32>(&plan)?,
        };
        fs::write(out_dir.join(output::TRACE_FILE), text)?;
    }
    info!("wrote results to {} in {wall:.1} s", out_dir.display());
    Ok(result)
}

#[derive(Serialize)]
struct TraceRow {
    lambda: f64,
    iter: usize,
    objective: f64,
    residual: f64,
}

/// Solver trace of the first symbol of setup 0 for every λ.
fn trace_csv<T: Real>(plan: &ExperimentPlan) -> Result<Vec<u8>, CliError> {
    let channel = setup_channel::<T>(plan, 0).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (li, &lambda) in plan.solver.lambdas.iter().enumerate() {
        let records =
            trace_symbol(plan, &channel, 0, li, 0).map_err(|e| CliError::Runtime(e.to_string()))?;
        for r in records {
            w.serialize(TraceRow {
                lambda,
                iter: r.iter,
                objective: r.objective.as_f64(),
                residual: r.residual.as_f64(),
            })?;
        }
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

/// Prox oracle agreement check; fails when either tolerance is exceeded.
pub fn cmd_prox_check(cases: usize, seed: u64) -> Result<ProxCheckReport, CliError> {
    if cases == 0 {
        return Err(CliError::Validation("cases must be >= 1".into()));
    }
    let report = prox_check(cases, seed);
    if report.passed() {
        Ok(report)
    } else {
        Err(CliError::Runtime(format!(
            "prox check failed: linf deviation {:e} (tolerance {:e}), group deviation {:e} (tolerance {:e})",
            report.max_linf_deviation,
            ProxCheckReport::LINF_TOLERANCE,
            report.max_group_deviation,
            ProxCheckReport::GROUP_TOLERANCE
        )))
    }
}

/// Writes the channel of `setup` in the text dump format.
pub fn cmd_dump_channel(
    cfg: &RunConfig,
    setup: usize,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    let plan = cfg.validated_plan()?;
    if setup >= plan.num_setups {
        return Err(CliError::Validation(format!(
            "setup {setup} out of range: plan has {} setups",
            plan.num_setups
        )));
    }
    let channel =
        setup_channel::<f64>(&plan, setup).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut buf = Vec::new();
    channel
        .write_text(&mut buf)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    match out {
        Some(p) => fs::write(p, buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

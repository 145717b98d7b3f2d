//! Flat run configuration: every network, solver and plan knob as one
//! key-value table, loaded from TOML or JSON with environment and flag
//! overrides layered on top.

use std::fs;
use std::path::Path;

use green_precoding::{BaselineKind, ExperimentPlan, NetworkConfig, PrecoderKind, SolverSettings};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Prefix for environment overrides, e.g. `GREENPREC_NUM_UES=8`.
pub const ENV_PREFIX: &str = "GREENPREC_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // geometry and propagation
    pub area_side_m: f64,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_ues: usize,
    pub bandwidth_hz: f64,
    pub height_diff_m: f64,
    pub pathloss_exponent: f64,
    pub gain_at_1km_db: f64,
    pub shadow_std_db: f64,
    pub angular_std_azimuth_deg: f64,
    pub angular_std_elevation_deg: f64,
    pub downlink_power_w: f64,
    pub noise_figure_db: f64,
    pub normalize_to_noise: bool,
    // solver
    pub lambdas: Vec<f64>,
    pub gamma_scale: f64,
    pub psi: f64,
    pub max_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub warm_start: bool,
    // precoders and Monte Carlo plan
    pub tau_off: f64,
    pub rzf_regularizer_scale: f64,
    pub bits_per_ue: usize,
    pub num_setups: usize,
    pub precoders: Vec<PrecoderKind>,
    pub master_seed: u64,
    pub threads: usize,
    pub precision: Precision,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_plan(&ExperimentPlan::default(), Precision::F64)
    }
}

impl RunConfig {
    pub fn from_plan(plan: &ExperimentPlan, precision: Precision) -> Self {
        let n = &plan.network;
        let s = &plan.solver;
        Self {
            area_side_m: n.area_side_m,
            num_aps: n.num_aps,
            antennas_per_ap: n.antennas_per_ap,
            num_ues: n.num_ues,
            bandwidth_hz: n.bandwidth_hz,
            height_diff_m: n.height_diff_m,
            pathloss_exponent: n.pathloss_exponent,
            gain_at_1km_db: n.gain_at_1km_db,
            shadow_std_db: n.shadow_std_db,
            angular_std_azimuth_deg: n.angular_std_azimuth_deg,
            angular_std_elevation_deg: n.angular_std_elevation_deg,
            downlink_power_w: n.downlink_power_w,
            noise_figure_db: n.noise_figure_db,
            normalize_to_noise: n.normalize_to_noise,
            lambdas: s.lambdas.clone(),
            gamma_scale: s.gamma_scale,
            psi: s.psi,
            max_iters: s.max_iters,
            tolerance: s.tolerance,
            warm_start: s.warm_start,
            tau_off: plan.tau_off,
            rzf_regularizer_scale: plan.rzf_regularizer_scale,
            bits_per_ue: plan.bits_per_ue,
            num_setups: plan.num_setups,
            precoders: plan.precoders.clone(),
            master_seed: plan.master_seed,
            threads: plan.threads,
            precision,
        }
    }

    pub fn to_plan(&self) -> ExperimentPlan {
        ExperimentPlan {
            network: NetworkConfig {
                area_side_m: self.area_side_m,
                num_aps: self.num_aps,
                antennas_per_ap: self.antennas_per_ap,
                num_ues: self.num_ues,
                bandwidth_hz: self.bandwidth_hz,
                height_diff_m: self.height_diff_m,
                pathloss_exponent: self.pathloss_exponent,
                gain_at_1km_db: self.gain_at_1km_db,
                shadow_std_db: self.shadow_std_db,
                angular_std_azimuth_deg: self.angular_std_azimuth_deg,
                angular_std_elevation_deg: self.angular_std_elevation_deg,
                downlink_power_w: self.downlink_power_w,
                noise_figure_db: self.noise_figure_db,
                normalize_to_noise: self.normalize_to_noise,
            },
            solver: SolverSettings {
                lambdas: self.lambdas.clone(),
                gamma_scale: self.gamma_scale,
                psi: self.psi,
                max_iters: self.max_iters,
                tolerance: self.tolerance,
                warm_start: self.warm_start,
            },
            tau_off: self.tau_off,
            rzf_regularizer_scale: self.rzf_regularizer_scale,
            bits_per_ue: self.bits_per_ue,
            num_setups: self.num_setups,
            precoders: self.precoders.clone(),
            master_seed: self.master_seed,
            threads: self.threads,
        }
    }

    /// Converts to a plan and runs every range check.
    pub fn validated_plan(&self) -> Result<ExperimentPlan, CliError> {
        let plan = self.to_plan();
        plan.validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(plan)
    }

    /// Parses TOML, or JSON when the text starts with `{`. A JSON object that
    /// carries a `config` member (a run manifest) yields that member.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with('{') {
            let mut value: Value =
                serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
            serde_json::from_value(value).map_err(|e| CliError::Validation(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| CliError::Validation(e.message().to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Applies `GREENPREC_<KEY>` overrides from `vars`. List keys take comma
    /// separated values; other values are read as JSON literals and fall back
    /// to plain strings.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut value = serde_json::to_value(&*self).expect("config serializes");
        let table = value.as_object_mut().expect("config is an object");
        let mut touched = false;
        for (name, raw) in vars {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if key == "config" {
                continue;
            }
            let parsed = match key.as_str() {
                "lambdas" => Value::Array(
                    parse_list(&raw)
                        .map(|v| {
                            v.parse::<f64>().map(Value::from).map_err(|_| {
                                CliError::Validation(format!("{name}: {v:?} is not a number"))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                ),
                "precoders" => Value::Array(
                    parse_list(&raw)
                        .map(|v| Value::String(v.to_string()))
                        .collect(),
                ),
                _ => serde_json::from_str(&raw).unwrap_or(Value::String(raw.clone())),
            };
            table.insert(key, parsed);
            touched = true;
        }
        if touched {
            *self = serde_json::from_value(value)
                .map_err(|e| CliError::Validation(format!("environment override: {e}")))?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(l) = &o.lambdas {
            self.lambdas = l.clone();
        }
        if let Some(b) = o.bits_per_ue {
            self.bits_per_ue = b;
        }
        if let Some(s) = o.setups {
            self.num_setups = s;
        }
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(p) = &o.precoders {
            self.precoders = p.clone();
        }
        if let Some(t) = o.threads {
            self.threads = t;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }
}

/// Command-line overrides; `None` keeps the file or environment value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub lambdas: Option<Vec<f64>>,
    pub bits_per_ue: Option<usize>,
    pub setups: Option<usize>,
    pub seed: Option<u64>,
    pub precoders: Option<Vec<PrecoderKind>>,
    pub threads: Option<usize>,
}

fn parse_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Every precoder name accepted in configs and flags.
pub fn precoder_names() -> Vec<&'static str> {
    std::iter::once(PrecoderKind::Green.name())
        .chain(BaselineKind::ALL.iter().map(|b| b.name()))
        .collect()
}

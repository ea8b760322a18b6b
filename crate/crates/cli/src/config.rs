//! Experiment configuration: schema, validation, and content digest.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gbs_core::circuit::CircuitSpec;
use gbs_core::samplers::MockupKind;
use gbs_core::{GbsError, Result};

/// The config schema version this binary understands.
pub const SCHEMA_VERSION: u32 = 1;

/// One sampler to run and how many samples to draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerJob {
    /// `"exact"` or a mockup id (`squashed`, `thermal`, `distinguishable`,
    /// `ips`, `greedy`).
    pub sampler: String,
    pub count: usize,
}

/// MPS pipeline parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpsJob {
    /// Bond dimension cap (≥ 1).
    pub chi: usize,
    /// Local Fock cutoff; defaults to the heuristic choice when omitted.
    #[serde(default)]
    pub local_dim: Option<usize>,
    /// Optional transmission rescaling in (0, 1], mean photon number held
    /// fixed; 1 (or omitted) leaves the instance unchanged.
    #[serde(default)]
    pub transmission_scale: Option<f64>,
    pub samples: usize,
    /// Also draw the χ = 0 displaced-thermal baseline batch.
    #[serde(default)]
    pub baseline: bool,
}

/// Validation battery selections.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationJob {
    /// Correlation orders to benchmark (subset of {2, 3}).
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    /// Subsystem for the Bayesian score; all modes when omitted.
    #[serde(default)]
    pub bayesian_subsystem: Option<Vec<usize>>,
    /// Adversary hypothesis: `"squashed"` or `"thermal"`.
    #[serde(default = "default_adversary")]
    pub adversary: String,
}

fn default_orders() -> Vec<usize> {
    vec![2]
}

fn default_adversary() -> String {
    "squashed".to_string()
}

/// Cost-model job: χ(ε) fit over a sweep plus a runtime estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostJob {
    /// Bond dimensions at which the analytic truncation error is evaluated.
    pub chi_sweep: Vec<usize>,
    /// Target truncation error for the extrapolation.
    pub eps_target: f64,
    /// Local Fock cutoff entering the runtime law (never defaulted).
    pub local_dim: usize,
    /// Calibrated constant in front of the asymptotic law.
    #[serde(default = "default_prefactor")]
    pub prefactor: f64,
    /// Baseline name from the registry.
    #[serde(default = "default_baseline")]
    pub baseline: String,
    /// Optional JSON baseline registry path; built-ins when omitted.
    #[serde(default)]
    pub baselines_path: Option<String>,
    /// Optional override instance (frontier-scale anchors): `(M, log10 χ,
    /// N_eff)` replacing the desk instance in the runtime estimate.
    #[serde(default)]
    pub anchor: Option<CostAnchor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostAnchor {
    pub num_modes: f64,
    pub log10_chi: f64,
    pub n_eff: f64,
}

fn default_prefactor() -> f64 {
    1.0
}

fn default_baseline() -> String {
    "exascale".to_string()
}

/// A full experiment description; the single source of truth for a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment_id: String,
    /// Root seed; every stage derives its own labeled stream from it.
    pub seed: u64,
    /// Inline circuit description (exactly one of `circuit`/`circuit_path`).
    #[serde(default)]
    pub circuit: Option<CircuitSpec>,
    /// Path to a circuit JSON file, relative to the config file.
    #[serde(default)]
    pub circuit_path: Option<String>,
    #[serde(default)]
    pub samplers: Vec<SamplerJob>,
    #[serde(default)]
    pub mps: Option<MpsJob>,
    #[serde(default)]
    pub validation: Option<ValidationJob>,
    #[serde(default)]
    pub cost: Option<CostJob>,
    /// Output directory, relative to the config file unless absolute.
    pub output_dir: String,
}

impl ExperimentConfig {
    /// Schema validation; called before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(GbsError::Format(format!(
                "config schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.experiment_id.is_empty() {
            return Err(GbsError::Format("experiment_id must be non-empty".to_string()));
        }
        match (&self.circuit, &self.circuit_path) {
            (Some(spec), None) => spec.validate()?,
            (None, Some(_)) => {}
            (None, None) if self.samplers.is_empty()
                && self.mps.is_none()
                && self.validation.is_none()
                && self.cost.is_none() => {}
            (None, None) => {
                return Err(GbsError::Format(
                    "a circuit (inline or circuit_path) is required for a non-empty pipeline"
                        .to_string(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(GbsError::Format(
                    "give exactly one of circuit / circuit_path".to_string(),
                ))
            }
        }
        for job in &self.samplers {
            if job.sampler != "exact" && MockupKind::from_str(&job.sampler).is_err() {
                return Err(GbsError::Format(format!(
                    "unknown sampler '{}'",
                    job.sampler
                )));
            }
            if job.count == 0 {
                return Err(GbsError::Format(format!(
                    "sampler '{}' has count 0",
                    job.sampler
                )));
            }
        }
        if let Some(mps) = &self.mps {
            if mps.chi == 0 {
                return Err(GbsError::Format("mps.chi must be ≥ 1".to_string()));
            }
            if mps.samples == 0 {
                return Err(GbsError::Format("mps.samples must be ≥ 1".to_string()));
            }
            if let Some(s) = mps.transmission_scale {
                if !(s > 0.0 && s <= 1.0) {
                    return Err(GbsError::Format(format!(
                        "mps.transmission_scale {s} outside (0, 1]"
                    )));
                }
            }
        }
        if let Some(v) = &self.validation {
            if v.orders.is_empty() || v.orders.iter().any(|o| !(2..=3).contains(o)) {
                return Err(GbsError::Format(
                    "validation.orders must be a non-empty subset of {2, 3}".to_string(),
                ));
            }
            if v.adversary != "squashed" && v.adversary != "thermal" {
                return Err(GbsError::Format(format!(
                    "unknown adversary '{}' (expected squashed or thermal)",
                    v.adversary
                )));
            }
        }
        if let Some(c) = &self.cost {
            if c.chi_sweep.len() < 3 {
                return Err(GbsError::Format(
                    "cost.chi_sweep needs at least 3 bond dimensions".to_string(),
                ));
            }
            if !(c.eps_target > 0.0 && c.eps_target < 1.0) {
                return Err(GbsError::Format(format!(
                    "cost.eps_target {} outside (0, 1)",
                    c.eps_target
                )));
            }
            if c.local_dim == 0 {
                return Err(GbsError::Format("cost.local_dim must be ≥ 1".to_string()));
            }
        }
        Ok(())
    }

    /// Content digest of the canonicalized config; recorded in every output.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canonical.as_bytes());
        hex::encode(&h.finalize()[..16])
    }
}

/// A parsed config plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    /// Circuit from either source, validated.
    pub fn circuit(&self) -> Result<CircuitSpec> {
        let spec = match (&self.config.circuit, &self.config.circuit_path) {
            (Some(spec), None) => spec.clone(),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(self.resolve(path))?;
                let spec: CircuitSpec = serde_json::from_str(&text)
                    .map_err(|e| GbsError::Format(format!("circuit file: {e}")))?;
                spec
            }
            _ => {
                return Err(GbsError::Format(
                    "no circuit configured for this pipeline".to_string(),
                ))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }
}

/// Loads and schema-validates a config file.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| GbsError::Format(format!("config: {e}")))?;
    config.validate()?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedConfig { config, base_dir })
}

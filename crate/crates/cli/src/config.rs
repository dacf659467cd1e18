//! Config documents: JSON in, validated parameter records out.
//!
//! Every run fingerprints its effective configuration: the document is
//! parsed to a JSON value (object keys sort canonically), the seed override
//! is applied, and the SHA-256 of the compact canonical serialization is the
//! `config_digest` embedded in reports. Whitespace and key order do not
//! change the digest; the effective seed does.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ou_impact::simulation::Perturbation;
use ou_impact::ModelParams;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCfg {
    pub mu: f64,
    pub s0: f64,
    pub delta: f64,
    pub horizon: f64,
    pub phi0: f64,
}

impl ModelCfg {
    pub fn to_params(&self) -> Result<ModelParams, CliError> {
        validate_finite("model.mu", self.mu)?;
        validate_finite("model.s0", self.s0)?;
        validate_finite("model.phi0", self.phi0)?;
        validate_positive("model.delta", self.delta)?;
        validate_positive("model.horizon", self.horizon)?;
        ModelParams::new(self.mu, self.s0, self.delta, self.horizon, self.phi0)
            .map_err(|e| CliError::Validation(format!("model: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueConfig {
    pub model: ModelCfg,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub model: ModelCfg,
    pub n_steps: usize,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default)]
    pub policy: PolicyCfg,
    /// Optional perturbation study on common random numbers.
    #[serde(default)]
    pub perturbations: Vec<PerturbationCfg>,
    /// Optional per-path CSV dump (path_index, terminal_wealth, utility).
    #[serde(default)]
    pub per_path_csv: Option<String>,
    /// Which path the `--trace` CSV follows.
    #[serde(default)]
    pub trace_path_index: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyCfg {
    #[default]
    Optimal,
    Zero,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PerturbationCfg {
    Scale { factor: f64 },
    Lag { lag: f64 },
    Freeze,
}

impl PerturbationCfg {
    pub fn to_perturbation(self) -> Result<Perturbation, CliError> {
        Ok(match self {
            PerturbationCfg::Scale { factor } => {
                validate_finite("perturbations[].factor", factor)?;
                Perturbation::Scale(factor)
            }
            PerturbationCfg::Lag { lag } => {
                validate_finite("perturbations[].lag", lag)?;
                if lag < 0.0 {
                    return Err(CliError::Validation(
                        "perturbations[].lag: must be >= 0".to_string(),
                    ));
                }
                Perturbation::Lag(lag)
            }
            PerturbationCfg::Freeze => Perturbation::FreezeInitial,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointCase {
    pub alpha: f64,
    pub s: f64,
    pub t_end: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledCase {
    pub delta: f64,
    pub s: f64,
    pub t_end: f64,
    pub theta: f64,
    pub phi0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OraclesConfig {
    pub n: usize,
    /// Defaults to the standard 18-case grid when omitted.
    #[serde(default)]
    pub endpoint_cases: Option<Vec<EndpointCase>>,
    /// Defaults to the standard 36-case grid when omitted.
    #[serde(default)]
    pub coupled_cases: Option<Vec<CoupledCase>>,
}

impl OraclesConfig {
    pub fn endpoint_grid(&self) -> Vec<EndpointCase> {
        match &self.endpoint_cases {
            Some(cases) => cases.clone(),
            None => {
                let mut out = Vec::new();
                for &alpha in &[0.7, std::f64::consts::SQRT_2, 3.0] {
                    for &tau in &[0.25, 1.0, 4.0] {
                        for &(x, y) in &[(1.0, 0.0), (-2.0, 1.5)] {
                            out.push(EndpointCase {
                                alpha,
                                s: 0.0,
                                t_end: tau,
                                x,
                                y,
                            });
                        }
                    }
                }
                out
            }
        }
    }

    pub fn coupled_grid(&self) -> Vec<CoupledCase> {
        match &self.coupled_cases {
            Some(cases) => cases.clone(),
            None => {
                let mut out = Vec::new();
                for &delta in &[0.5, 1.0, 3.0] {
                    for &tau in &[0.25, 1.0, 4.0] {
                        for &theta in &[1.0, -2.0] {
                            for &phi0 in &[0.0, 0.7] {
                                out.push(CoupledCase {
                                    delta,
                                    s: 0.0,
                                    t_end: tau,
                                    theta,
                                    phi0,
                                });
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub asymptotics: AsymptoticsCfg,
    pub frictionless: FrictionlessCfg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsCfg {
    pub delta: f64,
    /// Horizon for the certainty-equivalent rate and Cesaro mean.
    pub horizon: f64,
    #[serde(default = "default_loose_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionlessCfg {
    pub mu: f64,
    pub s0: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub seed: u64,
    /// Depths to compare, ascending; each needs delta >= 1e3.
    pub deltas: Vec<f64>,
    #[serde(default = "default_max_ratio")]
    pub max_ratio: f64,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_loose_tol() -> f64 {
    1e-9
}

fn default_max_ratio() -> f64 {
    0.05
}

fn validate_finite(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{path}: must be finite, got {v}"
        )))
    }
}

fn validate_positive(path: &str, v: f64) -> Result<(), CliError> {
    validate_finite(path, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{path}: must be > 0, got {v}"
        )))
    }
}

/// Parses the raw document, applies an optional seed override to its `seed`
/// field, and returns the effective JSON value plus its canonical digest.
pub fn load_document(
    raw: &str,
    seed_override: Option<u64>,
) -> Result<(serde_json::Value, String), CliError> {
    let mut doc: serde_json::Value = serde_json::from_str(raw)
        .map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?;
    if let Some(seed) = seed_override {
        match doc.get_mut("seed") {
            Some(slot) => *slot = serde_json::json!(seed),
            None => {
                if let Some(fr) = doc.get_mut("frictionless").and_then(|f| f.get_mut("seed")) {
                    *fr = serde_json::json!(seed);
                } else {
                    return Err(CliError::Validation(
                        "--seed given but the config has no seed field".to_string(),
                    ));
                }
            }
        }
    }
    // serde_json maps are sorted; compact serialization is canonical
    let canonical = serde_json::to_string(&doc).expect("re-serializing parsed JSON");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = format!("{:x}", hasher.finalize());
    Ok((doc, digest))
}

/// Deserializes the effective document into a typed config with field-path
/// diagnostics on failure.
pub fn parse_config<T: serde::de::DeserializeOwned>(doc: serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(doc).map_err(|e| CliError::Validation(format!("config: {e}")))
}

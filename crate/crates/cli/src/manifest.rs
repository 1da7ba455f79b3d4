//! Experiment manifests: a flat JSON object describing one run.
//!
//! ```json
//! {"name": "baseline", "nu": 0.09, "sigma": 0.15, "q0": 1, "V0": 1,
//!  "horizon": 100, "steps": 50000, "paths": 1, "seed": 7}
//! ```
//!
//! Missing optional keys fall back to per-command defaults; command-line
//! flags override both.

use serde::Serialize;
use serde_json::{Map, Value};

use callmoney_core::{derive_params, ModelParams, ShockCoupling, SimConfig};

use crate::error::CliError;

/// Keys accepted in a manifest document.
pub const KEYS: [&str; 14] = [
    "name",
    "nu",
    "sigma",
    "q0",
    "V0",
    "S0",
    "horizon",
    "steps",
    "record_every",
    "paths",
    "seed",
    "permissive",
    "decouple_shocks",
    "outputs",
];

/// Partially specified manifest. Later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ManifestLayer {
    pub name: Option<String>,
    pub nu: Option<f64>,
    pub sigma: Option<f64>,
    pub q0: Option<f64>,
    pub v0: Option<f64>,
    pub s0: Option<f64>,
    pub horizon: Option<f64>,
    pub steps: Option<u64>,
    pub record_every: Option<u64>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub permissive: Option<bool>,
    pub decouple_shocks: Option<bool>,
    pub outputs: Option<Vec<String>>,
}

impl ManifestLayer {
    /// Reads a layer from a JSON document, rejecting unknown keys and
    /// mistyped values with the offending key in the message.
    pub fn from_document(document: &str) -> Result<ManifestLayer, CliError> {
        let value: Value = serde_json::from_str(document)
            .map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(CliError::Usage("config must be a JSON object".into()));
        };
        if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("config.{key}: unknown key")));
        }
        Ok(ManifestLayer {
            name: string(&map, "name")?,
            nu: number(&map, "nu")?,
            sigma: number(&map, "sigma")?,
            q0: number(&map, "q0")?,
            v0: number(&map, "V0")?,
            s0: number(&map, "S0")?,
            horizon: number(&map, "horizon")?,
            steps: count(&map, "steps")?,
            record_every: count(&map, "record_every")?,
            paths: count(&map, "paths")?,
            seed: count(&map, "seed")?,
            permissive: flag(&map, "permissive")?,
            decouple_shocks: flag(&map, "decouple_shocks")?,
            outputs: names(&map, "outputs")?,
        })
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(&self, top: &ManifestLayer) -> ManifestLayer {
        ManifestLayer {
            name: top.name.clone().or_else(|| self.name.clone()),
            nu: top.nu.or(self.nu),
            sigma: top.sigma.or(self.sigma),
            q0: top.q0.or(self.q0),
            v0: top.v0.or(self.v0),
            s0: top.s0.or(self.s0),
            horizon: top.horizon.or(self.horizon),
            steps: top.steps.or(self.steps),
            record_every: top.record_every.or(self.record_every),
            paths: top.paths.or(self.paths),
            seed: top.seed.or(self.seed),
            permissive: top.permissive.or(self.permissive),
            decouple_shocks: top.decouple_shocks.or(self.decouple_shocks),
            outputs: top.outputs.clone().or_else(|| self.outputs.clone()),
        }
    }

    /// Validates the layer into a complete manifest. `nu`, `sigma`,
    /// `horizon` and `steps` are required; everything else has a default.
    pub fn build(&self) -> Result<ExperimentManifest, CliError> {
        let nu = required(self.nu, "nu")?;
        let sigma = required(self.sigma, "sigma")?;
        let horizon = required(self.horizon, "horizon")?;
        let steps = required(self.steps, "steps")?;
        let permissive = self.permissive.unwrap_or(false);
        let (q0, v0, s0) = (
            self.q0.unwrap_or(1.0),
            self.v0.unwrap_or(1.0),
            self.s0.unwrap_or(1.0),
        );
        let params = derive_params(q0, v0, s0, nu, sigma, !permissive)?;
        let record_every = self.record_every.unwrap_or((steps / 1000).max(1));
        let sim = SimConfig::new(horizon, steps, record_every)?;
        let paths = self.paths.unwrap_or(1);
        if paths == 0 {
            return Err(callmoney_core::ModelError::Parameter {
                name: "paths",
                value: 0.0,
                reason: "must be >= 1",
            }
            .into());
        }
        Ok(ExperimentManifest {
            name: self.name.clone().unwrap_or_else(|| "experiment".into()),
            nu,
            sigma,
            q0,
            v0,
            s0,
            horizon,
            steps,
            record_every,
            paths,
            seed: self.seed.unwrap_or(0),
            permissive,
            decouple_shocks: self.decouple_shocks.unwrap_or(false),
            outputs: self.outputs.clone().unwrap_or_default(),
            params,
            sim,
        })
    }
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("config.{key}: missing required key")))
}

fn invalid(key: &str, expected: &str, got: &Value) -> CliError {
    CliError::Usage(format!("config.{key}: expected {expected}, got {got}"))
}

fn number(map: &Map<String, Value>, key: &str) -> Result<Option<f64>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| invalid(key, "a number", v)),
    }
}

fn count(map: &Map<String, Value>, key: &str) -> Result<Option<u64>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| invalid(key, "a non-negative integer", v)),
    }
}

fn flag(map: &Map<String, Value>, key: &str) -> Result<Option<bool>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_bool()
            .map(Some)
            .ok_or_else(|| invalid(key, "a boolean", v)),
    }
}

fn string(map: &Map<String, Value>, key: &str) -> Result<Option<String>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(Value::String(s)) if !s.is_empty() && is_file_stem(s) => Ok(Some(s.clone())),
        Some(v) => Err(invalid(key, "a file-name-safe string", v)),
    }
}

fn names(map: &Map<String, Value>, key: &str) -> Result<Option<Vec<String>>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| invalid(key, "a list of strings", v))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
        Some(v) => Err(invalid(key, "a list of strings", v)),
    }
}

fn is_file_stem(s: &str) -> bool {
    s.chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && !s.starts_with('.')
}

/// A complete, validated experiment.
///
/// Serializing a manifest gives a document that [`parse_config`] turns back
/// into the same manifest, which is what the CSV headers carry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentManifest {
    pub name: String,
    pub nu: f64,
    pub sigma: f64,
    pub q0: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    #[serde(rename = "S0")]
    pub s0: f64,
    pub horizon: f64,
    pub steps: u64,
    pub record_every: u64,
    pub paths: u64,
    pub seed: u64,
    pub permissive: bool,
    pub decouple_shocks: bool,
    pub outputs: Vec<String>,
    #[serde(skip)]
    pub params: ModelParams,
    #[serde(skip)]
    pub sim: SimConfig,
}

impl ExperimentManifest {
    pub fn coupling(&self) -> ShockCoupling {
        if self.decouple_shocks {
            ShockCoupling::Decoupled
        } else {
            ShockCoupling::Common
        }
    }

    /// Compact single-line JSON echo.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    /// Same experiment with a different grid.
    pub fn with_sim(&self, horizon: f64, steps: u64, record_every: u64) -> Result<Self, CliError> {
        let mut m = self.clone();
        m.sim = SimConfig::new(horizon, steps, record_every)?;
        m.horizon = horizon;
        m.steps = steps;
        m.record_every = record_every;
        Ok(m)
    }
}

/// Parses and validates a complete manifest document.
pub fn parse_config(document: &str) -> Result<ExperimentManifest, CliError> {
    ManifestLayer::from_document(document)?.build()
}

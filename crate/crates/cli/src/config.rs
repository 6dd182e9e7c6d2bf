//! JSON system configuration, `schema: 1`.

use std::path::Path;

use affmf::systems;
use affmf::{AffineIFS, Bernoulli, Mat2, Vec2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    /// Row-major `[a, b, c, d]` for `[[a, b], [c, d]]`.
    pub matrices: Vec<[f64; 4]>,
    pub translations: Vec<[f64; 2]>,
    pub probabilities: Vec<f64>,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

/// A validated configuration with the objects built from it.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub config: SystemConfig,
    pub ifs: AffineIFS,
    pub mu: Bernoulli,
    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<SystemConfig, ConfigError> {
        serde_json::from_str(text)
            .map_err(|e| err(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn from_reference(sys: &systems::ReferenceSystem) -> SystemConfig {
        SystemConfig {
            schema: SCHEMA_VERSION,
            name: Some(sys.name.to_string()),
            matrices: sys
                .ifs
                .matrices()
                .iter()
                .map(|m| [m.a, m.b, m.c, m.d])
                .collect(),
            translations: sys.ifs.translations().iter().map(|v| [v.x, v.y]).collect(),
            probabilities: sys.mu.probs().to_vec(),
            labels: Vec::new(),
            seed: 0,
            depth: None,
            tol: None,
        }
    }

    pub fn validate(self) -> Result<LoadedSystem, ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(err(format!(
                "field `schema`: expected {SCHEMA_VERSION}, got {}",
                self.schema
            )));
        }
        let n = self.matrices.len();
        if n == 0 {
            return Err(err("field `matrices`: at least one map is required"));
        }
        if self.translations.len() != n {
            return Err(err(format!(
                "field `translations`: expected {n} entries, got {}",
                self.translations.len()
            )));
        }
        if self.probabilities.len() != n {
            return Err(err(format!(
                "field `probabilities`: expected {n} entries, got {}",
                self.probabilities.len()
            )));
        }
        if !self.labels.is_empty() && self.labels.len() != n {
            return Err(err(format!(
                "field `labels`: expected {n} entries, got {}",
                self.labels.len()
            )));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(err(format!("field `tol`: must lie in (0, 1), got {tol}")));
            }
        }
        if self.depth == Some(0) {
            return Err(err("field `depth`: must be positive"));
        }
        let mut matrices = Vec::with_capacity(n);
        for (i, m) in self.matrices.iter().enumerate() {
            let mat = Mat2::new(m[0], m[1], m[2], m[3]);
            if m.iter().any(|x| !x.is_finite()) {
                return Err(err(format!(
                    "field `matrices[{i}]`: entries must be finite"
                )));
            }
            if mat.det() == 0.0 {
                return Err(err(format!("field `matrices[{i}]`: matrix is singular")));
            }
            if mat.op_norm() >= 1.0 {
                return Err(err(format!(
                    "field `matrices[{i}]`: operator norm {} is not below 1",
                    mat.op_norm()
                )));
            }
            matrices.push(mat);
        }
        let translations = self
            .translations
            .iter()
            .map(|t| Vec2::new(t[0], t[1]))
            .collect();
        let ifs = AffineIFS::new(matrices, translations)
            .map_err(|e| err(format!("field `translations`: {e}")))?;
        let mu = Bernoulli::new(self.probabilities.clone())
            .map_err(|e| err(format!("field `probabilities`: {e}")))?;
        let canonical = serde_json::to_vec(&self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        let hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Ok(LoadedSystem {
            config: self,
            ifs,
            mu,
            hash,
        })
    }
}

/// Reads a config file, or a reference system written as `builtin:<name>`.
pub fn load(source: &str) -> Result<LoadedSystem, ConfigError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let sys = systems::by_name(name)
            .ok_or_else(|| err(format!("unknown builtin system `{name}`")))?;
        return SystemConfig::from_reference(&sys).validate();
    }
    let text =
        std::fs::read_to_string(Path::new(source)).map_err(|e| err(format!("{source}: {e}")))?;
    SystemConfig::from_json(&text)?.validate()
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cbf::ShieldConfig;
use crate::error::{Error, Result};
use crate::learner::{EpisodeSetup, Mode, PolicyKind, TrainConfig};
use crate::stl::parse;
use crate::world::WorldConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub mode: Mode,
    pub policy: PolicyKind,
    /// How many per-step episode logs to write.
    pub record_episodes: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            episodes: 100,
            mode: Mode::Shielded,
            policy: PolicyKind::Random,
            record_episodes: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            plots: true,
        }
    }
}

fn default_horizon() -> f64 {
    300.0
}

/// A complete experiment description (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    /// Task specification; empty for an unconstrained run.
    #[serde(default)]
    pub spec: String,
    /// Episode length `T` in time units.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub shield: ShieldConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| Error::config("<root>", e.to_string()))
    }

    /// Reads a JSON config and applies `path = value` overrides.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut v: Value = serde_json::from_str(&text)?;
        for (k, raw) in overrides {
            apply_override(&mut v, k, raw)?;
        }
        let cfg = Self::from_value(v)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every block and builds the episode setup.
    pub fn setup(&self) -> Result<EpisodeSetup> {
        self.train.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("horizon", "must be positive"));
        }
        let spec = parse(&self.spec)?;
        EpisodeSetup::new(self.world.clone(), spec, self.shield, self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        self.setup().map(|_| ())
    }
}

/// Sets the value at dot-separated `path` (creating objects as needed).
/// `raw` is parsed as JSON, falling back to a plain string.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(path, "empty path segment"));
    }
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| Error::config(path, format!("`{key}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(path, format!("index {idx} out of range ({len} items)")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                let prefix = keys[..i].join(".");
                return Err(Error::config(path, format!("`{prefix}` is not an object")));
            }
        };
    }
    unreachable!("path has at least one segment")
}

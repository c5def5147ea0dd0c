//! Run configuration: an optional JSON file whose fields are overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: Option<String>,
    pub shape: Option<String>,
    pub n: Option<f64>,
    pub k: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub quad_level: Option<usize>,
    pub analytic: Option<bool>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub grid: Option<String>,
    pub plane: Option<String>,
    pub indicators: Option<String>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    pub tau: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a config file; parse errors carry line and column.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, "{\n  \"k\": 10,\n  \"bogus\": 1\n}\n").unwrap();
        let err = format!("{:#}", RunConfig::load(&path).unwrap_err());
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn uppercase_m_field() {
        let c: RunConfig = serde_json::from_str(r#"{"M": 32, "shape": "pear"}"#).unwrap();
        assert_eq!(c.m, Some(32));
        assert_eq!(c.shape.as_deref(), Some("pear"));
    }
}

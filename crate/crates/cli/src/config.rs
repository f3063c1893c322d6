use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

pub const DEFAULT_CONFIG_FILE: &str = "kseq.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Defaults shared by every subcommand, echoed into each artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Significant decimal digits.
    pub precision: u32,
    pub tol: f64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision: 50,
            tol: 1e-30,
            seed: 1,
            format: Format::Json,
            out: None,
        }
    }
}

impl RunConfig {
    /// Reads `path` if given, otherwise `kseq.json` in the working directory
    /// when present, otherwise the built-in defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let (path, required) = match path {
            Some(p) => (p.to_path_buf(), true),
            None => (PathBuf::from(DEFAULT_CONFIG_FILE), false),
        };
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display())),
            Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => Ok(RunConfig::default()),
            Err(e) => Err(format!("config {}: {e}", path.display())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"precision": 80, "format": "csv"}"#).unwrap();
        assert_eq!(c.precision, 80);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.seed, 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"digits": 80}"#).is_err());
    }

    #[test]
    fn missing_explicit_file_is_an_error() {
        assert!(RunConfig::load(Some(Path::new("/nonexistent/kseq.json"))).is_err());
    }
}

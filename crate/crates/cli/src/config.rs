//! Flat key=value experiment configuration with command-line overrides.
//!
//! The format is deliberately schema-less: one `key = value` pair per line,
//! `#` comments, no nesting. Every run embeds the fully resolved
//! configuration in the output headers so results stay reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Configuration error (maps to exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = Result<T, ConfigError>;

/// Parsed configuration: ordered key/value map plus typed accessors.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn from_file(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> ConfigResult<Self> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    idx + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError(format!("line {}: empty key", idx + 1)));
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(Self { values })
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, spec: &str) -> ConfigResult<()> {
        let Some((key, value)) = spec.split_once('=') else {
            return Err(ConfigError(format!(
                "override `{spec}` must have the form key=value"
            )));
        };
        self.values
            .insert(key.trim().to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> ConfigResult<&str> {
        self.get(key)
            .ok_or_else(|| ConfigError(format!("missing required field `{key}`")))
    }

    pub fn get_usize(&self, key: &str, default: usize) -> ConfigResult<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("field `{key}`: `{v}` is not an integer"))),
        }
    }

    pub fn require_usize(&self, key: &str) -> ConfigResult<usize> {
        self.require(key)?
            .parse()
            .map_err(|_| ConfigError(format!("field `{key}` is not an integer")))
    }

    pub fn get_f64(&self, key: &str, default: f64) -> ConfigResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("field `{key}`: `{v}` is not a number"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> ConfigResult<f64> {
        self.require(key)?
            .parse()
            .map_err(|_| ConfigError(format!("field `{key}` is not a number")))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> ConfigResult<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(ConfigError(format!("field `{key}`: `{v}` is not a bool"))),
        }
    }

    /// Comma-separated integer list.
    pub fn get_usize_list(&self, key: &str, default: &[usize]) -> ConfigResult<Vec<usize>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim().parse().map_err(|_| {
                        ConfigError(format!("field `{key}`: `{t}` is not an integer"))
                    })
                })
                .collect(),
        }
    }

    /// Resolved configuration as stable `key = value` lines for headers.
    pub fn resolved_lines(&self) -> Vec<String> {
        self.values
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect()
    }
}

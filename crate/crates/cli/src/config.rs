//! Flat `key = value` configuration files. Values given on the command line
//! win over the file, which wins over built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Every key a configuration file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "format", "seed", "jobs", "hbar", "out", "amp_tol", "suites", "system", "c_up", "c_down", "dim", "phi_min",
    "phi_max", "points", "fd_step", "sigma_min", "sigma_max", "phi_bar", "g", "mass", "time", "x1", "x2", "p_min",
    "p_max", "widths", "p_up", "post_select", "f_theta", "f_phase", "half_window",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Blank lines and lines starting with `#` are ignored; keys may use
    /// `-` or `_`.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Command-line value, else file value, else `default`.
    pub fn resolve<T>(&self, key: &str, cli: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.raw(key) {
            Some(text) => text
                .parse()
                .map_err(|e| CliError::Config(format!("invalid value `{text}` for `{key}`: {e}"))),
            None => Ok(default),
        }
    }

    /// Like [`ConfigFile::resolve`] without a default.
    pub fn resolve_opt<T>(&self, key: &str, cli: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match (cli, self.raw(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, None) => Ok(None),
            (None, Some(text)) => text
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("invalid value `{text}` for `{key}`: {e}"))),
        }
    }

    /// Comma-separated list of numbers.
    pub fn resolve_list(&self, key: &str, cli: Option<Vec<f64>>, default: &[f64]) -> CliResult<Vec<f64>> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.raw(key) {
            Some(text) => text
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse()
                        .map_err(|e| CliError::Config(format!("invalid entry `{part}` for `{key}`: {e}")))
                })
                .collect(),
            None => Ok(default.to_vec()),
        }
    }
}

pub fn require(condition: bool, message: impl FnOnce() -> String) -> CliResult<()> {
    if condition {
        Ok(())
    } else {
        Err(CliError::Config(message()))
    }
}

pub fn require_positive(key: &str, value: f64) -> CliResult<()> {
    require(value > 0.0 && value.is_finite(), || format!("`{key}` must be positive, got {value}"))
}

/// Validates an amplitude tolerance: it must be positive and small enough
/// that genuine amplitudes are not discarded.
pub fn require_amp_tol(value: f64) -> CliResult<()> {
    require(value > 0.0 && value < 1e-2, || format!("`amp_tol` must lie in (0, 1e-2), got {value}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let cfg = ConfigFile::parse("# run\nseed = 7\n\nphi-min=-2.5\n").unwrap();
        assert_eq!(cfg.resolve::<u64>("seed", None, 0).unwrap(), 7);
        assert_eq!(cfg.resolve::<f64>("phi_min", None, 0.0).unwrap(), -2.5);
    }

    #[test]
    fn command_line_wins() {
        let cfg = ConfigFile::parse("seed = 7").unwrap();
        assert_eq!(cfg.resolve("seed", Some(3u64), 0).unwrap(), 3);
        assert_eq!(cfg.resolve::<f64>("hbar", None, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ConfigFile::parse("nonsense").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
        let cfg = ConfigFile::parse("seed = x").unwrap();
        assert!(matches!(cfg.resolve::<u64>("seed", None, 0), Err(CliError::Config(_))));
    }

    #[test]
    fn lists() {
        let cfg = ConfigFile::parse("widths = 2, 5,10").unwrap();
        assert_eq!(cfg.resolve_list("widths", None, &[]).unwrap(), vec![2.0, 5.0, 10.0]);
    }

    #[test]
    fn amp_tol_bounds() {
        assert!(require_amp_tol(1e-10).is_ok());
        assert!(require_amp_tol(1.0).is_err());
        assert!(require_amp_tol(0.0).is_err());
    }
}

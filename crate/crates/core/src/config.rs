//! Flat `key = value` experiment configuration.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored. Keys
//! are lowercase identifiers (`[a-z0-9_.]`), values are trimmed strings.
//! Lists are comma separated. Repeating a key is an error.
//!
//! ```text
//! experiment = converge
//! potential = quartic
//! eps = 0.12, 0.085, 0.06
//! grids = 256, 384, 512
//! order = 2
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::{Result, SilError};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

/// Parses the flat configuration format.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| SilError::InvalidInput(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.')
        {
            return Err(SilError::InvalidInput(format!("line {}: invalid key `{key}`", lineno + 1)));
        }
        if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(SilError::InvalidInput(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
    }
    Ok(Config { entries })
}

impl Config {
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    /// Typed value, or `default` when the key is absent.
    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| SilError::InvalidInput(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .get(key)
            .ok_or_else(|| SilError::InvalidInput(format!("missing key `{key}`")))?;
        v.parse()
            .map_err(|_| SilError::InvalidInput(format!("`{key}`: cannot parse `{v}`")))
    }

    /// Comma-separated list, or `default` when the key is absent.
    pub fn list_or<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| SilError::InvalidInput(format!("`{key}`: cannot parse `{}`", s.trim())))
                })
                .collect(),
        }
    }

    pub fn flag_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(SilError::InvalidInput(format!("`{key}`: expected a boolean, got `{v}`"))),
        }
    }

    /// Canonical text form: sorted keys, one `key = value` per line.
    pub fn to_canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_lists_and_defaults() {
        let c = parse_config("# sweep\nexperiment = converge\neps = 0.1, 0.05 # two\n\norder=2\n").unwrap();
        assert_eq!(c.get("experiment"), Some("converge"));
        assert_eq!(c.list_or::<f64>("eps", &[]).unwrap(), vec![0.1, 0.05]);
        assert_eq!(c.require::<usize>("order").unwrap(), 2);
        assert_eq!(c.parse_or("t_end", 0.01).unwrap(), 0.01);
        assert!(!c.flag_or("vector", false).unwrap());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_config("novalue").is_err());
        assert!(parse_config("a = 1\na = 2").is_err());
        assert!(parse_config("Bad Key = 1").is_err());
        assert!(parse_config(" = 1").is_err());
        let c = parse_config("order = two").unwrap();
        assert!(c.require::<usize>("order").is_err());
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = parse_config("b = 2\na = x, y\n").unwrap();
        let text = c.to_canonical();
        assert_eq!(text, "a = x, y\nb = 2\n");
        assert_eq!(parse_config(&text).unwrap(), c);
    }
}

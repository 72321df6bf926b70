//! Flat key-value text: one `key<TAB>value` pair per line.
//!
//! Arrays are comma-joined. Floats are written with 17 significant digits so
//! that every `f64` survives a round trip unchanged.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::CliError;

/// Ordered writer.
#[derive(Debug, Default, Clone)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        let _ = writeln!(self.out, "{key}\t{}", value.as_ref());
        self
    }

    pub fn put_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, fmt_f64(value))
    }

    pub fn put_list(&mut self, key: &str, values: &[f64]) -> &mut Self {
        self.put(key, fmt_list(values))
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

pub fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: not a number: {s:?}")))
}

pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|p| parse_f64(key, p)).collect()
}

/// Parsed key-value text. Keys must be unique.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    /// `key<TAB>value` lines; with `allow_equals`, also `key = value`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, allow_equals: bool) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let split = line
                .split_once('\t')
                .or_else(|| if allow_equals { line.split_once('=') } else { None });
            let Some((k, v)) = split else {
                return Err(CliError::Parse {
                    line: i + 1,
                    message: format!("expected key and value, got {line:?}"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(CliError::Parse {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Parse {
                    line: i + 1,
                    message: format!("duplicate key {k:?}"),
                });
            }
        }
        Ok(KvMap { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing key {key:?}")))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key).map(|s| parse_f64(key, s)).transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key).map(|s| parse_list(key, s)).transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get(key)
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::Config(format!("{key}: not a nonnegative integer: {s:?}")))
            })
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

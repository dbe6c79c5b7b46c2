//! Flat `key = value` config files with `[section]` headers.
//!
//! Sections flatten into dotted paths (`fig2.batches`). Lines starting with
//! `#` are comments. Every typed getter reports the full field path on
//! error, which the CLI surfaces with exit code 2.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    source: String,
}

impl Config {
    pub fn parse(text: &str, source: &str) -> Result<Config> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| Error::Parse {
                    what: format!("{source}:{}", lineno + 1),
                    reason: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                what: format!("{source}:{}", lineno + 1),
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let path = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            // strip trailing comments
            let value = match value.split_once('#') {
                Some((v, _)) => v.trim(),
                None => value.trim(),
            };
            values.insert(path, value.to_string());
        }
        Ok(Config {
            values,
            source: source.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::parse(&text, &path.display().to_string())
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Canonical echo of the parsed config (sorted, normalized).
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// FNV-1a hash of the canonical echo.
    pub fn hash(&self) -> u64 {
        fnv1a(self.echo().as_bytes())
    }

    pub fn set(&mut self, field: &str, value: impl ToString) {
        self.values.insert(field.to_string(), value.to_string());
    }

    pub fn get(&self, field: &str) -> Option<&str> {
        self.values.get(field).map(|s| s.as_str())
    }

    pub fn get_str(&self, field: &str) -> Result<&str> {
        self.get(field)
            .ok_or_else(|| Error::config(field, "missing required field"))
    }

    pub fn get_str_or(&self, field: &str, default: &'static str) -> &str {
        self.get(field).unwrap_or(default)
    }

    pub fn get_u64(&self, field: &str) -> Result<u64> {
        self.get_str(field)?
            .parse()
            .map_err(|_| Error::config(field, "expected an unsigned integer"))
    }

    pub fn get_u64_or(&self, field: &str, default: u64) -> Result<u64> {
        match self.get(field) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(field, "expected an unsigned integer")),
        }
    }

    pub fn get_usize_or(&self, field: &str, default: usize) -> Result<usize> {
        Ok(self.get_u64_or(field, default as u64)? as usize)
    }

    pub fn get_f64(&self, field: &str) -> Result<f64> {
        self.get_str(field)?
            .parse()
            .map_err(|_| Error::config(field, "expected a number"))
    }

    pub fn get_f64_or(&self, field: &str, default: f64) -> Result<f64> {
        match self.get(field) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(field, "expected a number")),
        }
    }

    pub fn get_f64_list(&self, field: &str) -> Result<Vec<f64>> {
        self.get_str(field)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::config(field, format!("bad number `{}`", s.trim())))
            })
            .collect()
    }

    pub fn get_f64_list_or(&self, field: &str, default: &[f64]) -> Result<Vec<f64>> {
        if self.get(field).is_none() {
            return Ok(default.to_vec());
        }
        self.get_f64_list(field)
    }

    pub fn get_usize_list_or(&self, field: &str, default: &[usize]) -> Result<Vec<usize>> {
        if self.get(field).is_none() {
            return Ok(default.to_vec());
        }
        self.get_str(field)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::config(field, format!("bad integer `{}`", s.trim())))
            })
            .collect()
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let text = "
experiment = fig2
seed = 42

[fig2]
batches = 500          # full run
states = 0.10, 0.15, 0.20
";
        let cfg = Config::parse(text, "test").unwrap();
        assert_eq!(cfg.get_str("experiment").unwrap(), "fig2");
        assert_eq!(cfg.get_u64("seed").unwrap(), 42);
        assert_eq!(cfg.get_u64("fig2.batches").unwrap(), 500);
        assert_eq!(cfg.get_f64_list("fig2.states").unwrap(), vec![0.10, 0.15, 0.20]);
    }

    #[test]
    fn error_reports_field_path() {
        let cfg = Config::parse("[a]\nx = hello", "test").unwrap();
        match cfg.get_f64("a.x") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "a.x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn echo_round_trips_and_hash_is_stable() {
        let cfg = Config::parse("b = 2\na = 1", "test").unwrap();
        let echo = cfg.echo();
        let cfg2 = Config::parse(&echo, "echo").unwrap();
        assert_eq!(cfg.hash(), cfg2.hash());
    }
}

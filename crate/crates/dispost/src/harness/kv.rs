//! Plain `key = value` configuration and metadata files.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Keys are taken verbatim, values are trimmed. Duplicate keys are rejected
//! so config typos fail loudly instead of silently losing a setting.

use std::collections::BTreeMap;
use std::io::Write as IoWrite;
use std::path::Path;

use crate::error::{Error, Result};

/// A parsed `key = value` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    pairs: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (number, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    number + 1
                ))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", number + 1)));
            }
            if pairs.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {key:?}",
                    number + 1
                )));
            }
        }
        Ok(KvConfig { pairs })
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.keys().map(String::as_str)
    }

    /// Rejects keys outside the allowed set, so misspelled settings are
    /// errors rather than silently ignored.
    pub fn expect_known(&self, allowed: &[&str]) -> Result<()> {
        for key in self.pairs.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown setting {key:?}; known settings: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn parse_with<T, F>(&self, key: &str, what: &str, parse: F) -> Result<Option<T>>
    where
        F: Fn(&str) -> Option<T>,
    {
        match self.get(key) {
            None => Ok(None),
            Some(text) => parse(text).map(Some).ok_or_else(|| {
                Error::Config(format!("setting {key:?}: expected {what}, got {text:?}"))
            }),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse_with(key, "an unsigned integer", |t| t.parse().ok())
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_with(key, "an unsigned integer", |t| t.parse().ok())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_with(key, "a number", |t| t.parse().ok())
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        self.parse_with(key, "true or false", |t| match t {
            "true" | "on" | "yes" | "1" => Some(true),
            "false" | "off" | "no" | "0" => Some(false),
            _ => None,
        })
    }

    /// A comma-separated list; empty value → empty list.
    pub fn get_list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|text| {
            text.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get_list(key) {
            None => Ok(None),
            Some(items) => items
                .iter()
                .map(|item| {
                    item.parse().map_err(|_| {
                        Error::Config(format!(
                            "setting {key:?}: expected unsigned integers, got {item:?}"
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get_list(key) {
            None => Ok(None),
            Some(items) => items
                .iter()
                .map(|item| {
                    item.parse().map_err(|_| {
                        Error::Config(format!(
                            "setting {key:?}: expected numbers, got {item:?}"
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

/// Writes `key = value` lines in the given order.
pub fn write_kv<W: IoWrite>(mut w: W, pairs: &[(&str, String)]) -> Result<()> {
    for (key, value) in pairs {
        writeln!(w, "{key} = {value}")?;
    }
    Ok(())
}

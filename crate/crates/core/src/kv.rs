//! Flat `key=value` text format shared by experiment configs and corpus
//! manifests.
//!
//! One pair per line, UTF-8, `#` starts a comment line, surrounding
//! whitespace is trimmed. Keys are unique. Serialisation emits keys in the
//! order they were inserted.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvMap {
    entries: Vec<(String, String)>,
    index: BTreeMap<String, usize>,
}

impl KvMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected key=value, got {line:?}", lineno + 1))
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::config(format!("line {}: empty key", lineno + 1)));
            }
            if map.index.contains_key(k) {
                return Err(Error::config(format!("duplicate key {k}")));
            }
            map.insert(k, v.trim());
        }
        Ok(map)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Display) {
        let key = key.into();
        let value = value.to_string();
        match self.index.get(&key) {
            Some(&i) => self.entries[i].1 = value,
            None => {
                self.index.insert(key.clone(), self.entries.len());
                self.entries.push((key, value));
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.index.get(key).map(|&i| self.entries[i].1.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `key` if present.
    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::config(format!("invalid value for {key}: {v:?}"))),
        }
    }

    /// Parses `key`, falling back to `default` when absent.
    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    /// Parses a required key.
    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse_opt(key)?
            .ok_or_else(|| Error::config(format!("missing key {key}")))
    }

    /// Comma-separated list of numbers.
    pub fn parse_list_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("invalid number in {key}: {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Copies every pair of `other` into `self`.
    pub fn extend(&mut self, other: &KvMap) {
        for (k, v) in &other.entries {
            self.insert(k.clone(), v);
        }
    }

    /// Pairs whose key starts with `prefix`.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> {
        self.entries
            .iter()
            .filter(move |(k, _)| k.starts_with(prefix))
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Comma-joined list using shortest round-trip float formatting.
pub fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

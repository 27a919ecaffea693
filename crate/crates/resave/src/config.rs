//! `key = value` configuration files. Command-line flags take precedence
//! over file values, which take precedence over built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Environment variable capping the replication thread pool.
pub const THREADS_ENV: &str = "RESAVE_THREADS";

pub const KNOWN_KEYS: &[&str] = &[
    "model",
    "estimator",
    "n0",
    "p",
    "reps",
    "retained",
    "seed",
    "c1",
    "c2",
    "epsilon",
    "gamma_scale",
    "kernel",
    "strict_assumptions",
    "standardize",
    "threads",
    "out",
    "replications_out",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Parses `key = value` lines. Blank lines and lines starting with `#`
    /// are ignored; keys may use `-` or `_`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`"))))
            .transpose()
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("invalid value `{s}` in `{key}`"))))
                    .collect()
            })
            .transpose()
    }

    /// `flag`, else the file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

/// Thread count after applying the environment cap. `env` is the raw value
/// of [`THREADS_ENV`], if set.
pub fn thread_cap(requested: Option<usize>, env: Option<&str>) -> Result<Option<usize>> {
    let cap = match env.map(str::trim).filter(|s| !s.is_empty()) {
        Some(s) => match s.parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => return Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))),
        },
        None => None,
    };
    Ok(match (requested, cap) {
        (Some(r), Some(c)) => Some(r.min(c)),
        (r, c) => r.or(c),
    })
}

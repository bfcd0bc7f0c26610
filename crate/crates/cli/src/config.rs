//! Flat `key = value` run configuration.
//!
//! Every setting has a long flag of the same name. Values are resolved in
//! increasing priority: built-in defaults, `GENBAYES_SEED` (for `seed`), the
//! `--config` file, then flags. The resolved set is written as `config.txt`
//! next to the outputs so a run can be replayed with `--config`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};

pub const SEED_ENV: &str = "GENBAYES_SEED";
pub const CONFIG_FILE: &str = "config.txt";

/// One configurable setting.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    /// `None` for required inputs and for values derived from other settings.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default: Some(default),
        help,
    }
}

pub const fn derived(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default: None,
        help,
    }
}

/// Bad flags or settings; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
    known: Vec<&'static str>,
    pub out: PathBuf,
}

/// Parses a config file body. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, keys: &[Key]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !keys.iter().any(|key| key.name == k) {
            return Err(usage(format!("config line {}: unknown key `{k}`", no + 1)));
        }
        out.push((k.to_owned(), v.to_owned()));
    }
    Ok(out)
}

impl Settings {
    pub fn resolve(
        keys: &[Key],
        file: Option<&Path>,
        flags: &[(String, String)],
        env_seed: Option<&str>,
        out: PathBuf,
    ) -> Result<Settings> {
        let mut values = BTreeMap::new();
        for k in keys {
            if let Some(d) = k.default {
                values.insert(k.name.to_owned(), d.to_owned());
            }
        }
        if let Some(seed) = env_seed {
            if keys.iter().any(|k| k.name == "seed") {
                seed.trim()
                    .parse::<u64>()
                    .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got `{seed}`")))?;
                values.insert("seed".to_owned(), seed.trim().to_owned());
            }
        }
        if let Some(path) = file {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            values.extend(parse_config(&text, keys)?);
        }
        values.extend(flags.iter().cloned());
        Ok(Settings {
            values,
            known: keys.iter().map(|k| k.name).collect(),
            out,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &'static str, value: impl ToString) {
        debug_assert!(self.known.contains(&key), "undeclared key {key}");
        self.values.insert(key.to_owned(), value.to_string());
    }

    /// Fills `key` only when nothing else provided it.
    pub fn set_default(&mut self, key: &'static str, value: impl ToString) {
        if !self.values.contains_key(key) {
            self.set(key, value);
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(key).ok_or_else(|| usage(format!("missing required setting `--{key}`")))?;
        v.parse::<T>().map_err(|e| usage(format!("invalid value `{v}` for `--{key}`: {e}")))
    }

    /// `none` (or an empty value) reads as absent.
    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None | Some("") | Some("none") => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    pub fn count(&self, key: &str, min: usize) -> Result<usize> {
        let v: usize = self.get(key)?;
        if v < min {
            return Err(usage(format!("`--{key}` must be at least {min}, got {v}")));
        }
        Ok(v)
    }

    pub fn positive(&self, key: &str) -> Result<f64> {
        let v: f64 = self.get(key)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(usage(format!("`--{key}` must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn non_negative(&self, key: &str) -> Result<f64> {
        let v: f64 = self.get(key)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(usage(format!("`--{key}` must be non-negative, got {v}")));
        }
        Ok(v)
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") | None => Ok(false),
            Some(v) => Err(usage(format!("invalid value `{v}` for `--{key}`: expected true or false"))),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(key).unwrap_or("");
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| usage(format!("invalid entry `{s}` in `--{key}`: {e}"))))
            .collect()
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.get::<String>(key).map(PathBuf::from)
    }

    /// Sorted `key = value` lines.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Creates the output directory and writes `config.txt` into it.
    pub fn write(&self) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(CONFIG_FILE);
        fs::write(&path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

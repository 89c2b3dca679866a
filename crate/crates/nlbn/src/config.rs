//! `key = value` configuration files merged with `--key value` flags.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub values: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1)));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", lineno + 1)));
        }
        values.insert(key.to_string(), value.trim().to_string());
    }
    Ok(values)
}

/// Parses `<subcommand> [--config file] [--key value ...] [--out path]`.
pub fn parse_args<I: IntoIterator<Item = String>>(args: I) -> Result<ExperimentConfig, CliError> {
    let mut args = args.into_iter();
    let subcommand = args.next().ok_or_else(|| CliError::Config("missing subcommand".into()))?;
    let mut file_path = None;
    let mut out = None;
    let mut flags = BTreeMap::new();
    while let Some(arg) = args.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(CliError::Config(format!("unexpected argument {arg:?}")));
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = args.next().ok_or_else(|| CliError::Config(format!("flag --{key} needs a value")))?;
                (key.to_string(), v)
            }
        };
        match key.as_str() {
            "config" => file_path = Some(PathBuf::from(value)),
            "out" => out = Some(PathBuf::from(value)),
            _ => {
                flags.insert(key, value);
            }
        }
    }
    let mut values = match file_path {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    values.extend(flags);
    Ok(ExperimentConfig { subcommand, values, out })
}

impl ExperimentConfig {
    /// Rejects any key outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        let unknown: Vec<&str> = self.values.keys().map(String::as_str).filter(|k| !allowed.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown key(s) for `{}`: {}", self.subcommand, unknown.join(", "))))
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("{key} = {v:?}: {e}"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: fmt::Display,
    {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| CliError::Config(format!("{key}: {s:?}: {e}"))))
            .collect::<Result<Vec<T>, CliError>>()
            .map(Some)
    }
}

//! Flat key=value run configuration.
//!
//! Every subcommand accepts `--config <file>` holding `key = value` lines
//! (keys match the long flag names). Precedence: command-line flag, then
//! config file, then (for the seed only) the `TOMO_SEED` environment
//! variable, then the built-in default.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected `key = value`, found `{raw}`",
                    path.display(),
                    lineno + 1
                );
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key `{key}` = `{raw}`: {e}"),
            },
        }
    }
}

/// Flag beats config beats default; a missing required value is an error.
pub fn resolve<T>(flag: Option<T>, config: Option<T>, default: Option<T>, key: &str) -> Result<T> {
    flag.or(config)
        .or(default)
        .with_context(|| format!("missing required parameter `{key}`"))
}

/// Seed resolution also consults `TOMO_SEED`, below the config file.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    if let Ok(raw) = std::env::var("TOMO_SEED") {
        let parsed = raw
            .parse()
            .with_context(|| format!("TOMO_SEED = `{raw}` is not a valid seed"))?;
        return Ok(parsed);
    }
    Ok(0)
}

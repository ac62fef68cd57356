//! `key = value` config files. Keys use the long flag names; `#` starts a
//! comment. Flags given on the command line take precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "sigma-x",
    "po",
    "n",
    "snr",
    "mimo",
    "out",
    "format",
    "seed",
    "mode",
    "order",
    "snr-db",
    "symbols",
    "block-len",
    "grid",
    "tolerance",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {lineno}: expected key = value")))?;
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("config line {lineno}: unknown key {key:?}")));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(CliError::usage(format!("config line {lineno}: empty value for {key}")));
            }
            if entries.insert(key.clone(), value.to_string()).is_some() {
                return Err(CliError::usage(format!("config line {lineno}: duplicate key {key}")));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parses `key` with `T::from_str`, naming the key in any error.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get_with(key, |s| s.parse::<T>().map_err(|e| e.to_string()))
    }

    pub fn get_with<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => parse(v)
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key {key}: {e}"))),
        }
    }
}

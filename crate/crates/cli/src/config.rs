use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KEYS: [&str; 7] = ["T", "n", "y", "convention", "replicas", "seed", "grid_max"];

/// Flat `key=value` settings. Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    values: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                bail!("line {}: unknown key {k:?} (known: {})", i + 1, KEYS.join(", "));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                bail!("line {}: duplicate key {k:?}", i + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values.get(key).map(|v| v.parse::<T>().map_err(|e| anyhow!("config key {key}: {e}"))).transpose()
    }

    /// Fail if a key outside `allowed` (plus `seed`, `replicas`) is set.
    pub fn restrict(&self, command: &str, allowed: &[&str]) -> Result<()> {
        for k in self.values.keys() {
            if !(allowed.contains(&k.as_str()) || k == "seed" || k == "replicas") {
                bail!("config key {k:?} does not apply to {command}");
            }
        }
        Ok(())
    }
}

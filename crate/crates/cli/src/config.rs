//! Flat `key = value` config files with optional `[section]` headers.
//!
//! ```text
//! seed = 7
//! [fit]
//! d = 2
//! radius = median
//! ```
//!
//! Keys before the first header belong to `global`. `#` and `;` start
//! comment lines.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

const KNOWN: &[(&str, &[&str])] = &[
    ("global", &["seed", "jobs", "out"]),
    ("fit", &["d", "radius", "center"]),
    ("sample", &["n", "sigma", "distribution"]),
    ("experiment", &["scale"]),
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<(String, String), String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = "global".to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |msg: &str| CliError::Usage(format!("config line {}: {msg}: {raw:?}", lineno + 1));
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| bad("unterminated section header"))?.trim();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(bad("unknown section"));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let key = key.trim();
            let allowed = KNOWN.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(bad("unknown key"));
            }
            entries.insert((section.clone(), key.to_string()), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(&(section.to_string(), key.to_string())).map(String::as_str)
    }

    /// Parsed value of `section.key`, if present.
    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(section, key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config {section}.{key} = {v:?}: {e}")))
            })
            .transpose()
    }
}

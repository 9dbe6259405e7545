//! Flat key-value config files and the small value parsers shared with flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::failure::Failure;

/// Values read from a TOML file whose keys are flag names without the
/// leading dashes. Everything is kept as text and parsed like the flag.
#[derive(Debug, Default)]
pub struct FileValues {
    values: BTreeMap<String, String>,
}

impl FileValues {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, allowed)
            .map_err(|e| Failure::usage(format!("config {}: {}", path.display(), e.message)))
    }

    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, Failure> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Failure::usage(e.message().to_string()))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            if !allowed.contains(&key.as_str()) {
                return Err(Failure::usage(format!("unknown key `{key}`")));
            }
            values.insert(key.clone(), flatten(&key, &value)?);
        }
        Ok(Self { values })
    }

    /// Flag value if given, else the file value, parsed the same way.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| {
                raw.parse::<T>()
                    .map_err(|e| Failure::usage(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn pick_required<T>(&self, flag: Option<T>, key: &str) -> Result<T, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.pick(flag, key)?
            .ok_or_else(|| Failure::usage(format!("--{key} is required")))
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool, Failure> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

fn flatten(key: &str, value: &toml::Value) -> Result<String, Failure> {
    use toml::Value;
    Ok(match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::Array(_) | Value::Table(_) => {
                    Err(Failure::usage(format!("key `{key}`: nested values are not allowed")))
                }
                other => flatten(key, other),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        _ => return Err(Failure::usage(format!("key `{key}`: tables are not allowed"))),
    })
}

/// Integer lists written as `3`, `1,2,5`, `2..6` or `2..=6` (both ends
/// included in either range form).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntList(pub Vec<usize>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let lo: usize = a.trim().parse().map_err(|e| format!("bad range start `{a}`: {e}"))?;
            let hi: usize = b.trim().parse().map_err(|e| format!("bad range end `{b}`: {e}"))?;
            if lo > hi {
                return Err(format!("empty range {s}"));
            }
            return Ok(IntList((lo..=hi).collect()));
        }
        s.split(',')
            .map(|p| p.trim().parse().map_err(|e| format!("bad integer `{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(IntList)
    }
}

/// Comma-separated reals.
#[derive(Clone, Debug, PartialEq)]
pub struct RealList(pub Vec<f64>);

impl FromStr for RealList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|e| format!("bad number `{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(RealList)
    }
}

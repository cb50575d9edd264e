//! Experiment configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value          # trailing comment
//! epsilon = 0, 0.5, 1  # a comma list sweeps the key
//! ```
//!
//! Keys are lowercase identifiers. Blank lines are ignored and a key may
//! appear once per file. Command-line flags replace file values. Lists are
//! accepted only for the keys in [`SWEEPABLE`]; several lists expand to their
//! cartesian product in key order, the last key varying fastest.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Keys that accept a comma-separated list of values.
pub const SWEEPABLE: &[&str] = &[
    "distance",
    "epsilon",
    "gamma",
    "kappa",
    "lambda_schedule",
    "max_iter",
    "photon_scale",
    "seed",
    "theta",
    "tilt",
    "tolerance",
];

pub type RawConfig = BTreeMap<String, String>;

pub fn parse(text: &str) -> CliResult<RawConfig> {
    let mut out = RawConfig::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!(
                "line {lineno}: expected `key = value`, got `{line}`"
            )));
        };
        let key = key.trim();
        check_key(key).map_err(|m| CliError::config(format!("line {lineno}: {m}")))?;
        let value = value.trim();
        if value.is_empty() {
            return Err(CliError::config(format!("line {lineno}: key `{key}` has no value")));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::config(format!("line {lineno}: duplicate key `{key}`")));
        }
    }
    Ok(out)
}

fn check_key(key: &str) -> Result<(), String> {
    let ok = key.chars().next().is_some_and(|c| c.is_ascii_lowercase())
        && key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(format!("invalid key `{key}`"))
    }
}

/// Parses a `key=value` override from the command line.
pub fn parse_override(s: &str) -> CliResult<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("--set expects key=value, got `{s}`")))?;
    let (k, v) = (k.trim(), v.trim());
    check_key(k).map_err(CliError::config)?;
    if v.is_empty() {
        return Err(CliError::config(format!("--set {k}: empty value")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// One point of a sweep: a scalar value for every key, and the keys that
/// were swept to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub values: BTreeMap<String, String>,
    pub swept: Vec<String>,
}

impl SweepPoint {
    /// `key=value` pairs of the swept keys, or `base` for a single run.
    pub fn label(&self) -> String {
        if self.swept.is_empty() {
            return "base".into();
        }
        self.swept.iter().map(|k| format!("{k}={}", self.values[k])).collect::<Vec<_>>().join(",")
    }
}

pub fn expand(raw: &RawConfig) -> CliResult<Vec<SweepPoint>> {
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for (k, v) in raw {
        if !v.contains(',') {
            continue;
        }
        if !SWEEPABLE.contains(&k.as_str()) {
            return Err(CliError::config(format!("key `{k}` does not accept a list")));
        }
        let items: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
        if items.iter().any(String::is_empty) {
            return Err(CliError::config(format!("key `{k}`: empty entry in list `{v}`")));
        }
        let unique: BTreeSet<&String> = items.iter().collect();
        if unique.len() != items.len() {
            return Err(CliError::config(format!("key `{k}`: repeated entry in list `{v}`")));
        }
        axes.push((k.clone(), items));
    }
    let swept: Vec<String> = axes.iter().map(|(k, _)| k.clone()).collect();
    let mut points = vec![raw.clone()];
    for (k, items) in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                items.iter().map(move |item| {
                    let mut q = p.clone();
                    q.insert(k.clone(), item.clone());
                    q
                })
            })
            .collect();
    }
    Ok(points.into_iter().map(|values| SweepPoint { values, swept: swept.clone() }).collect())
}

/// Typed, consuming access to the values of one sweep point. Every key must
/// be consumed; [`Settings::finish`] reports the ones nobody asked for.
#[derive(Debug)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(values: BTreeMap<String, String>) -> Self {
        Settings { values }
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::config(format!("invalid value `{v}` for `{key}`: {e}"))),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&mut self, key: &str, context: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)?.ok_or_else(|| CliError::config(format!("{context} requires `{key}`")))
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn finish(self, context: &str) -> CliResult<()> {
        if self.values.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
        Err(CliError::config(format!("{context} does not use key(s) {}", keys.join(", "))))
    }
}

/// A real number, optionally written as a multiple or fraction of `pi`
/// (`pi`, `pi/3`, `2*pi/5`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl FromStr for Real {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Ok(v) = s.parse::<f64>() {
            return if v.is_finite() { Ok(Real(v)) } else { Err("must be finite".into()) };
        }
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim().parse::<f64>().map_err(|e| e.to_string())?),
            None => (s, 1.0),
        };
        let factor = match num.strip_suffix("pi") {
            Some("") => 1.0,
            Some(f) => f
                .trim()
                .strip_suffix('*')
                .ok_or("expected a number or a multiple of pi")?
                .trim()
                .parse::<f64>()
                .map_err(|e| e.to_string())?,
            None => return Err("expected a number or a multiple of pi".into()),
        };
        let v = factor * std::f64::consts::PI / den;
        if v.is_finite() {
            Ok(Real(v))
        } else {
            Err("must be finite".into())
        }
    }
}

/// Grid shape written `NxM`, or `N` for a square grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape(pub usize, pub usize);

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| e.to_string());
        let (a, b) = match s.split_once('x') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if a < 2 || b < 2 {
            return Err("grid sides must be at least 2".into());
        }
        Ok(Shape(a, b))
    }
}

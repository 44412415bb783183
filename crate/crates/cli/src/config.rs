//! Run configuration: a TOML file merged with command-line flags, flags
//! taking precedence.

use std::path::{Path, PathBuf};

use blowup_core::{Error, Result};
use serde::Deserialize;

pub const DEFAULT_N_PER_SIDE: usize = 512;
pub const DEFAULT_GRADING: f64 = 3.0;
pub const DEFAULT_DELTA: f64 = 0.25;
pub const DEFAULT_SCHEDULE: &str = "8:max";
pub const DEFAULT_WINDOW: (f64, f64) = (1e-3, 5e-2);

/// A number, a list of numbers, or a string in the form accepted by
/// [`parse_values`].
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl Values {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            Values::One(v) => Ok(vec![*v]),
            Values::Many(v) => Ok(v.clone()),
            Values::Text(s) => parse_values(s),
        }
    }
}

/// Every setting a config file may carry. Keys mirror the long flags with
/// dashes replaced by underscores.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<Values>,
    pub p: Option<f64>,
    pub tau: Option<Values>,
    pub n_per_side: Option<usize>,
    pub grading: Option<f64>,
    pub delta: Option<f64>,
    pub tol: Option<f64>,
    pub schedule: Option<String>,
    pub window: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
    pub no_timestamp: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::BadConfig(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::BadConfig(format!("config {}: {e}", path.display())))
    }
}

/// Comma-separated numbers, or `start:stop:step` for an inclusive range.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::BadConfig(format!("cannot parse {what} in '{text}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(s.trim()));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(Error::BadConfig(format!("range '{text}' needs step > 0 and stop >= start")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // Snap to 12 decimals so 0.1:0.9:0.1 yields 0.3 and not 0.30000000000000004.
            Ok((0..count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(bad("range")),
    }
}

/// Exhaustion levels: `start:max`, `start:end` (doubling) or an explicit
/// comma-separated list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    ToDeepest(usize),
    Doubling(usize, usize),
    Explicit(Vec<usize>),
}

pub fn parse_schedule(text: &str) -> Result<Schedule> {
    let bad = || Error::BadConfig(format!("cannot parse schedule '{text}'"));
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    if let Some((start, end)) = text.split_once(':') {
        let start = int(start)?;
        return if end.trim() == "max" { Ok(Schedule::ToDeepest(start)) } else { Ok(Schedule::Doubling(start, int(end)?)) };
    }
    Ok(Schedule::Explicit(text.split(',').map(int).collect::<Result<_>>()?))
}

pub fn single(name: &str, values: &[f64]) -> Result<f64> {
    match values {
        [v] => Ok(*v),
        _ => Err(Error::BadConfig(format!("--{name} takes exactly one value here, got {}", values.len()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_snap() {
        let v = parse_values("0.1:0.9:0.1").unwrap();
        assert_eq!(v.len(), 9);
        assert_eq!(v[2], 0.3);
        assert_eq!(v[8], 0.9);
        assert_eq!(parse_values("-0.5, -0.25").unwrap(), vec![-0.5, -0.25]);
        assert!(parse_values("a").is_err());
        assert!(parse_values("1:0:0.1").is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(parse_schedule("8:max").unwrap(), Schedule::ToDeepest(8));
        assert_eq!(parse_schedule("8:256").unwrap(), Schedule::Doubling(8, 256));
        assert_eq!(parse_schedule("8,32").unwrap(), Schedule::Explicit(vec![8, 32]));
        assert!(parse_schedule("x:1").is_err());
    }

    #[test]
    fn file_values() {
        let cfg: FileConfig = toml::from_str("alpha = [0.25, 0.5]\ntau = \"-0.9:-0.1:0.4\"\np = 3\nwindow = [1e-3, 0.05]").unwrap();
        assert_eq!(cfg.alpha.unwrap().resolve().unwrap(), vec![0.25, 0.5]);
        assert_eq!(cfg.tau.unwrap().resolve().unwrap(), vec![-0.9, -0.5, -0.1]);
        assert_eq!(cfg.p, Some(3.0));
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
    }
}

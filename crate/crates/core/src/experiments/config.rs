//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are skipped. Keys mirror the
//! command-line flags, and a later assignment overrides an earlier one, so
//! flags are applied by inserting them after the file.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use super::{Method, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::TransformKind;
use crate::pde::ProblemKind;

pub type ConfigMap = BTreeMap<String, String>;

pub const KEYS: [&str; 16] = [
    "pde",
    "method",
    "tau",
    "gamma",
    "nx",
    "eps",
    "seed",
    "out",
    "transform",
    "eval_n",
    "log_cond",
    "timing",
    "reference_n",
    "cloud_points",
    "cloud_width",
    "cloud_normal",
];

pub fn parse_config_text(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key `{}`", lineno + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Comma-separated values.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| Error::Config(format!("cannot parse `{t}` in `{s}`"))))
        .collect()
}

/// Comma-separated values where each item may be an inclusive range
/// `start:step:stop`.
pub fn parse_range_list(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<f64> = parse_list_sep(item, ':')?;
        match parts.as_slice() {
            [v] => out.push(*v),
            [start, step, stop] => {
                if !(*step > 0.0) || stop < start {
                    return Err(Error::Config(format!("bad range `{item}`")));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                // Multiply rather than accumulate so 1:0.5:4 gives exact halves.
                out.extend((0..=count).map(|k| start + k as f64 * step));
            }
            _ => return Err(Error::Config(format!("expected `v` or `start:step:stop`, got `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("empty list `{s}`")));
    }
    Ok(out)
}

fn parse_list_sep(s: &str, sep: char) -> Result<Vec<f64>> {
    s.split(sep)
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("cannot parse `{t}` in `{s}`"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{v}` for `{key}`"))),
    }
}

impl RunConfig {
    /// Overrides the fields named in `map`.
    pub fn apply(&mut self, map: &ConfigMap) -> Result<()> {
        for (key, v) in map {
            match key.as_str() {
                "pde" => self.pde = ProblemKind::parse(v)?,
                "method" => self.methods = Method::parse_many(v)?,
                "tau" => self.tau_list = parse_list(v)?,
                "gamma" => self.gamma_list = parse_range_list(v)?,
                "nx" => self.nx_axis_list = parse_list(v)?,
                "eps" => self.eps = parse_one(key, v)?,
                "seed" => self.seed = parse_one(key, v)?,
                "out" => self.output_dir = PathBuf::from(v),
                "transform" => self.transform = TransformKind::parse(v)?,
                "eval_n" => self.eval_grid_n = parse_one(key, v)?,
                "log_cond" => self.log_cond = parse_bool(key, v)?,
                "timing" => self.record_timing = parse_bool(key, v)?,
                "reference_n" => self.reference_n = parse_one(key, v)?,
                "cloud_points" => self.cloud.points = parse_one(key, v)?,
                "cloud_width" => self.cloud.width = parse_one(key, v)?,
                "cloud_normal" => {
                    let n: Vec<f64> = parse_list(v)?;
                    if n.len() != 2 {
                        return Err(Error::Config(format!("cloud_normal needs two components, got `{v}`")));
                    }
                    self.cloud.normal = [n[0], n[1]];
                }
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        self.validate()
    }

    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(map)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_and_skips_comments() {
        let text = "# sweep\npde = 3@0.5,0.75\nmethod = wls-id\n\n tau=4,5\ngamma = 1:0.5:4\nnx = 9, 13\nlog-cond = yes\n";
        let map = parse_config_text(text).unwrap();
        let cfg = RunConfig::from_map(&map).unwrap();
        assert_eq!(cfg.pde, ProblemKind::PDE3_SHIFTED);
        assert_eq!(cfg.methods, vec![Method::WlsId]);
        assert_eq!(cfg.tau_list, vec![4, 5]);
        assert_eq!(cfg.gamma_list, vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]);
        assert_eq!(cfg.nx_axis_list, vec![9, 13]);
        assert!(cfg.log_cond);
    }

    #[test]
    fn later_assignments_override() {
        let mut map = parse_config_text("eps = 3\nseed = 4").unwrap();
        map.insert("eps".into(), "7".into());
        let cfg = RunConfig::from_map(&map).unwrap();
        assert_eq!((cfg.eps, cfg.seed), (7.0, 4));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_config_text("nonsense").is_err());
        assert!(parse_config_text("colour = red").is_err());
        assert!(RunConfig::from_map(&parse_config_text("gamma = 0.5").unwrap()).is_err());
        assert!(parse_range_list("4:1:1").is_err());
        assert!(parse_list::<u32>("4,x").is_err());
    }

    #[test]
    fn defaults_match_the_standard_setup() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.eps, 5.0);
        assert_eq!(cfg.eval_grid_n, 86);
        assert_eq!(cfg.tau_list, vec![4, 5, 6]);
        assert_eq!(cfg.gamma_list, parse_range_list("1:0.5:4").unwrap());
        assert_eq!(*cfg.nx_axis_list.last().unwrap(), 41);
    }
}

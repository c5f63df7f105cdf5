//! Run configuration: the file format read by the CLI and echoed into every
//! JSON sidecar.

use std::path::Path;

use irsopt_core::config::SystemConfig;
use serde::{Deserialize, Serialize};

use crate::harness::{Method, SweepParam};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("bad value list `{0}`: {1}")]
    ValueList(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            param: SweepParam::PowerDb,
            values: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 200,
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSettings {
    pub powers: Vec<f64>,
    pub trials: usize,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self { powers: vec![0.0, 5.0, 10.0, 15.0], trials: 100 }
    }
}

/// Iteration counts for the cost table. Dimensions come from the system section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexitySettings {
    pub iterations: u64,
    pub ladmm_iterations: u64,
    pub spgm_iterations: u64,
    pub ao_iterations: u64,
    pub ao_realizations: u64,
}

impl Default for ComplexitySettings {
    fn default() -> Self {
        Self {
            iterations: 10,
            ladmm_iterations: 20,
            spgm_iterations: 20,
            ao_iterations: 10,
            ao_realizations: irsopt_core::complexity::DEFAULT_AO_REALIZATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub sweep: SweepSettings,
    pub convergence: ConvergenceSettings,
    pub complexity: ComplexitySettings,
    /// Record wall-clock time. Timed outputs differ between reruns.
    pub timing: bool,
}

/// The part of a JSON sidecar needed to recover its configuration.
#[derive(Deserialize)]
struct Sidecar {
    config: RunConfig,
}

impl RunConfig {
    /// Reads a TOML file, a JSON file holding a bare config, or a JSON
    /// sidecar written by a previous run.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: shown.clone(), source })?;
        let parse_err = |message: String| ConfigError::Parse { path: shown.clone(), message };
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if !is_json {
            return toml::from_str(&text).map_err(|e| parse_err(e.to_string()));
        }
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        if value.get("config").is_some() && value.get("version").is_some() {
            serde_json::from_value::<Sidecar>(value).map(|s| s.config).map_err(|e| parse_err(e.to_string()))
        } else {
            serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_value_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |why: &str| ConfigError::ValueList(s.to_string(), why.to_string());
    let number = |t: &str| t.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad("not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (number(start)?, number(step)?, number(stop)?);
            if step == 0.0 {
                return Err(bad("step must be nonzero"));
            }
            let span = (stop - start) / step;
            if span < -1e-9 {
                return Err(bad("step points away from stop"));
            }
            let count = (span + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(bad("too many values"));
            }
            Ok((0..count).map(|i| tidy(start + i as f64 * step)).collect())
        }
        [list] => {
            let values = list.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                Err(bad("empty list"))
            } else {
                Ok(values)
            }
        }
        _ => Err(bad("expected start:step:stop or a comma list")),
    }
}

/// Removes representation noise such as 0.30000000000000004.
fn tidy(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if (r - x).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_value_list("-10:5:20").unwrap(), vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(parse_value_list("0:0.1:0.3").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(parse_value_list("20:-10:0").unwrap(), vec![20.0, 10.0, 0.0]);
        assert_eq!(parse_value_list("10,50,100").unwrap(), vec![10.0, 50.0, 100.0]);
        assert_eq!(parse_value_list("7").unwrap(), vec![7.0]);
        for bad in ["", "1:0:3", "3:1:0", "a,b", "1:2", "1:2:3:4", "nan"] {
            assert!(parse_value_list(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn toml_round_trip_and_strictness() {
        let mut cfg = RunConfig::default();
        cfg.system.mi = 40;
        cfg.sweep.param = SweepParam::Delta;
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert!(toml::from_str::<RunConfig>("[system]\nmtt = 3\n").is_err());
        assert!(toml::from_str::<RunConfig>("extra = 1\n").is_err());
        let partial: RunConfig = toml::from_str("[system]\npower_db = 20\n").unwrap();
        assert_eq!(partial.system.power_db, 20.0);
        assert_eq!(partial.system.mt, 16);
    }
}

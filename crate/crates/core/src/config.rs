//! Experiment configuration: a JSON document with defaults for every field,
//! `key.path=value` overrides, and total validation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::detection::DetectorModel;
use crate::dynamics::{pump_velocity, MotionParams, PumpModel};
use crate::herald::WriteParams;
use crate::io::fmt_f64;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "SWNOON_SEED";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub field: String,
    pub msg: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("config line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("override `{0}`: {1}")]
    Override(String, String),
    #[error("{SEED_ENV}=`{0}` is not an unsigned integer")]
    BadSeedEnv(String),
    #[error("invalid config:\n{}", .0.iter().map(|i| format!("  {}: {}", i.field, i.msg)).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldIssue>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    #[default]
    Threshold,
    NumberResolving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtGrid {
    pub start_s: f64,
    pub stop_s: f64,
    pub count: usize,
}

impl DtGrid {
    /// `count` evenly spaced points from `start_s` to `stop_s` inclusive.
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start_s];
        }
        let h = (self.stop_s - self.start_s) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start_s + i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub chi: f64,
    pub cutoff: usize,
    pub lambda_m: f64,
    pub theta_rad: f64,
    pub v0_mps: f64,
    pub pump_power_mw: f64,
    pub pump_model: PumpModel,
    pub tau_s: f64,
    pub gamma0: f64,
    pub gamma_b: f64,
    pub phi_stab_rad: f64,
    pub trials_per_point: u64,
    pub dt_grid: DtGrid,
    pub order: u8,
    pub noon_n: usize,
    pub seed: u64,
    pub detector_mode: DetectorMode,
    pub herald_max_attempts: u64,
    pub fit_tau: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            chi: 0.01,
            cutoff: 4,
            lambda_m: 794.98e-9,
            theta_rad: 0.6f64.to_radians(),
            v0_mps: 0.03,
            pump_power_mw: 6.0,
            pump_model: PumpModel::default(),
            tau_s: 200e-6,
            gamma0: 0.15,
            gamma_b: 0.002,
            phi_stab_rad: 0.0,
            trials_per_point: 10_000,
            dt_grid: DtGrid {
                start_s: 0.0,
                stop_s: 600e-6,
                count: 25,
            },
            order: 1,
            noon_n: 2,
            seed: 20_240_601,
            detector_mode: DetectorMode::Threshold,
            herald_max_attempts: 10_000_000,
            fit_tau: false,
        }
    }
}

fn parse_error(e: serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    }
}

/// Sets `path` (dot-separated) inside `doc` to `raw`, parsed as JSON when
/// possible and as a string otherwise. Only existing keys may be set.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let bad = |msg: &str| ConfigError::Override(assignment.to_string(), msg.to_string());
    let (path, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let path = path.trim();
    let value: Value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| bad("path runs through a non-object"))?;
        let slot = obj.get_mut(*key).ok_or_else(|| bad(&format!("unknown key `{key}`")))?;
        if i + 1 == keys.len() {
            *slot = value;
            return Ok(());
        }
        node = slot;
    }
    Err(bad("empty key"))
}

impl ExperimentConfig {
    /// Parses JSON (missing fields take defaults), applies overrides and an
    /// optional seed override, then validates.
    pub fn from_json(text: &str, overrides: &[String], seed_env: Option<&str>) -> Result<Self, ConfigError> {
        // Parse into the typed struct first so unknown or mistyped fields are
        // reported against file positions, then layer overrides on the fully
        // populated document.
        let base: Self = serde_json::from_str(text).map_err(parse_error)?;
        let mut doc = serde_json::to_value(&base).expect("config serializes");
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let mut cfg: Self = serde_json::from_value(doc)
            .map_err(|e| ConfigError::Override(overrides.join(" "), e.to_string()))?;
        if let Some(s) = seed_env {
            cfg.seed = s.trim().parse().map_err(|_| ConfigError::BadSeedEnv(s.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, honoring `SWNOON_SEED` from the environment.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let env = std::env::var(SEED_ENV).ok();
        Self::from_json(&text, overrides, env.as_deref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reports every invalid field at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut bad = |field: &str, ok: bool, msg: String| {
            if !ok {
                issues.push(FieldIssue {
                    field: field.to_string(),
                    msg,
                });
            }
        };
        bad("chi", (0.0..1.0).contains(&self.chi), format!("{} not in [0, 1)", self.chi));
        bad("cutoff", self.cutoff >= 1, "must be at least 1".into());
        bad(
            "cutoff",
            self.cutoff >= self.noon_n + 2,
            format!("{} < noon_n + 2 = {}", self.cutoff, self.noon_n + 2),
        );
        bad("cutoff", self.cutoff <= 12, format!("{} exceeds 12", self.cutoff));
        bad("lambda_m", self.lambda_m > 0.0 && self.lambda_m.is_finite(), format!("{} must be positive", self.lambda_m));
        bad(
            "theta_rad",
            self.theta_rad.abs() < std::f64::consts::FRAC_PI_2,
            format!("|{}| must be below pi/2", self.theta_rad),
        );
        bad("v0_mps", self.v0_mps.is_finite(), format!("{} is not finite", self.v0_mps));
        bad("pump_power_mw", self.pump_power_mw >= 0.0 && self.pump_power_mw.is_finite(), format!("{} must be non-negative", self.pump_power_mw));
        bad("pump_model.v_max_mps", self.pump_model.v_max_mps.is_finite() && self.pump_model.v_max_mps >= 0.0, format!("{} must be non-negative", self.pump_model.v_max_mps));
        bad("pump_model.p_sat_mw", self.pump_model.p_sat_mw > 0.0 && self.pump_model.p_sat_mw.is_finite(), format!("{} must be positive", self.pump_model.p_sat_mw));
        bad("tau_s", self.tau_s > 0.0 && self.tau_s.is_finite(), format!("{} must be positive", self.tau_s));
        bad("gamma0", self.gamma0 > 0.0 && self.gamma0 <= 1.0, format!("{} not in (0, 1]", self.gamma0));
        bad("gamma_b", (0.0..1.0).contains(&self.gamma_b), format!("{} not in [0, 1)", self.gamma_b));
        bad("phi_stab_rad", self.phi_stab_rad.is_finite(), format!("{} is not finite", self.phi_stab_rad));
        bad("trials_per_point", self.trials_per_point >= 1, "must be at least 1".into());
        bad("dt_grid.count", self.dt_grid.count >= 1, "must be at least 1".into());
        bad(
            "dt_grid.start_s",
            self.dt_grid.start_s >= 0.0 && self.dt_grid.start_s.is_finite(),
            format!("{} must be non-negative", self.dt_grid.start_s),
        );
        bad(
            "dt_grid.stop_s",
            self.dt_grid.stop_s.is_finite()
                && (self.dt_grid.stop_s > self.dt_grid.start_s
                    || (self.dt_grid.count == 1 && self.dt_grid.stop_s == self.dt_grid.start_s)),
            format!("{} must exceed start_s for a strictly increasing grid", self.dt_grid.stop_s),
        );
        bad("order", matches!(self.order, 1 | 2), format!("{} not in {{1, 2}}", self.order));
        bad("noon_n", self.noon_n >= 1, "must be at least 1".into());
        bad("herald_max_attempts", self.herald_max_attempts >= 1, "must be at least 1".into());
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }

    pub fn motion(&self) -> MotionParams {
        MotionParams {
            lambda: self.lambda_m,
            theta: self.theta_rad,
            v0: self.v0_mps,
            vp: pump_velocity(self.pump_power_mw.max(0.0), &self.pump_model).unwrap_or(0.0),
            tau: self.tau_s,
            phi_stab: self.phi_stab_rad,
        }
    }

    pub fn detector(&self) -> DetectorModel {
        DetectorModel {
            gamma0: self.gamma0,
            gamma_b: self.gamma_b,
            number_resolving: self.detector_mode == DetectorMode::NumberResolving,
        }
    }

    pub fn write_params(&self) -> WriteParams {
        WriteParams {
            chi: self.chi,
            cutoff: self.cutoff,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.dt_grid.points()
    }

    /// Flattened `key = value` snapshot (dotted keys, floats at full precision).
    pub fn key_values(&self) -> BTreeMap<String, String> {
        fn walk(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
            match v {
                Value::Object(m) => {
                    for (k, v) in m {
                        let key = if prefix.is_empty() {
                            k.clone()
                        } else {
                            format!("{prefix}.{k}")
                        };
                        walk(&key, v, out);
                    }
                }
                Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
                    out.insert(prefix.to_string(), fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
                }
                Value::String(s) => {
                    out.insert(prefix.to_string(), s.clone());
                }
                other => {
                    out.insert(prefix.to_string(), other.to_string());
                }
            }
        }
        let mut out = BTreeMap::new();
        walk("", &serde_json::to_value(self).expect("config serializes"), &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = ExperimentConfig::from_json("{}", &[], None).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let back = ExperimentConfig::from_json(&cfg.to_json(), &[], None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_and_seed_env() {
        let sets = vec![
            "chi=0.02".to_string(),
            "pump_model.p_sat_mw=1.5".to_string(),
            "detector_mode=number_resolving".to_string(),
        ];
        let cfg = ExperimentConfig::from_json("{\"seed\": 3}", &sets, Some("99")).unwrap();
        assert_eq!(cfg.chi, 0.02);
        assert_eq!(cfg.pump_model.p_sat_mw, 1.5);
        assert_eq!(cfg.detector_mode, DetectorMode::NumberResolving);
        assert_eq!(cfg.seed, 99);
        assert!(matches!(
            ExperimentConfig::from_json("{}", &["nope=1".into()], None),
            Err(ConfigError::Override(..))
        ));
        assert!(matches!(
            ExperimentConfig::from_json("{}", &[], Some("x")),
            Err(ConfigError::BadSeedEnv(_))
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ExperimentConfig::from_json("{\n  \"chi\": 0.1,\n  \"cutoff\": ,\n}", &[], None).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err:?}");
        let err = ExperimentConfig::from_json("{\n\"bogus\": 1\n}", &[], None).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn validation_names_every_bad_field() {
        let text = r#"{"chi": 1.5, "gamma0": 0, "tau_s": -1, "order": 3,
                       "dt_grid": {"start_s": 1e-4, "stop_s": 1e-5, "count": 5}}"#;
        let err = ExperimentConfig::from_json(text, &[], None).unwrap_err();
        let ConfigError::Invalid(issues) = err else {
            panic!("{err:?}")
        };
        let fields: Vec<&str> = issues.iter().map(|i| i.field.as_str()).collect();
        for f in ["chi", "gamma0", "tau_s", "order", "dt_grid.stop_s"] {
            assert!(fields.contains(&f), "{f} missing from {fields:?}");
        }
    }

    #[test]
    fn cutoff_must_cover_noon_order() {
        let err = ExperimentConfig::from_json(r#"{"cutoff": 3, "noon_n": 2}"#, &[], None).unwrap_err();
        assert!(err.to_string().contains("cutoff"));
    }

    #[test]
    fn grid_and_snapshot() {
        let cfg = ExperimentConfig::default();
        let g = cfg.grid();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 0.0);
        assert!((g[24] - 600e-6).abs() < 1e-18);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let kv = cfg.key_values();
        assert_eq!(kv["pump_model.v_max_mps"], fmt_f64(0.09));
        assert_eq!(kv["trials_per_point"], "10000");
        assert_eq!(kv["detector_mode"], "threshold");
    }
}

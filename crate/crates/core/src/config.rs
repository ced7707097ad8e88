//! Declarative benchmark configuration.
//!
//! Configuration is read from TOML. Every field has a default that
//! reproduces the reference design, so an empty file is a valid config:
//!
//! ```toml
//! seed = 1
//! gammas = [0.0, 0.4, 0.8]
//! # center = [0.0, 0.4, 0.5]    # optional, applied to every ring
//!
//! [[rings]]
//! ring_id = 1
//! radius_m = 0.06
//! target_diameter_m = 0.02
//! robot_reach_time_s = 0.6
//! # num_targets = 9, step_angle_deg = 160.0
//!
//! [trial]
//! logic_rate_hz = 500
//! log_rate_hz = 40
//! countdown_s = 5.0
//! input_gain = 3.0
//! workspace_half_extent_m = 0.045
//! max_duration_s = 120.0
//! input_timeout_s = 10.0
//!
//! [operators.custom]
//! kind = "fitts"
//! a_h = 0.1
//! b_h = 0.4
//!
//! [analysis]
//! exclude_first_reach = true
//! aggregate_per_trial = false
//!
//! [server]
//! listen = "127.0.0.1:8080"
//! data_dir = "data"
//! show_gamma = false
//! ```
//!
//! Environment variables override the file: `FITTSBENCH_SEED`,
//! `FITTSBENCH_GAMMAS` (comma separated), `FITTSBENCH_LISTEN`,
//! `FITTSBENCH_DATA_DIR`. Command-line flags override both.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{HumanSource, TrialConfig};
use crate::error::{Error, Result};
use crate::geometry::{build_condition_matrix, check_gamma, Condition, RingSpec};
use crate::operators::OperatorParams;
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialDefaults {
    pub logic_rate_hz: u32,
    pub log_rate_hz: u32,
    pub countdown_s: f64,
    pub input_gain: f64,
    pub workspace_half_extent_m: f64,
    pub max_duration_s: f64,
    pub input_timeout_s: f64,
}

impl Default for TrialDefaults {
    fn default() -> Self {
        let t = TrialConfig::simulated(RingSpec::reference_rings().remove(0), 0.0, OperatorParams::idle(), 0);
        Self {
            logic_rate_hz: t.logic_rate_hz,
            log_rate_hz: t.log_rate_hz,
            countdown_s: t.countdown_s,
            input_gain: t.input_gain,
            workspace_half_extent_m: t.workspace_half_extent_m,
            max_duration_s: t.max_duration_s,
            input_timeout_s: t.input_timeout_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub exclude_first_reach: bool,
    pub aggregate_per_trial: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { exclude_first_reach: true, aggregate_per_trial: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerOptions {
    pub listen: String,
    pub data_dir: PathBuf,
    /// Disclose the autonomy level to the client, for practice sessions.
    pub show_gamma: bool,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self { listen: "127.0.0.1:8080".into(), data_dir: PathBuf::from("data"), show_gamma: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub gammas: Vec<f64>,
    pub center: Option<Vec3>,
    pub rings: Vec<RingSpec>,
    pub trial: TrialDefaults,
    /// Extra operator presets; names shadow the built-in ones.
    pub operators: BTreeMap<String, OperatorParams>,
    pub analysis: AnalysisOptions,
    pub server: ServerOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            gammas: vec![0.0, 0.4, 0.8],
            center: None,
            rings: RingSpec::reference_rings(),
            trial: TrialDefaults::default(),
            operators: BTreeMap::new(),
            analysis: AnalysisOptions::default(),
            server: ServerOptions::default(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: BenchConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Applies the shared center, if any, to every ring.
    fn normalize(&mut self) {
        if let Some(c) = self.center {
            for r in &mut self.rings {
                r.center = c;
            }
        }
    }

    /// Applies `FITTSBENCH_*` overrides read through `var`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(s) = var("FITTSBENCH_SEED") {
            self.seed = s.trim().parse().map_err(|_| Error::Config(format!("FITTSBENCH_SEED: not an integer: {s}")))?;
        }
        if let Some(s) = var("FITTSBENCH_GAMMAS") {
            self.gammas = parse_gamma_list(&s)?;
        }
        if let Some(s) = var("FITTSBENCH_LISTEN") {
            self.server.listen = s;
        }
        if let Some(s) = var("FITTSBENCH_DATA_DIR") {
            self.server.data_dir = PathBuf::from(s);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rings.is_empty() || self.gammas.is_empty() {
            return Err(Error::Config("need at least one ring and one autonomy level".into()));
        }
        for r in &self.rings {
            r.validate()?;
        }
        let mut ids: Vec<u32> = self.rings.iter().map(|r| r.ring_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("ring ids must be unique".into()));
        }
        for &g in &self.gammas {
            check_gamma(g)?;
        }
        Ok(())
    }

    pub fn ring(&self, ring_id: u32) -> Result<&RingSpec> {
        self.rings.iter().find(|r| r.ring_id == ring_id).ok_or_else(|| {
            let valid: Vec<String> = self.rings.iter().map(|r| r.ring_id.to_string()).collect();
            Error::Config(format!("unknown ring {ring_id}; valid rings: {}", valid.join(", ")))
        })
    }

    pub fn ring_ids(&self) -> Vec<u32> {
        self.rings.iter().map(|r| r.ring_id).collect()
    }

    pub fn conditions(&self) -> Result<Vec<Condition>> {
        build_condition_matrix(&self.ring_ids(), &self.gammas)
    }

    /// Operator preset by name; configured presets shadow the built-ins.
    pub fn operator(&self, name: &str) -> Result<OperatorParams> {
        self.operators.get(name).cloned().or_else(|| OperatorParams::preset(name)).ok_or_else(|| {
            let mut names: Vec<&str> = OperatorParams::PRESET_NAMES.to_vec();
            names.extend(self.operators.keys().map(String::as_str));
            Error::Config(format!("unknown operator `{name}`; known operators: {}", names.join(", ")))
        })
    }

    pub fn trial_config(&self, condition: Condition, human: HumanSource, seed: u64) -> Result<TrialConfig> {
        check_gamma(condition.gamma)?;
        let t = &self.trial;
        let cfg = TrialConfig {
            condition,
            ring: self.ring(condition.ring_id)?.clone(),
            logic_rate_hz: t.logic_rate_hz,
            log_rate_hz: t.log_rate_hz,
            countdown_s: t.countdown_s,
            input_gain: t.input_gain,
            workspace_half_extent_m: t.workspace_half_extent_m,
            max_duration_s: t.max_duration_s,
            input_timeout_s: t.input_timeout_s,
            seed,
            human,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_gamma_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            let g: f64 = p.trim().parse().map_err(|_| Error::Config(format!("not a number: `{p}`")))?;
            check_gamma(g)?;
            Ok(g)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference_design() {
        let cfg = BenchConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, BenchConfig::default());
        assert_eq!(cfg.rings, RingSpec::reference_rings());
        assert_eq!(cfg.conditions().unwrap().len(), 12);
    }

    #[test]
    fn parses_rings_and_presets() {
        let text = r#"
            seed = 9
            gammas = [0.0, 1.0]
            center = [0.1, 0.2, 0.3]
            [[rings]]
            ring_id = 7
            radius_m = 0.1
            target_diameter_m = 0.03
            robot_reach_time_s = 0.9
            [operators.fast]
            kind = "fitts"
            a_h = 0.05
            b_h = 0.2
        "#;
        let cfg = BenchConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.rings.len(), 1);
        assert_eq!(cfg.rings[0].num_targets, 9);
        assert_eq!(cfg.rings[0].center, Vec3::new(0.1, 0.2, 0.3));
        assert_eq!(cfg.operator("fast").unwrap().b_h, 0.2);
        assert_eq!(cfg.operator("expert").unwrap(), OperatorParams::expert());
        assert!(cfg.operator("nobody").unwrap_err().to_string().contains("fast"));
        assert!(cfg.ring(1).unwrap_err().to_string().contains("valid rings: 7"));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(BenchConfig::from_toml_str("gammas = [1.5]").is_err());
        assert!(BenchConfig::from_toml_str("unknown_key = 1").is_err());
        let dup = "[[rings]]\nring_id=1\nradius_m=0.1\ntarget_diameter_m=0.01\nrobot_reach_time_s=1\n".repeat(2);
        assert!(BenchConfig::from_toml_str(&dup).is_err());
    }

    #[test]
    fn env_overrides_file() {
        let mut cfg = BenchConfig::from_toml_str("seed = 3").unwrap();
        let env = |k: &str| match k {
            "FITTSBENCH_SEED" => Some("42".to_string()),
            "FITTSBENCH_GAMMAS" => Some("0, 0.5".to_string()),
            "FITTSBENCH_LISTEN" => Some("0.0.0.0:9000".to_string()),
            _ => None,
        };
        cfg.apply_env(env).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.gammas, vec![0.0, 0.5]);
        assert_eq!(cfg.server.listen, "0.0.0.0:9000");
        assert!(cfg.apply_env(|k| (k == "FITTSBENCH_SEED").then(|| "x".to_string())).is_err());
    }
}

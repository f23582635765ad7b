//! Flat `key = value` configuration files.
//!
//! Sections are spelled as key prefixes (`env.`, `penalty.`, `decay.`,
//! `train.`), `#` starts a comment. Unknown keys are rejected. Values
//! override the defaults documented in the README; penalty breakpoints are
//! given as fractions of the total map area so they survive world resizing.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use crate::env::{EnvConfig, ObsMode};
use crate::learner::{TargetRule, TrainConfig};
use crate::relevance::{DecayParams, MapGenConfig, PenaltyParams};
use crate::{Error, Result};

/// Full simulator + training configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub env: EnvConfig,
    pub mapgen: MapGenConfig,
    pub train: TrainConfig,
    pub epochs_greedy: usize,
    pub epochs_coop: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            mapgen: MapGenConfig::default(),
            train: TrainConfig::default(),
            epochs_greedy: 100_000,
            epochs_coop: 300_000,
        }
    }
}

impl SimConfig {
    /// Training hyperparameters for a mode (sets the per-mode epoch budget).
    pub fn train_for(&self, mode: ObsMode) -> TrainConfig {
        let mut cfg = self.train.clone();
        cfg.epochs = match mode {
            ObsMode::Greedy => self.epochs_greedy,
            ObsMode::Coop => self.epochs_coop,
        };
        cfg
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key = value, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if pairs.insert(key.clone(), (lineno + 1, value)).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
        }

        let mut cfg = SimConfig::default();
        let mut rotate_step_set = false;
        let mut penalty_fracs = [0.005, 0.02, 0.10, 0.20];
        let mut penalty_set = false;

        for (key, (lineno, value)) in &pairs {
            let fail = |what: &str| {
                Error::Config(format!("line {lineno}: bad value for {key}: {what}"))
            };
            let f = || value.parse::<f64>().map_err(|_| fail("expected a number"));
            let u = || value.parse::<usize>().map_err(|_| fail("expected an integer"));
            match key.as_str() {
                "env.world_side" => cfg.env.world_side = f()?,
                "env.map_cells" => cfg.env.map_cells = u()?,
                "env.z_min" => cfg.env.z_min = f()?,
                "env.z_max" => cfg.env.z_max = f()?,
                "env.disc" => cfg.env.disc = u()?,
                "env.rotate_step" => {
                    cfg.env.rotate_step = f()?;
                    rotate_step_set = true;
                }
                "env.episode_len" => cfg.env.episode_len = u()?,
                "env.window_size" => cfg.env.window_size = u()?,
                "env.window_scale" => cfg.env.window_scale = f()?,
                "env.sensor_half_width" => cfg.env.intrinsics.sensor_half_width = f()?,
                "env.sensor_half_height" => cfg.env.intrinsics.sensor_half_height = f()?,
                "env.focal_min" => cfg.env.intrinsics.focal_min = f()?,
                "env.focal_max" => cfg.env.intrinsics.focal_max = f()?,
                "env.blobs_min" => cfg.mapgen.blobs_min = u()?,
                "env.blobs_max" => cfg.mapgen.blobs_max = u()?,
                "env.sigma_min" => cfg.mapgen.sigma_min = f()?,
                "env.sigma_max" => cfg.mapgen.sigma_max = f()?,
                "penalty.a0_frac" => {
                    penalty_fracs[0] = f()?;
                    penalty_set = true;
                }
                "penalty.a1_frac" => {
                    penalty_fracs[1] = f()?;
                    penalty_set = true;
                }
                "penalty.a2_frac" => {
                    penalty_fracs[2] = f()?;
                    penalty_set = true;
                }
                "penalty.a3_frac" => {
                    penalty_fracs[3] = f()?;
                    penalty_set = true;
                }
                "decay.delta_minus" => cfg.env.decay.delta_minus = f()?,
                "decay.delta_plus" => cfg.env.decay.delta_plus = f()?,
                "train.gamma" => cfg.train.gamma = f()?,
                "train.batch_size" => cfg.train.batch_size = u()?,
                "train.learning_rate" => cfg.train.learning_rate = f()?,
                "train.epochs_greedy" => cfg.epochs_greedy = u()?,
                "train.epochs_coop" => cfg.epochs_coop = u()?,
                "train.soft_alpha" => cfg.train.soft_alpha = f()?,
                "train.epsilon_start" => cfg.train.epsilon_start = f()?,
                "train.epsilon_end" => cfg.train.epsilon_end = f()?,
                "train.replay_capacity" => cfg.train.replay_capacity = u()?,
                "train.episode_len" => cfg.train.episode_len = u()?,
                "train.drones_min" => cfg.train.drones_min = u()?,
                "train.drones_max" => cfg.train.drones_max = u()?,
                "train.target_rule" => {
                    cfg.train.target_rule = match value.as_str() {
                        "double" => TargetRule::DoubleDqn,
                        "target" => TargetRule::TargetNetwork,
                        _ => return Err(fail("expected double|target")),
                    }
                }
                _ => return Err(Error::Config(format!("line {lineno}: unknown key {key}"))),
            }
        }

        if !rotate_step_set {
            cfg.env.rotate_step = TAU / cfg.env.disc as f64;
        }
        // Penalty breakpoints are tied to the (possibly resized) map area.
        let area = cfg.env.world_side * cfg.env.world_side;
        cfg.env.penalty = if penalty_set {
            PenaltyParams::from_fractions(area, penalty_fracs)?
        } else {
            PenaltyParams::default_for_area(area)
        };
        cfg.env.decay = DecayParams::new(cfg.env.decay.delta_minus, cfg.env.decay.delta_plus)?;
        // Keep the environment's episode length in lockstep unless set apart.
        if !pairs.contains_key("env.episode_len") {
            cfg.env.episode_len = cfg.train.episode_len;
        }

        cfg.env.validate()?;
        cfg.train.validate()?;
        if cfg.mapgen.blobs_min == 0 || cfg.mapgen.blobs_min > cfg.mapgen.blobs_max {
            return Err(Error::Config("blob count range must be non-empty".into()));
        }
        if !(cfg.mapgen.sigma_min > 0.0 && cfg.mapgen.sigma_min <= cfg.mapgen.sigma_max) {
            return Err(Error::Config("sigma range must be non-empty and positive".into()));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_text() {
        let cfg = SimConfig::parse("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.train_for(ObsMode::Greedy).epochs, 100_000);
        assert_eq!(cfg.train_for(ObsMode::Coop).epochs, 300_000);
    }

    #[test]
    fn overrides_recompute_derived_values() {
        let cfg = SimConfig::parse(
            "# world\n\
             env.world_side = 512\n\
             env.map_cells = 32\n\
             env.disc = 16\n\
             train.epochs_greedy = 20000\n\
             decay.delta_minus = 0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.env.disc, 16);
        assert!((cfg.env.rotate_step - TAU / 16.0).abs() < 1e-12);
        // Penalty scales with the new map area.
        assert!((cfg.env.penalty.a0 - 0.005 * 512.0 * 512.0).abs() < 1e-9);
        assert_eq!(cfg.epochs_greedy, 20_000);
        assert_eq!(cfg.env.decay.delta_minus, 0.2);
    }

    #[test]
    fn bad_lines_are_rejected_with_line_numbers() {
        let err = SimConfig::parse("env.disc 16").unwrap_err();
        assert!(err.to_string().contains("line 1"));
        let err = SimConfig::parse("nope.key = 3").unwrap_err();
        assert!(err.to_string().contains("unknown key"));
        let err = SimConfig::parse("env.disc = banana").unwrap_err();
        assert!(err.to_string().contains("integer"));
        let err = SimConfig::parse("env.disc = 8\nenv.disc = 9").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn invalid_combinations_fail_validation() {
        assert!(SimConfig::parse("env.rotate_step = 0.5").is_err());
        assert!(SimConfig::parse("decay.delta_plus = 0.5").is_err());
        assert!(SimConfig::parse("train.gamma = 1.5").is_err());
    }
}

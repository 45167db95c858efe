use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::compute::ComputeConfig;
use crate::env::{AccessConfig, EnvConfig, EpisodeConfig};
use crate::error::{Error, Result};
use crate::marl::TrainConfig;

/// Parameter swept by `run_sweep`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    #[default]
    None,
    /// Serving-cluster size as a fraction of the AP count.
    ClusterFraction(Vec<f64>),
    NumUsers(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Write every evaluation step to `trace.jsonl`.
    pub trace: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckpointConfig {
    /// Episodes between periodic checkpoints; 0 keeps only the final one.
    pub every_episodes: usize,
}

impl Default for CheckpointConfig {
    fn default() -> Self {
        Self {
            every_episodes: 250,
        }
    }
}

/// Everything needed to reproduce a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub channel: ChannelConfig,
    pub compute: ComputeConfig,
    pub access: AccessConfig,
    pub episode: EpisodeConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub checkpoint: CheckpointConfig,
    #[serde(default)]
    pub sweep: SweepAxis,
}

impl ExperimentConfig {
    /// Full-size network: 100 APs, 10 users, 30-AP clusters, 1 km square.
    pub fn full() -> Self {
        Self {
            scenario: "full".into(),
            seed: 1,
            output_dir: PathBuf::from("runs/full"),
            channel: ChannelConfig::default(),
            compute: ComputeConfig::default(),
            access: AccessConfig::default(),
            episode: EpisodeConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            checkpoint: CheckpointConfig::default(),
            sweep: SweepAxis::None,
        }
    }

    /// Reduced network: 25 APs on a 500 m square, 4 users, 8-AP clusters,
    /// 40 GHz edge server.
    pub fn desk() -> Self {
        Self {
            scenario: "desk".into(),
            output_dir: PathBuf::from("runs/desk"),
            channel: ChannelConfig {
                num_aps: 25,
                num_users: 4,
                area_side: 500.0,
                ..ChannelConfig::default()
            },
            compute: ComputeConfig {
                f_cpu: 40e9,
                ..ComputeConfig::default()
            },
            access: AccessConfig {
                cluster_size: 8,
                ..AccessConfig::default()
            },
            ..Self::full()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(Error::Config(format!(
                "unknown preset {other:?}; expected desk or full"
            ))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            channel: self.channel.clone(),
            compute: self.compute.clone(),
            access: self.access.clone(),
            episode: self.episode.clone(),
        }
    }

    /// Training settings with the experiment seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.env_config().validate().map_err(wrap)?;
        self.train.validate().map_err(wrap)?;
        if self.eval.episodes == 0 {
            return Err(Error::Config("eval.episodes must be at least 1".into()));
        }
        match &self.sweep {
            SweepAxis::ClusterFraction(v)
                if v.is_empty() || v.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) =>
            {
                Err(Error::Config("cluster fractions must lie in (0, 1]".into()))
            }
            SweepAxis::NumUsers(v) if v.is_empty() || v.contains(&0) => {
                Err(Error::Config("user counts must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Cluster size for a fraction of the AP count, at least one AP.
    pub fn cluster_size_for(&self, fraction: f64) -> usize {
        ((fraction * self.channel.num_aps as f64).round() as usize).clamp(1, self.channel.num_aps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for cfg in [ExperimentConfig::desk(), ExperimentConfig::full()] {
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_toml().unwrap(), text);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = ExperimentConfig::desk().to_toml().unwrap();
        let typo = text.replacen("[channel]\n", "[channel]\nnum_apps = 3\n", 1);
        assert!(matches!(
            ExperimentConfig::from_toml(&typo),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sweep_axis_in_toml() {
        let mut cfg = ExperimentConfig::desk();
        cfg.sweep = SweepAxis::ClusterFraction(vec![0.2, 0.5, 1.0]);
        let text = cfg.to_toml().unwrap();
        assert!(text.contains("axis = \"cluster_fraction\""));
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap().sweep, cfg.sweep);
        cfg.sweep = SweepAxis::ClusterFraction(vec![0.0]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cluster_sizes_from_fractions() {
        let cfg = ExperimentConfig::desk();
        assert_eq!(cfg.cluster_size_for(0.2), 5);
        assert_eq!(cfg.cluster_size_for(0.5), 13);
        assert_eq!(cfg.cluster_size_for(1.0), 25);
        assert_eq!(cfg.cluster_size_for(0.01), 1);
    }
}

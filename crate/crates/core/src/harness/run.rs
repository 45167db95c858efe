use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepAxis};
use super::metrics::{JsonLines, MetricsRecord, TimingRecord};
use crate::env::{Env, TraceRecord};
use crate::error::{Error, Result};
use crate::marl::{
    evaluate_policy, stream_rng, streams, ActionMode, EvalReport, Layout, Learner, LearnerSnapshot,
    LocalFirst, OffloadFirst, Policy, TraceSink, TrainedPolicy,
};
use crate::neural::checkpoint;

/// The compared allocation schemes, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Maddpg,
    CentralizedDdpg,
    OffloadFirstFpc,
    LocalFirstFpc,
    MaddpgCraFpc,
    MaddpgCraMax,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Maddpg,
        Scheme::CentralizedDdpg,
        Scheme::OffloadFirstFpc,
        Scheme::LocalFirstFpc,
        Scheme::MaddpgCraFpc,
        Scheme::MaddpgCraMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Maddpg => "maddpg",
            Scheme::CentralizedDdpg => "centralized_ddpg",
            Scheme::OffloadFirstFpc => "offload_first_fpc",
            Scheme::LocalFirstFpc => "local_first_fpc",
            Scheme::MaddpgCraFpc => "maddpg_cra_fpc",
            Scheme::MaddpgCraMax => "maddpg_cra_max",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let norm = name.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|s| s.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown scheme {name:?}")))
    }

    pub fn is_learned(self) -> bool {
        !matches!(self, Scheme::OffloadFirstFpc | Scheme::LocalFirstFpc)
    }

    /// Learner layout and action mode for learned schemes.
    pub fn learner_shape(self) -> Option<(Layout, ActionMode)> {
        match self {
            Scheme::Maddpg => Some((Layout::Decentralized, ActionMode::Joint)),
            Scheme::CentralizedDdpg => Some((Layout::Centralized, ActionMode::Joint)),
            Scheme::MaddpgCraFpc => Some((Layout::Decentralized, ActionMode::CraFpc)),
            Scheme::MaddpgCraMax => Some((Layout::Decentralized, ActionMode::CraMax)),
            Scheme::OffloadFirstFpc | Scheme::LocalFirstFpc => None,
        }
    }

    fn heuristic(self) -> Option<Box<dyn Policy>> {
        match self {
            Scheme::OffloadFirstFpc => Some(Box::new(OffloadFirst)),
            Scheme::LocalFirstFpc => Some(Box::new(LocalFirst)),
            _ => None,
        }
    }
}

/// Files produced by [`run_train`].
#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub metrics: PathBuf,
    pub timing: PathBuf,
    pub final_checkpoint: PathBuf,
    pub records: Vec<MetricsRecord>,
}

pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const TIMING_FILE: &str = "timing.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_CHECKPOINT: &str = "final.json";

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Trains `scheme` under `cfg` into `cfg.output_dir`: a config snapshot,
/// per-episode metrics, periodic checkpoints and a final checkpoint (at
/// `final_checkpoint` when given). On divergence the periodic checkpoints
/// already written are kept and the error is returned.
pub fn run_train(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    final_checkpoint: Option<&Path>,
) -> Result<TrainArtifacts> {
    cfg.validate()?;
    let (layout, mode) = scheme
        .learner_shape()
        .ok_or_else(|| Error::Config(format!("{} has nothing to train", scheme.name())))?;
    let dir = cfg.output_dir.clone();
    let ckpt_dir = dir.join(CHECKPOINT_DIR);
    create_dir(&ckpt_dir)?;
    let config_path = dir.join(CONFIG_FILE);
    write_file(&config_path, &cfg.to_toml()?)?;
    let metrics_path = dir.join(METRICS_FILE);
    let timing_path = dir.join(TIMING_FILE);
    let mut metrics = JsonLines::create(&metrics_path)?;
    let mut timing = JsonLines::create(&timing_path)?;

    let mut tc = cfg.train_config();
    tc.action_mode = mode;
    let mut env = Env::new(cfg.env_config())?;
    let mut learner = Learner::for_env(&env, layout, tc)?;
    let mut env_rng = stream_rng(cfg.seed, streams::ENV);
    let every = cfg.checkpoint.every_episodes;
    let start = Instant::now();
    let mut records = Vec::with_capacity(cfg.train.episodes);
    learner.train(&mut env, &mut env_rng, cfg.train.episodes, |l, stats| {
        let rec = MetricsRecord::from(stats);
        metrics.append(&rec)?;
        timing.append(&TimingRecord {
            episode: stats.episode,
            wall_clock_s: start.elapsed().as_secs_f64(),
        })?;
        records.push(rec);
        let done = stats.episode + 1;
        if every > 0 && done % every == 0 && done < cfg.train.episodes {
            checkpoint::save(&ckpt_dir.join(format!("ep{done:06}.json")), &l.snapshot())?;
        }
        Ok(())
    })?;
    let final_path = final_checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ckpt_dir.join(FINAL_CHECKPOINT));
    if let Some(parent) = final_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    checkpoint::save(&final_path, &learner.snapshot())?;
    Ok(TrainArtifacts {
        dir,
        config: config_path,
        metrics: metrics_path,
        timing: timing_path,
        final_checkpoint: final_path,
        records,
    })
}

/// Loads a learned policy and checks it against the environment of `cfg`.
pub fn load_policy(path: &Path, cfg: &ExperimentConfig, name: &str) -> Result<TrainedPolicy> {
    let snap: LearnerSnapshot = checkpoint::load(path)?;
    if snap.num_users != cfg.channel.num_users {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint has {} users, config has {}",
            snap.num_users, cfg.channel.num_users
        )));
    }
    TrainedPolicy::from_snapshot(name, &snap)
}

/// Greedy evaluation of any policy on fresh episodes drawn from the
/// evaluation stream of `cfg.seed`.
pub fn evaluate(
    cfg: &ExperimentConfig,
    policy: &mut dyn Policy,
    trace: Option<TraceSink<'_>>,
) -> Result<EvalReport> {
    let mut env = Env::new(cfg.env_config())?;
    let mut rng = stream_rng(cfg.seed, streams::EVAL);
    evaluate_policy(&mut env, policy, cfg.eval.episodes, &mut rng, trace)
}

/// Evaluates a checkpoint, writing `eval.json` and, when enabled,
/// `trace.jsonl` under `cfg.output_dir`.
pub fn run_eval(checkpoint_path: &Path, cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let mut policy = load_policy(checkpoint_path, cfg, "checkpoint")?;
    create_dir(&cfg.output_dir)?;
    let report = if cfg.eval.trace {
        let mut sink = JsonLines::create(&cfg.output_dir.join("trace.jsonl"))?;
        let mut write = |r: &TraceRecord| sink.append(r);
        evaluate(cfg, &mut policy, Some(&mut write))?
    } else {
        evaluate(cfg, &mut policy, None)?
    };
    write_file(
        &cfg.output_dir.join("eval.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// One line of the scheme comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub scheme: String,
    pub available: bool,
    /// Joules per user per step.
    pub mean_energy: Option<f64>,
    pub success_rate: Option<f64>,
    pub mean_delay: Option<f64>,
}

impl BaselineRow {
    fn from_report(scheme: Scheme, r: &EvalReport) -> Self {
        Self {
            scheme: scheme.name().into(),
            available: true,
            mean_energy: Some(r.mean_energy),
            success_rate: Some(r.success_rate),
            mean_delay: r.mean_delay.is_finite().then_some(r.mean_delay),
        }
    }

    fn unavailable(scheme: Scheme) -> Self {
        Self {
            scheme: scheme.name().into(),
            available: false,
            mean_energy: None,
            success_rate: None,
            mean_delay: None,
        }
    }
}

/// Evaluates all six schemes on the same episodes. Learned schemes need a
/// checkpoint in `checkpoints`; without one their row is unavailable.
pub fn baseline_table(
    cfg: &ExperimentConfig,
    checkpoints: &BTreeMap<Scheme, PathBuf>,
) -> Result<Vec<BaselineRow>> {
    cfg.validate()?;
    Scheme::ALL
        .into_iter()
        .map(|scheme| {
            if let Some(mut p) = scheme.heuristic() {
                return Ok(BaselineRow::from_report(
                    scheme,
                    &evaluate(cfg, p.as_mut(), None)?,
                ));
            }
            match checkpoints.get(&scheme) {
                Some(path) => {
                    let mut p = load_policy(path, cfg, scheme.name())?;
                    Ok(BaselineRow::from_report(
                        scheme,
                        &evaluate(cfg, &mut p, None)?,
                    ))
                }
                None => Ok(BaselineRow::unavailable(scheme)),
            }
        })
        .collect()
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub scheme: String,
    pub num_users: usize,
    pub cluster_size: usize,
    /// Joules per user per step.
    pub mean_energy: f64,
    pub success_rate: f64,
    /// Mean episode reward divided by the number of users.
    pub reward_per_user: f64,
}

/// Runs every point of `cfg.sweep` with the same seed. Learned schemes are
/// trained per point under `output_dir/<axis>_<value>`.
pub fn run_sweep(cfg: &ExperimentConfig, scheme: Scheme) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let points: Vec<(String, f64, ExperimentConfig)> = match &cfg.sweep {
        SweepAxis::None => return Err(Error::Config("no sweep axis configured".into())),
        SweepAxis::ClusterFraction(fracs) => fracs
            .iter()
            .map(|&f| {
                let mut c = cfg.clone();
                c.access.cluster_size = cfg.cluster_size_for(f);
                ("cluster_fraction".to_string(), f, c)
            })
            .collect(),
        SweepAxis::NumUsers(ks) => ks
            .iter()
            .map(|&k| {
                let mut c = cfg.clone();
                c.channel.num_users = k;
                ("num_users".to_string(), k as f64, c)
            })
            .collect(),
    };
    points
        .into_iter()
        .map(|(axis, value, mut point)| {
            point.sweep = SweepAxis::None;
            point.output_dir = cfg.output_dir.join(format!("{axis}_{value}"));
            let report = match scheme.heuristic() {
                Some(mut p) => evaluate(&point, p.as_mut(), None)?,
                None => {
                    let art = run_train(&point, scheme, None)?;
                    let mut p = load_policy(&art.final_checkpoint, &point, scheme.name())?;
                    evaluate(&point, &mut p, None)?
                }
            };
            let k = point.channel.num_users;
            Ok(SweepRow {
                axis,
                value,
                scheme: scheme.name().into(),
                num_users: k,
                cluster_size: point.access.cluster_size,
                mean_energy: report.mean_energy,
                success_rate: report.success_rate,
                reward_per_user: report.mean_episode_reward / k as f64,
            })
        })
        .collect()
}

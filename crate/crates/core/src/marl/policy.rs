use rand::Rng;
use serde::{Deserialize, Serialize};

use super::learner::{ActionMode, Layout, Learner, LearnerSnapshot};
use super::scaler::ObsScaler;
use crate::env::{Action, ActionCheck, Env, Observation, TraceRecord, OBS_DIM};
use crate::error::{Error, Result};
use crate::neural::Mlp;

/// Maps the current observations (and, for power-control rules, the
/// network's large-scale gains) to a joint action.
pub trait Policy {
    fn name(&self) -> &str;
    fn decide(&mut self, env: &Env, obs: &[Observation]) -> Result<Vec<Action>>;
}

/// Offload everything, fractional power control on the uplink.
#[derive(Debug, Clone, Copy, Default)]
pub struct OffloadFirst;

/// Full local clock, remainder offloaded with fractional power control.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalFirst;

impl Policy for OffloadFirst {
    fn name(&self) -> &str {
        "offload_first_fpc"
    }

    fn decide(&mut self, env: &Env, _obs: &[Observation]) -> Result<Vec<Action>> {
        Ok(env
            .fpc_eta()?
            .into_iter()
            .map(|e| Action::new(0.0, e))
            .collect())
    }
}

impl Policy for LocalFirst {
    fn name(&self) -> &str {
        "local_first_fpc"
    }

    fn decide(&mut self, env: &Env, _obs: &[Observation]) -> Result<Vec<Action>> {
        Ok(env
            .fpc_eta()?
            .into_iter()
            .map(|e| Action::new(1.0, e))
            .collect())
    }
}

/// Same action for every user at every step.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub Action);

impl Policy for Constant {
    fn name(&self) -> &str {
        "constant"
    }

    fn decide(&mut self, env: &Env, _obs: &[Observation]) -> Result<Vec<Action>> {
        Ok(vec![self.0; env.num_users()])
    }
}

/// Frozen actors of a trained learner, without critics or buffers.
#[derive(Debug, Clone)]
pub struct TrainedPolicy {
    name: String,
    layout: Layout,
    mode: ActionMode,
    num_users: usize,
    scaler: ObsScaler,
    actors: Vec<(Vec<usize>, Mlp)>,
}

impl TrainedPolicy {
    pub fn from_learner(name: impl Into<String>, learner: &Learner) -> Self {
        let mut scaler = learner.scaler;
        scaler.freeze();
        Self {
            name: name.into(),
            layout: learner.layout(),
            mode: learner.mode(),
            num_users: learner.num_users(),
            scaler,
            actors: learner
                .agents
                .iter()
                .map(|a| (a.users.clone(), a.actor.clone()))
                .collect(),
        }
    }

    pub fn from_snapshot(name: impl Into<String>, snap: &LearnerSnapshot) -> Result<Self> {
        Ok(Self::from_learner(name, &Learner::restore(snap)?))
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn mode(&self) -> ActionMode {
        self.mode
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Learned outputs of one agent from its own observations only.
    pub fn act_local(&self, agent: usize, own_obs: &[Observation]) -> Result<Vec<f64>> {
        let (users, actor) = self
            .actors
            .get(agent)
            .ok_or_else(|| Error::invalid(format!("no agent {agent}")))?;
        if own_obs.len() != users.len() {
            return Err(Error::invalid(
                "observation count does not match the agent's users",
            ));
        }
        let mut x = Vec::with_capacity(OBS_DIM * own_obs.len());
        for o in own_obs {
            x.extend_from_slice(&self.scaler.scaled(o));
        }
        actor.predict(&x)
    }
}

impl Policy for TrainedPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, env: &Env, obs: &[Observation]) -> Result<Vec<Action>> {
        if obs.len() != self.num_users || env.num_users() != self.num_users {
            return Err(Error::CheckpointMismatch(format!(
                "policy trained for {} users, environment has {}",
                self.num_users,
                env.num_users()
            )));
        }
        let ad = self.mode.learned_dim();
        let mut joint = vec![0.0; ad * self.num_users];
        for (i, (users, _)) in self.actors.iter().enumerate() {
            let own: Vec<Observation> = users.iter().map(|&u| obs[u]).collect();
            let out = self.act_local(i, &own)?;
            for (n, &u) in users.iter().enumerate() {
                joint[u * ad..(u + 1) * ad].copy_from_slice(&out[n * ad..(n + 1) * ad]);
            }
        }
        let fpc = match self.mode {
            ActionMode::CraFpc => env.fpc_eta()?,
            _ => vec![1.0; self.num_users],
        };
        Ok(joint
            .chunks_exact(ad)
            .zip(fpc)
            .map(|(l, e)| self.mode.to_action(l, e))
            .collect())
    }
}

/// Aggregate outcome of evaluation episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub episodes: usize,
    pub tasks: usize,
    pub success_rate: f64,
    /// Joules per user per step.
    pub mean_energy: f64,
    pub mean_episode_reward: f64,
    /// Seconds, over tasks that finished.
    pub mean_delay: f64,
    pub delay_p50: f64,
    pub delay_p90: f64,
    pub delay_p99: f64,
    pub unfinished: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Receives every evaluated step.
pub type TraceSink<'a> = &'a mut dyn FnMut(&TraceRecord) -> Result<()>;

/// Runs `episodes` episodes with strict action checking. Every step is
/// handed to `trace` when given.
pub fn evaluate_policy<P, R>(
    env: &mut Env,
    policy: &mut P,
    episodes: usize,
    rng: &mut R,
    mut trace: Option<TraceSink<'_>>,
) -> Result<EvalReport>
where
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    if episodes == 0 {
        return Err(Error::invalid("at least one evaluation episode required"));
    }
    env.set_action_check(ActionCheck::Strict);
    let (mut tasks, mut met, mut energy, mut reward) = (0usize, 0usize, 0.0, 0.0);
    let mut delays = Vec::new();
    let result = (|| -> Result<()> {
        for episode in 0..episodes {
            let mut obs = env.reset(rng)?;
            loop {
                let actions = policy.decide(env, &obs)?;
                let step = env.step_index();
                let res = env.step(&actions, rng)?;
                reward += res.outcome.reward;
                for u in &res.outcome.users {
                    tasks += 1;
                    met += u.deadline_met as usize;
                    energy += u.energy;
                    if u.delay.is_finite() {
                        delays.push(u.delay);
                    }
                }
                if let Some(t) = trace.as_mut() {
                    t(&TraceRecord {
                        episode,
                        step,
                        observations: obs.clone(),
                        actions: actions.clone(),
                        outcome: res.outcome.clone(),
                    })?;
                }
                obs = res.observations;
                if res.done {
                    break;
                }
            }
        }
        Ok(())
    })();
    env.set_action_check(ActionCheck::Clamp);
    result?;
    let finished = delays.len();
    let mean_delay = if finished > 0 {
        delays.iter().sum::<f64>() / finished as f64
    } else {
        f64::NAN
    };
    delays.sort_by(f64::total_cmp);
    Ok(EvalReport {
        policy: policy.name().to_string(),
        episodes,
        tasks,
        success_rate: met as f64 / tasks as f64,
        mean_energy: energy / tasks as f64,
        mean_episode_reward: reward / episodes as f64,
        mean_delay,
        delay_p50: quantile(&delays, 0.5),
        delay_p90: quantile(&delays, 0.9),
        delay_p99: quantile(&delays, 0.99),
        unfinished: tasks - finished,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelConfig;
    use crate::compute::ComputeConfig;
    use crate::env::{AccessConfig, EnvConfig, EpisodeConfig};
    use crate::marl::TrainConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env_with(compute: ComputeConfig) -> Env {
        Env::new(EnvConfig {
            channel: ChannelConfig {
                num_aps: 16,
                num_users: 3,
                area_side: 500.0,
                ..ChannelConfig::default()
            },
            access: AccessConfig {
                cluster_size: 4,
                ..AccessConfig::default()
            },
            episode: EpisodeConfig {
                steps_per_episode: 20,
                ..EpisodeConfig::default()
            },
            compute,
        })
        .unwrap()
    }

    fn env() -> Env {
        env_with(ComputeConfig::default())
    }

    #[test]
    fn heuristics_fix_alpha_and_use_fpc() {
        let mut env = env();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let obs = env.reset(&mut rng).unwrap();
        let fpc = env.fpc_eta().unwrap();
        let local = LocalFirst.decide(&env, &obs).unwrap();
        let offload = OffloadFirst.decide(&env, &obs).unwrap();
        for k in 0..3 {
            assert!(fpc[k] > 0.0 && fpc[k] <= 1.0);
            assert_eq!(local[k], Action::new(1.0, fpc[k]));
            assert_eq!(offload[k], Action::new(0.0, fpc[k]));
        }
    }

    #[test]
    fn local_first_meets_every_deadline_when_tasks_fit_locally() {
        let mut env = env_with(ComputeConfig {
            task_min: 1000.0,
            task_max: 2000.0,
            ..ComputeConfig::default()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = evaluate_policy(&mut env, &mut LocalFirst, 5, &mut rng, None).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert_eq!(r.unfinished, 0);
        assert_eq!(r.tasks, 5 * 20 * 3);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let run = || {
            let mut env = env();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            evaluate_policy(&mut env, &mut OffloadFirst, 3, &mut rng, None).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn reported_energy_matches_trace_recount() {
        let mut env = env();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut energies = Vec::new();
        let mut sink = |t: &TraceRecord| {
            energies.extend(t.outcome.users.iter().map(|u| u.energy));
            Ok(())
        };
        let r = evaluate_policy(&mut env, &mut LocalFirst, 2, &mut rng, Some(&mut sink)).unwrap();
        assert_eq!(energies.len(), r.tasks);
        let recount = energies.iter().sum::<f64>() / energies.len() as f64;
        assert!((recount - r.mean_energy).abs() <= 1e-15 * recount);
    }

    #[test]
    fn evaluation_rejects_out_of_range_actions() {
        let mut env = env();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut bad = Constant(Action::new(1.5, 0.5));
        assert!(evaluate_policy(&mut env, &mut bad, 1, &mut rng, None).is_err());
    }

    #[test]
    fn trained_policy_rejects_other_user_counts() {
        let env3 = env();
        let learner =
            Learner::for_env(&env3, Layout::Decentralized, TrainConfig::default()).unwrap();
        let mut policy = TrainedPolicy::from_learner("m", &learner);
        let mut env4 = env_with(ComputeConfig::default());
        let mut cfg = env4.config().clone();
        cfg.channel.num_users = 4;
        env4 = Env::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs = env4.reset(&mut rng).unwrap();
        assert!(matches!(
            policy.decide(&env4, &obs),
            Err(Error::CheckpointMismatch(_))
        ));
    }

    #[test]
    fn execution_uses_only_local_observations() {
        let env = env();
        let learner =
            Learner::for_env(&env, Layout::Decentralized, TrainConfig::default()).unwrap();
        let policy = TrainedPolicy::from_learner("m", &learner);
        let own = [Observation {
            bits: 4000.0,
            deadline: 1e-3,
            rate_prev: 0.0,
        }];
        let a = policy.act_local(1, &own).unwrap();
        assert_eq!(a.len(), 2);
        assert!(policy.act_local(1, &[own[0], own[0]]).is_err());
    }
}

//! Actor-critic learners sharing one update engine.
//!
//! A learner owns one or more agents. Each agent controls a set of users,
//! reads the observations of those users through its actor, and scores the
//! full state plus the joint action through its critic. With one agent per
//! user this is MADDPG; with a single agent controlling every user it is
//! plain centralized DDPG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::{perturb, NoiseConfig};
use super::replay::{Batch, ReplayBuffer};
use super::scaler::ObsScaler;
use crate::env::{Action, Env, Observation, OBS_DIM};
use crate::error::{Error, Result};
use crate::neural::checkpoint::NetworkSnapshot;
use crate::neural::{soft_update, Activation, AdamConfig, AdamState, Mlp, MlpSpec, DEFAULT_HIDDEN};

/// What the agents learn. The CRA modes learn only `alpha` and fix `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    #[default]
    Joint,
    CraFpc,
    CraMax,
}

impl ActionMode {
    pub fn learned_dim(self) -> usize {
        match self {
            ActionMode::Joint => 2,
            ActionMode::CraFpc | ActionMode::CraMax => 1,
        }
    }

    /// Builds one user's action from its learned outputs.
    pub fn to_action(self, learned: &[f64], fpc_eta: f64) -> Action {
        match self {
            ActionMode::Joint => Action::new(learned[0], learned[1]),
            ActionMode::CraFpc => Action::new(learned[0], fpc_eta),
            ActionMode::CraMax => Action::new(learned[0], 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One agent per user.
    Decentralized,
    /// One agent for all users.
    Centralized,
}

/// Learner hyperparameters. The discount comes from the environment's
/// episode settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub tau: f64,
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub hidden_dims: Vec<usize>,
    pub actor_final_scale: f64,
    pub grad_clip: Option<f64>,
    /// Multiplies rewards before they enter critic targets.
    pub reward_scale: f64,
    pub noise: NoiseConfig,
    pub action_mode: ActionMode,
    /// Set by the caller; experiment files carry the seed at top level.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 1500,
            tau: 0.005,
            critic_lr: 1e-3,
            actor_lr: 1e-4,
            batch_size: 128,
            buffer_capacity: 10_000,
            hidden_dims: DEFAULT_HIDDEN.to_vec(),
            actor_final_scale: 1e-3,
            grad_clip: None,
            reward_scale: 1e3,
            noise: NoiseConfig::default(),
            action_mode: ActionMode::Joint,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::invalid("episodes must be at least 1"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::invalid(format!("tau {} outside (0, 1]", self.tau)));
        }
        if !(self.critic_lr > 0.0 && self.actor_lr > 0.0) {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err(Error::invalid(format!(
                "batch size {} must lie in [1, buffer capacity {}]",
                self.batch_size, self.buffer_capacity
            )));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        if !(self.actor_final_scale > 0.0) || !(self.reward_scale > 0.0) {
            return Err(Error::invalid("scales must be positive"));
        }
        if self.grad_clip.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::invalid("gradient clip must be positive"));
        }
        self.noise.validate()
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            grad_clip: self.grad_clip,
            ..AdamConfig::with_lr(lr)
        }
    }
}

/// Independent random streams derived from one seed.
pub mod streams {
    pub const ENV: u64 = 0;
    pub const INIT: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const EVAL: u64 = 3;
    /// Replay sampling of agent `i` uses `SAMPLE + i`.
    pub const SAMPLE: u64 = 16;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    /// Users this agent acts for, ascending.
    pub users: Vec<usize>,
    /// User order inside this agent's state vector.
    pub order: Vec<usize>,
    /// `slot[u]` is the position of user `u` in `order`.
    pub slot: Vec<usize>,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub buffer: ReplayBuffer,
}

/// Per-episode training summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    /// Sum of raw joint rewards over the episode.
    pub total_reward: f64,
    pub success_rate: f64,
    /// Joules per user per step.
    pub mean_energy: f64,
    /// Seconds, over tasks that finished.
    pub mean_delay: f64,
    /// Tasks whose delay was unbounded.
    pub unfinished: usize,
    pub sigma: f64,
    pub updates: usize,
    pub mean_critic_loss: f64,
    pub mean_q: f64,
}

#[derive(Debug, Clone)]
pub struct Learner {
    layout: Layout,
    mode: ActionMode,
    num_users: usize,
    discount: f64,
    cfg: TrainConfig,
    pub scaler: ObsScaler,
    pub agents: Vec<DdpgAgent>,
    sample_rngs: Vec<ChaCha8Rng>,
    noise_rng: ChaCha8Rng,
    episodes_done: usize,
}

impl Learner {
    pub fn new(
        layout: Layout,
        num_users: usize,
        discount: f64,
        scaler: ObsScaler,
        cfg: TrainConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if num_users == 0 {
            return Err(Error::invalid("at least one user required"));
        }
        if !(0.0..=1.0).contains(&discount) {
            return Err(Error::invalid(format!(
                "discount {discount} outside [0, 1]"
            )));
        }
        let k = num_users;
        let ad = cfg.action_mode.learned_dim();
        let groups: Vec<Vec<usize>> = match layout {
            Layout::Decentralized => (0..k).map(|u| vec![u]).collect(),
            Layout::Centralized => vec![(0..k).collect()],
        };
        let mut init = stream_rng(cfg.seed, streams::INIT);
        let mut agents = Vec::with_capacity(groups.len());
        for users in groups {
            let mut order = users.clone();
            order.extend((0..k).filter(|u| !users.contains(u)));
            let mut slot = vec![0; k];
            for (p, &u) in order.iter().enumerate() {
                slot[u] = p;
            }
            let actor_spec = MlpSpec::new(
                OBS_DIM * users.len(),
                cfg.hidden_dims.clone(),
                ad * users.len(),
                Activation::Sigmoid,
            );
            let critic_spec = MlpSpec::new(
                OBS_DIM * k + ad * k,
                cfg.hidden_dims.clone(),
                1,
                Activation::Identity,
            );
            let actor = Mlp::new(actor_spec, cfg.actor_final_scale, &mut init)?;
            let critic = Mlp::new(critic_spec, 1.0, &mut init)?;
            agents.push(DdpgAgent {
                users,
                order,
                slot,
                actor_opt: AdamState::new(cfg.adam(cfg.actor_lr), actor.params().len())?,
                critic_opt: AdamState::new(cfg.adam(cfg.critic_lr), critic.params().len())?,
                actor_target: actor.clone(),
                critic_target: critic.clone(),
                actor,
                critic,
                buffer: ReplayBuffer::new(cfg.buffer_capacity, OBS_DIM * k, ad * k)?,
            });
        }
        let sample_rngs = (0..agents.len())
            .map(|i| stream_rng(cfg.seed, streams::SAMPLE + i as u64))
            .collect();
        Ok(Self {
            layout,
            mode: cfg.action_mode,
            num_users,
            discount,
            noise_rng: stream_rng(cfg.seed, streams::NOISE),
            cfg,
            scaler,
            agents,
            sample_rngs,
            episodes_done: 0,
        })
    }

    /// Learner sized for `env`, with scaling constants from its config.
    pub fn for_env(env: &Env, layout: Layout, cfg: TrainConfig) -> Result<Self> {
        let ec = env.config();
        let scaler = ObsScaler::new(ec.compute.task_max, ec.compute.step_duration);
        Self::new(layout, env.num_users(), ec.episode.discount, scaler, cfg)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn mode(&self) -> ActionMode {
        self.mode
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    fn state_dim(&self) -> usize {
        OBS_DIM * self.num_users
    }

    fn joint_dim(&self) -> usize {
        self.mode.learned_dim() * self.num_users
    }

    /// Raw state of agent `i`: its users' observations, then everyone else's
    /// in ascending order.
    pub fn agent_state(&self, i: usize, obs: &[Observation]) -> Vec<f64> {
        self.agents[i]
            .order
            .iter()
            .flat_map(|&u| obs[u].to_array())
            .collect()
    }

    /// Learned outputs of agent `i` on the raw observations of its users,
    /// with optional exploration noise.
    pub fn act_agent<R: Rng + ?Sized>(
        &self,
        i: usize,
        own_obs: &[Observation],
        sigma: Option<f64>,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let agent = &self.agents[i];
        if own_obs.len() != agent.users.len() {
            return Err(Error::invalid(
                "one observation per controlled user required",
            ));
        }
        let input: Vec<f64> = own_obs.iter().flat_map(|o| self.scaler.scaled(o)).collect();
        let mut out = agent.actor.predict(&input)?;
        if let Some(s) = sigma {
            perturb(&mut out, s, rng);
        }
        Ok(out)
    }

    /// Joint learned outputs in user order.
    pub fn act_all<R: Rng + ?Sized>(
        &self,
        obs: &[Observation],
        sigma: Option<f64>,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if obs.len() != self.num_users {
            return Err(Error::invalid("one observation per user required"));
        }
        let ad = self.mode.learned_dim();
        let mut joint = vec![0.0; self.joint_dim()];
        for i in 0..self.agents.len() {
            let own: Vec<Observation> = self.agents[i].users.iter().map(|&u| obs[u]).collect();
            let out = self.act_agent(i, &own, sigma, rng)?;
            for (j, &u) in self.agents[i].users.iter().enumerate() {
                joint[u * ad..(u + 1) * ad].copy_from_slice(&out[j * ad..(j + 1) * ad]);
            }
        }
        Ok(joint)
    }

    /// Env actions for learned outputs `joint` (user order).
    pub fn to_actions(&self, joint: &[f64], env: &Env) -> Result<Vec<Action>> {
        let ad = self.mode.learned_dim();
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

    /// Draws a mini-batch from agent `i`'s buffer with states scaled.
    pub fn sample(&mut self, i: usize) -> Result<Batch> {
        let mut batch = self.agents[i]
            .buffer
            .sample(self.cfg.batch_size, &mut self.sample_rngs[i])?;
        self.scaler.scale_block(&mut batch.states);
        self.scaler.scale_block(&mut batch.next_states);
        Ok(batch)
    }

    /// Rows of `[state, joint action]` for a critic.
    fn critic_input(&self, states: &[f64], actions: &[f64], rows: usize) -> Vec<f64> {
        let (s, a) = (self.state_dim(), self.joint_dim());
        let mut z = Vec::with_capacity(rows * (s + a));
        for r in 0..rows {
            z.extend_from_slice(&states[r * s..(r + 1) * s]);
            z.extend_from_slice(&actions[r * a..(r + 1) * a]);
        }
        z
    }

    /// Actor inputs of agent `j`, gathered from states laid out for agent `i`.
    fn gather(&self, i: usize, j: usize, states: &[f64], rows: usize) -> Vec<f64> {
        let s = self.state_dim();
        let users = &self.agents[j].users;
        let slot = &self.agents[i].slot;
        let mut x = Vec::with_capacity(rows * OBS_DIM * users.len());
        for r in 0..rows {
            let row = &states[r * s..(r + 1) * s];
            for &u in users {
                let p = slot[u] * OBS_DIM;
                x.extend_from_slice(&row[p..p + OBS_DIM]);
            }
        }
        x
    }

    /// Writes actor `j`'s outputs into joint-action rows.
    fn scatter(&self, j: usize, out: &[f64], joint: &mut [f64], rows: usize) {
        let ad = self.mode.learned_dim();
        let a = self.joint_dim();
        let users = &self.agents[j].users;
        let w = ad * users.len();
        for r in 0..rows {
            for (n, &u) in users.iter().enumerate() {
                joint[r * a + u * ad..r * a + (u + 1) * ad]
                    .copy_from_slice(&out[r * w + n * ad..r * w + (n + 1) * ad]);
            }
        }
    }

    /// Bootstrapped critic targets `y = c r + discount Q'(s', mu'(o'))` for
    /// agent `i`, with `c` the reward scale.
    pub fn critic_target(&self, i: usize, batch: &Batch) -> Result<Vec<f64>> {
        let rows = batch.size;
        let mut next_actions = vec![0.0; rows * self.joint_dim()];
        for j in 0..self.agents.len() {
            let x = self.gather(i, j, &batch.next_states, rows);
            let out = self.agents[j].actor_target.forward(&x, rows)?;
            self.scatter(j, out.output(), &mut next_actions, rows);
        }
        let z = self.critic_input(&batch.next_states, &next_actions, rows);
        let q = self.agents[i].critic_target.forward(&z, rows)?;
        Ok(batch
            .rewards
            .iter()
            .zip(q.output())
            .map(|(r, q)| self.cfg.reward_scale * r + self.discount * q)
            .collect())
    }

    /// One critic step on the mean squared TD error; returns the loss before
    /// the step.
    pub fn update_critic(&mut self, i: usize, batch: &Batch) -> Result<f64> {
        let y = self.critic_target(i, batch)?;
        let rows = batch.size;
        let z = self.critic_input(&batch.states, &batch.actions, rows);
        let agent = &mut self.agents[i];
        let cache = agent.critic.forward(&z, rows)?;
        let q = cache.output();
        let loss = q.iter().zip(&y).map(|(q, y)| (q - y).powi(2)).sum::<f64>() / rows as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "critic loss of agent {i} is {loss}"
            )));
        }
        let grad_out: Vec<f64> = q
            .iter()
            .zip(&y)
            .map(|(q, y)| 2.0 * (q - y) / rows as f64)
            .collect();
        let mut grads = vec![0.0; agent.critic.params().len()];
        agent
            .critic
            .backward(&cache, &grad_out, &mut grads, false)?;
        agent.critic_opt.step(agent.critic.params_mut(), &grads)?;
        Ok(loss)
    }

    /// Batch-mean critic value with every actor's current output substituted
    /// into the joint action, plus what backprop needs.
    fn policy_value(
        &self,
        i: usize,
        batch: &Batch,
    ) -> Result<(f64, Vec<f64>, crate::neural::ForwardCache)> {
        let rows = batch.size;
        let mut actions = vec![0.0; rows * self.joint_dim()];
        let mut own_cache = None;
        for j in 0..self.agents.len() {
            let x = self.gather(i, j, &batch.states, rows);
            let cache = self.agents[j].actor.forward(&x, rows)?;
            self.scatter(j, cache.output(), &mut actions, rows);
            if j == i {
                own_cache = Some(cache);
            }
        }
        let z = self.critic_input(&batch.states, &actions, rows);
        let critic = &self.agents[i].critic;
        let cache = critic.forward(&z, rows)?;
        let mean_q = cache.output().iter().sum::<f64>() / rows as f64;
        let gin = critic.input_gradient(&cache, &vec![-1.0 / rows as f64; rows])?;
        Ok((mean_q, gin, own_cache.expect("agent index in range")))
    }

    /// Gradient of `-mean Q` with respect to agent `i`'s actor parameters,
    /// and the mean Q itself.
    pub fn actor_gradient(&self, i: usize, batch: &Batch) -> Result<(Vec<f64>, f64)> {
        let rows = batch.size;
        let (mean_q, gin, cache) = self.policy_value(i, batch)?;
        let ad = self.mode.learned_dim();
        let width = self.state_dim() + self.joint_dim();
        let users = &self.agents[i].users;
        let mut g_act = Vec::with_capacity(rows * ad * users.len());
        for r in 0..rows {
            let base = r * width + self.state_dim();
            for &u in users {
                g_act.extend_from_slice(&gin[base + u * ad..base + (u + 1) * ad]);
            }
        }
        let actor = &self.agents[i].actor;
        let mut grads = vec![0.0; actor.params().len()];
        actor.backward(&cache, &g_act, &mut grads, false)?;
        Ok((grads, mean_q))
    }

    /// Batch-mean critic value under the current actors.
    pub fn actor_objective(&self, i: usize, batch: &Batch) -> Result<f64> {
        let rows = batch.size;
        let mut actions = vec![0.0; rows * self.joint_dim()];
        for j in 0..self.agents.len() {
            let x = self.gather(i, j, &batch.states, rows);
            let out = self.agents[j].actor.forward(&x, rows)?;
            self.scatter(j, out.output(), &mut actions, rows);
        }
        let z = self.critic_input(&batch.states, &actions, rows);
        let q = self.agents[i].critic.forward(&z, rows)?;
        Ok(q.output().iter().sum::<f64>() / rows as f64)
    }

    /// One ascent step on agent `i`'s actor; returns the mean Q before it.
    pub fn update_actor(&mut self, i: usize, batch: &Batch) -> Result<f64> {
        let (grads, mean_q) = self.actor_gradient(i, batch)?;
        if !mean_q.is_finite() {
            return Err(Error::Divergence(format!(
                "critic value of agent {i} is {mean_q}"
            )));
        }
        let agent = &mut self.agents[i];
        agent.actor_opt.step(agent.actor.params_mut(), &grads)?;
        Ok(mean_q)
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        let tau = self.cfg.tau;
        for a in &mut self.agents {
            soft_update(a.actor_target.params_mut(), a.actor.params(), tau)?;
            soft_update(a.critic_target.params_mut(), a.critic.params(), tau)?;
        }
        Ok(())
    }

    pub fn ready(&self) -> bool {
        self.agents
            .iter()
            .all(|a| a.buffer.len() >= self.cfg.batch_size)
    }

    /// Stores one joint transition in every agent's buffer.
    pub fn remember(
        &mut self,
        obs: &[Observation],
        joint: &[f64],
        reward: f64,
        next: &[Observation],
    ) -> Result<()> {
        for i in 0..self.agents.len() {
            let s = self.agent_state(i, obs);
            let s2 = self.agent_state(i, next);
            self.agents[i].buffer.push(&s, joint, reward, &s2)?;
        }
        Ok(())
    }

    /// Critic then actor for every agent in turn, then all soft updates.
    /// Returns the summed critic loss and mean Q over agents.
    pub fn update_all(&mut self) -> Result<(f64, f64)> {
        let mut loss = 0.0;
        let mut q = 0.0;
        for i in 0..self.agents.len() {
            let batch = self.sample(i)?;
            loss += self.update_critic(i, &batch)?;
            q += self.update_actor(i, &batch)?;
        }
        self.soft_update_targets()?;
        let n = self.agents.len() as f64;
        Ok((loss / n, q / n))
    }

    /// Runs `episodes` more training episodes. `on_episode` sees the learner
    /// and the finished episode's summary.
    pub fn train<F>(
        &mut self,
        env: &mut Env,
        env_rng: &mut ChaCha8Rng,
        episodes: usize,
        mut on_episode: F,
    ) -> Result<()>
    where
        F: FnMut(&Learner, &EpisodeStats) -> Result<()>,
    {
        if env.num_users() != self.num_users {
            return Err(Error::invalid(
                "environment and learner disagree on the number of users",
            ));
        }
        let mut noise_rng = self.noise_rng.clone();
        for _ in 0..episodes {
            let episode = self.episodes_done;
            let stats = self
                .run_episode(env, env_rng, &mut noise_rng, episode)
                .map_err(|e| match e {
                    Error::Divergence(_) => Error::EpisodeDivergence {
                        episode,
                        source: Box::new(e),
                    },
                    other => other,
                })?;
            self.episodes_done += 1;
            self.noise_rng = noise_rng.clone();
            on_episode(self, &stats)?;
        }
        Ok(())
    }

    fn run_episode(
        &mut self,
        env: &mut Env,
        env_rng: &mut ChaCha8Rng,
        noise_rng: &mut ChaCha8Rng,
        episode: usize,
    ) -> Result<EpisodeStats> {
        let sigma = self.cfg.noise.sigma(episode, self.cfg.episodes);
        let mut obs = env.reset(env_rng)?;
        self.scaler.observe(&obs);
        let mut acc = EpisodeAccumulator::default();
        let (mut updates, mut loss_sum, mut q_sum) = (0usize, 0.0, 0.0);
        loop {
            let joint = self.act_all(&obs, Some(sigma), noise_rng)?;
            let actions = self.to_actions(&joint, env)?;
            let res = env.step(&actions, env_rng)?;
            acc.add(&res.outcome.users, res.outcome.reward);
            self.scaler.observe(&res.observations);
            self.remember(&obs, &joint, res.outcome.reward, &res.observations)?;
            if self.ready() {
                let (l, q) = self.update_all()?;
                updates += 1;
                loss_sum += l;
                q_sum += q;
            }
            obs = res.observations;
            if res.done {
                break;
            }
        }
        let u = updates.max(1) as f64;
        Ok(acc.finish(episode, sigma, updates, loss_sum / u, q_sum / u))
    }

    pub fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot {
            layout: self.layout,
            num_users: self.num_users,
            discount: self.discount,
            train: self.cfg.clone(),
            scaler: self.scaler,
            episodes_done: self.episodes_done,
            agents: self
                .agents
                .iter()
                .map(|a| AgentSnapshot {
                    actor: NetworkSnapshot::of(&a.actor, Some(&a.actor_opt)),
                    critic: NetworkSnapshot::of(&a.critic, Some(&a.critic_opt)),
                    actor_target: NetworkSnapshot::of(&a.actor_target, None),
                    critic_target: NetworkSnapshot::of(&a.critic_target, None),
                })
                .collect(),
        }
    }

    /// Rebuilds a learner from a snapshot. Replay buffers start empty.
    pub fn restore(snap: &LearnerSnapshot) -> Result<Self> {
        let mut learner = Self::new(
            snap.layout,
            snap.num_users,
            snap.discount,
            snap.scaler,
            snap.train.clone(),
        )
        .map_err(|e| Error::CheckpointMismatch(e.to_string()))?;
        if snap.agents.len() != learner.agents.len() {
            return Err(Error::CheckpointMismatch(format!(
                "checkpoint holds {} agents, layout needs {}",
                snap.agents.len(),
                learner.agents.len()
            )));
        }
        for (a, s) in learner.agents.iter_mut().zip(&snap.agents) {
            let load = |net: &mut Mlp, snap: &NetworkSnapshot| -> Result<()> {
                let restored = snap.restore()?;
                if restored.spec() != net.spec() {
                    return Err(Error::CheckpointMismatch(format!(
                        "network shape {:?} does not match {:?}",
                        restored.spec(),
                        net.spec()
                    )));
                }
                *net = restored;
                Ok(())
            };
            load(&mut a.actor, &s.actor)?;
            load(&mut a.critic, &s.critic)?;
            load(&mut a.actor_target, &s.actor_target)?;
            load(&mut a.critic_target, &s.critic_target)?;
            if let Some(o) = &s.actor.optimizer {
                a.actor_opt = o.clone();
            }
            if let Some(o) = &s.critic.optimizer {
                a.critic_opt = o.clone();
            }
        }
        learner.episodes_done = snap.episodes_done;
        Ok(learner)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSnapshot {
    pub actor: NetworkSnapshot,
    pub critic: NetworkSnapshot,
    pub actor_target: NetworkSnapshot,
    pub critic_target: NetworkSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSnapshot {
    pub layout: Layout,
    pub num_users: usize,
    pub discount: f64,
    pub train: TrainConfig,
    pub scaler: ObsScaler,
    pub episodes_done: usize,
    pub agents: Vec<AgentSnapshot>,
}

#[derive(Debug, Default)]
pub(crate) struct EpisodeAccumulator {
    pub reward: f64,
    pub energy: f64,
    pub delay: f64,
    pub finished: usize,
    pub met: usize,
    pub tasks: usize,
}

impl EpisodeAccumulator {
    pub fn add(&mut self, users: &[crate::compute::UserOutcome], reward: f64) {
        self.reward += reward;
        for u in users {
            self.energy += u.energy;
            self.tasks += 1;
            self.met += u.deadline_met as usize;
            if u.delay.is_finite() {
                self.delay += u.delay;
                self.finished += 1;
            }
        }
    }

    fn finish(self, episode: usize, sigma: f64, updates: usize, loss: f64, q: f64) -> EpisodeStats {
        let n = self.tasks.max(1) as f64;
        EpisodeStats {
            episode,
            total_reward: self.reward,
            success_rate: self.met as f64 / n,
            mean_energy: self.energy / n,
            mean_delay: if self.finished > 0 {
                self.delay / self.finished as f64
            } else {
                f64::NAN
            },
            unfinished: self.tasks - self.finished,
            sigma,
            updates,
            mean_critic_loss: loss,
            mean_q: q,
        }
    }
}

/// Deterministic policy-gradient ascent for a standalone actor against an
/// analytic critic. `dq_da` maps one row of actions to dQ/da. Returns the
/// batch-mean action before the step.
pub fn policy_gradient_step(
    actor: &mut Mlp,
    opt: &mut AdamState,
    inputs: &[f64],
    rows: usize,
    dq_da: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<Vec<f64>> {
    let cache = actor.forward(inputs, rows)?;
    let width = actor.output_dim();
    let mut g = Vec::with_capacity(rows * width);
    let mut mean = vec![0.0; width];
    for row in cache.output().chunks_exact(width) {
        g.extend(dq_da(row).into_iter().map(|d| -d / rows as f64));
        for (m, a) in mean.iter_mut().zip(row) {
            *m += a / rows as f64;
        }
    }
    let mut grads = vec![0.0; actor.params().len()];
    actor.backward(&cache, &g, &mut grads, false)?;
    opt.step(actor.params_mut(), &grads)?;
    Ok(mean)
}

/// MADDPG: one learner per user, critics over the full state and joint
/// action, actors over local observations.
pub fn train_maddpg<F>(env: &mut Env, cfg: TrainConfig, on_episode: F) -> Result<Learner>
where
    F: FnMut(&Learner, &EpisodeStats) -> Result<()>,
{
    train_layout(env, Layout::Decentralized, cfg, on_episode)
}

/// Single-agent DDPG over the full state and the joint action.
pub fn train_centralized_ddpg<F>(env: &mut Env, cfg: TrainConfig, on_episode: F) -> Result<Learner>
where
    F: FnMut(&Learner, &EpisodeStats) -> Result<()>,
{
    train_layout(env, Layout::Centralized, cfg, on_episode)
}

fn train_layout<F>(
    env: &mut Env,
    layout: Layout,
    cfg: TrainConfig,
    on_episode: F,
) -> Result<Learner>
where
    F: FnMut(&Learner, &EpisodeStats) -> Result<()>,
{
    let episodes = cfg.episodes;
    let mut env_rng = stream_rng(cfg.seed, streams::ENV);
    let mut learner = Learner::for_env(env, layout, cfg)?;
    learner.train(env, &mut env_rng, episodes, on_episode)?;
    Ok(learner)
}

//! Multi-agent decision environment.
//!
//! Every step each user (agent) observes its task size, its deadline and the
//! uplink rate it achieved in the previous step, and picks a local clock
//! fraction `alpha` and a transmit power fraction `eta`. The environment
//! evaluates all uplink rates under simultaneous transmission, runs the
//! compute pipeline and hands every agent the same reward
//! `-sum_k xi_k E_k`, with `xi_k = 10` for users that miss their deadline
//! and 1 otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::access::{self, ClusterAssignment, FpcParams};
use crate::channel::{self, ChannelConfig, NetworkRealization, PilotBook};
use crate::compute::{self, ComputeConfig, StepOutcome};
use crate::error::{Error, Result};

/// Deadline-miss weight applied to a user's energy in the reward.
pub const MISS_PENALTY: f64 = 10.0;

pub const OBS_DIM: usize = 3;
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub steps_per_episode: usize,
    pub discount: f64,
    pub redraw_placement_each_episode: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            steps_per_episode: 100,
            discount: 0.99,
            redraw_placement_each_episode: true,
        }
    }
}

/// Serving-cluster size and uplink power limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessConfig {
    pub cluster_size: usize,
    /// Maximum uplink transmit power, watts.
    pub p_max: f64,
    #[serde(default)]
    pub fpc: FpcParams,
}

impl Default for AccessConfig {
    fn default() -> Self {
        Self {
            cluster_size: 30,
            p_max: 0.1,
            fpc: FpcParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub channel: ChannelConfig,
    pub compute: ComputeConfig,
    pub access: AccessConfig,
    pub episode: EpisodeConfig,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.compute.validate()?;
        if self.access.cluster_size == 0 || self.access.cluster_size > self.channel.num_aps {
            return Err(Error::invalid(format!(
                "cluster size {} outside [1, {}]",
                self.access.cluster_size, self.channel.num_aps
            )));
        }
        if !(self.access.p_max > 0.0) {
            return Err(Error::invalid("p_max must be positive"));
        }
        if self.episode.steps_per_episode == 0 {
            return Err(Error::invalid("steps_per_episode must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.episode.discount) {
            return Err(Error::invalid("discount must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.channel.num_users
    }
}

/// What one agent sees at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Incoming task size, bits.
    pub bits: f64,
    /// Deadline, seconds.
    pub deadline: f64,
    /// Uplink rate achieved in the previous step, bits/s.
    pub rate_prev: f64,
}

impl Observation {
    pub fn to_array(self) -> [f64; OBS_DIM] {
        [self.bits, self.deadline, self.rate_prev]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            bits: x[0],
            deadline: x[1],
            rate_prev: x[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    /// Fraction of the maximum local clock.
    pub alpha: f64,
    /// Fraction of the maximum transmit power.
    pub eta: f64,
}

impl Action {
    pub fn new(alpha: f64, eta: f64) -> Self {
        Self { alpha, eta }
    }

    pub fn clamped(self) -> Self {
        let c = |x: f64| if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
        Self {
            alpha: c(self.alpha),
            eta: c(self.eta),
        }
    }

    fn is_valid(self) -> bool {
        (0.0..=1.0).contains(&self.alpha) && (0.0..=1.0).contains(&self.eta)
    }
}

/// How out-of-range actions are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionCheck {
    /// Clamp into `[0, 1]` (exploration noise may overshoot).
    #[default]
    Clamp,
    /// Reject with an error.
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub outcome: StepOutcome,
    pub done: bool,
}

/// Concatenation of agent `k`'s observation followed by the others' in
/// ascending index order.
pub fn full_state(observations: &[Observation], k: usize) -> Vec<f64> {
    let mut s = Vec::with_capacity(OBS_DIM * observations.len());
    s.extend_from_slice(&observations[k].to_array());
    for (j, o) in observations.iter().enumerate() {
        if j != k {
            s.extend_from_slice(&o.to_array());
        }
    }
    s
}

/// Fraction of (user, step) pairs that met the deadline.
pub fn success_rate(outcomes: &[StepOutcome]) -> f64 {
    let (met, total) = outcomes.iter().fold((0usize, 0usize), |(m, t), o| {
        (m + o.deadlines_met(), t + o.users.len())
    });
    if total == 0 {
        0.0
    } else {
        met as f64 / total as f64
    }
}

/// Shared reward for a set of user outcomes.
pub fn joint_reward(users: &[compute::UserOutcome]) -> f64 {
    -users
        .iter()
        .map(|u| {
            if u.deadline_met {
                u.energy
            } else {
                MISS_PENALTY * u.energy
            }
        })
        .sum::<f64>()
}

/// The environment. `reset` and `step` must be called from a single owner.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    pilots: PilotBook,
    check: ActionCheck,
    net: Option<NetworkRealization>,
    clusters: Option<ClusterAssignment>,
    tasks: Vec<f64>,
    rate_prev: Vec<f64>,
    t: usize,
}

impl Env {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.num_users();
        Ok(Self {
            pilots: PilotBook::orthogonal(k),
            cfg,
            check: ActionCheck::Clamp,
            net: None,
            clusters: None,
            tasks: vec![0.0; k],
            rate_prev: vec![0.0; k],
            t: 0,
        })
    }

    pub fn with_action_check(mut self, check: ActionCheck) -> Self {
        self.check = check;
        self
    }

    pub fn set_action_check(&mut self, check: ActionCheck) {
        self.check = check;
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn num_users(&self) -> usize {
        self.cfg.num_users()
    }

    pub fn step_index(&self) -> usize {
        self.t
    }

    pub fn network(&self) -> Option<&NetworkRealization> {
        self.net.as_ref()
    }

    pub fn clusters(&self) -> Option<&ClusterAssignment> {
        self.clusters.as_ref()
    }

    /// Starts a new episode and returns the initial observations.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<Observation>> {
        let cfg = &self.cfg;
        match self.net.as_mut() {
            Some(net) if !cfg.episode.redraw_placement_each_episode => {
                net.redraw_small_scale(&cfg.channel, &self.pilots, rng);
            }
            _ => {
                let net = channel::realize_network(&cfg.channel, &self.pilots, rng)?;
                self.clusters = Some(access::form_clusters(
                    &net.beta,
                    net.num_aps,
                    net.num_users,
                    cfg.access.cluster_size,
                )?);
                self.net = Some(net);
            }
        }
        self.draw_tasks(rng);
        let full = vec![self.cfg.access.p_max; self.num_users()];
        self.rate_prev = self.rates(&full)?;
        self.t = 0;
        Ok(self.observations())
    }

    fn draw_tasks<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (lo, hi) = (self.cfg.compute.task_min, self.cfg.compute.task_max);
        for b in self.tasks.iter_mut() {
            *b = if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
        }
    }

    fn rates(&self, powers: &[f64]) -> Result<Vec<f64>> {
        let (net, clusters) = self.realized()?;
        access::sinr_all(net, clusters, powers)?
            .into_iter()
            .map(|g| access::rate(g, self.cfg.channel.bandwidth))
            .collect()
    }

    fn realized(&self) -> Result<(&NetworkRealization, &ClusterAssignment)> {
        match (&self.net, &self.clusters) {
            (Some(n), Some(c)) => Ok((n, c)),
            _ => Err(Error::invalid("environment has not been reset")),
        }
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.tasks
            .iter()
            .zip(&self.rate_prev)
            .map(|(&bits, &rate_prev)| Observation {
                bits,
                deadline: self.cfg.compute.deadline,
                rate_prev,
            })
            .collect()
    }

    /// Current task sizes, bits.
    pub fn tasks(&self) -> &[f64] {
        &self.tasks
    }

    /// Fractional-power-control coefficient `p / p_max` for every user on the
    /// current realization.
    pub fn fpc_eta(&self) -> Result<Vec<f64>> {
        let (net, clusters) = self.realized()?;
        let p_max = self.cfg.access.p_max;
        (0..net.num_users)
            .map(|k| {
                access::fpc_power(
                    &net.beta_column(k),
                    clusters.cluster(k),
                    self.cfg.access.fpc,
                    p_max,
                )
                .map(|p| p / p_max)
            })
            .collect()
    }

    /// Evaluates the joint action on the current channel and tasks without
    /// advancing the environment.
    pub fn evaluate(&self, actions: &[Action]) -> Result<StepOutcome> {
        let k = self.num_users();
        if actions.len() != k {
            return Err(Error::invalid(format!(
                "expected {k} actions, got {}",
                actions.len()
            )));
        }
        let actions: Vec<Action> = match self.check {
            ActionCheck::Clamp => actions.iter().map(|a| a.clamped()).collect(),
            ActionCheck::Strict => {
                if let Some(a) = actions.iter().find(|a| !a.is_valid()) {
                    return Err(Error::invalid(format!("action {a:?} outside [0, 1]^2")));
                }
                actions.to_vec()
            }
        };
        let p_max = self.cfg.access.p_max;
        let alpha: Vec<f64> = actions.iter().map(|a| a.alpha).collect();
        let eta: Vec<f64> = actions.iter().map(|a| a.eta).collect();
        let power: Vec<f64> = eta.iter().map(|e| e * p_max).collect();
        let rates = self.rates(&power)?;
        let users =
            compute::evaluate_step(&self.tasks, &alpha, &eta, &power, &rates, &self.cfg.compute)?;
        let reward = joint_reward(&users);
        Ok(StepOutcome { users, reward })
    }

    /// Applies the joint action and advances to the next step.
    pub fn step<R: Rng + ?Sized>(&mut self, actions: &[Action], rng: &mut R) -> Result<StepResult> {
        if self.t >= self.cfg.episode.steps_per_episode {
            return Err(Error::invalid("episode finished; call reset"));
        }
        let outcome = self.evaluate(actions)?;
        self.rate_prev = outcome.users.iter().map(|u| u.rate).collect();
        self.t += 1;
        self.draw_tasks(rng);
        if self.t.is_multiple_of(self.cfg.channel.coherence_steps) {
            let net = self.net.as_mut().expect("realized above");
            net.redraw_small_scale(&self.cfg.channel, &self.pilots, rng);
        }
        let k = self.num_users();
        Ok(StepResult {
            observations: self.observations(),
            rewards: vec![outcome.reward; k],
            outcome,
            done: self.t == self.cfg.episode.steps_per_episode,
        })
    }
}

/// One line of a JSON-lines trajectory trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: usize,
    pub step: usize,
    pub observations: Vec<Observation>,
    pub actions: Vec<Action>,
    pub outcome: StepOutcome,
}

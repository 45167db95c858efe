use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// One stored transition, as seen by a single agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// A sampled mini-batch, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub size: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f64>,
}

/// Fixed-capacity ring of transitions with flat storage.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
    head: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Result<Self> {
        if capacity == 0 || state_dim == 0 || action_dim == 0 {
            return Err(Error::invalid("replay buffer dimensions must be positive"));
        }
        Ok(Self {
            capacity,
            state_dim,
            action_dim,
            states: vec![0.0; capacity * state_dim],
            actions: vec![0.0; capacity * action_dim],
            rewards: vec![0.0; capacity],
            next_states: vec![0.0; capacity * state_dim],
            head: 0,
            len: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Overwrites the oldest entry once full.
    pub fn push(
        &mut self,
        state: &[f64],
        action: &[f64],
        reward: f64,
        next_state: &[f64],
    ) -> Result<()> {
        let (s, a) = (self.state_dim, self.action_dim);
        if state.len() != s || next_state.len() != s || action.len() != a {
            return Err(Error::invalid(
                "transition does not match buffer dimensions",
            ));
        }
        if !reward.is_finite()
            || state
                .iter()
                .chain(action)
                .chain(next_state)
                .any(|x| !x.is_finite())
        {
            return Err(Error::invalid("transition holds a non-finite value"));
        }
        let i = self.head;
        self.states[i * s..(i + 1) * s].copy_from_slice(state);
        self.actions[i * a..(i + 1) * a].copy_from_slice(action);
        self.rewards[i] = reward;
        self.next_states[i * s..(i + 1) * s].copy_from_slice(next_state);
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
        Ok(())
    }

    /// Entry `i` counted from the oldest stored transition.
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len {
            return None;
        }
        let slot = (self.head + self.capacity - self.len + i) % self.capacity;
        let (s, a) = (self.state_dim, self.action_dim);
        Some(Transition {
            state: self.states[slot * s..(slot + 1) * s].to_vec(),
            action: self.actions[slot * a..(slot + 1) * a].to_vec(),
            reward: self.rewards[slot],
            next_state: self.next_states[slot * s..(slot + 1) * s].to_vec(),
        })
    }

    /// Uniform sample of `size` distinct stored transitions.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Batch> {
        if size == 0 || size > self.len {
            return Err(Error::invalid(format!(
                "cannot draw {size} distinct transitions from {}",
                self.len
            )));
        }
        let (s, a) = (self.state_dim, self.action_dim);
        let mut batch = Batch {
            size,
            states: Vec::with_capacity(size * s),
            actions: Vec::with_capacity(size * a),
            rewards: Vec::with_capacity(size),
            next_states: Vec::with_capacity(size * s),
        };
        for slot in index::sample(rng, self.len, size) {
            batch
                .states
                .extend_from_slice(&self.states[slot * s..(slot + 1) * s]);
            batch
                .actions
                .extend_from_slice(&self.actions[slot * a..(slot + 1) * a]);
            batch.rewards.push(self.rewards[slot]);
            batch
                .next_states
                .extend_from_slice(&self.next_states[slot * s..(slot + 1) * s]);
        }
        Ok(batch)
    }
}

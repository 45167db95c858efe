//! Replay, exploration, MADDPG and centralized DDPG learners, and the
//! heuristic baselines they are compared against.

mod learner;
mod noise;
mod policy;
mod replay;
mod scaler;

pub use learner::{
    policy_gradient_step, stream_rng, streams, train_centralized_ddpg, train_maddpg, ActionMode,
    AgentSnapshot, DdpgAgent, EpisodeStats, Layout, Learner, LearnerSnapshot, TrainConfig,
};
pub use noise::{perturb, NoiseConfig};
pub use policy::{
    evaluate_policy, Constant, EvalReport, LocalFirst, OffloadFirst, Policy, TraceSink,
    TrainedPolicy,
};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use scaler::ObsScaler;

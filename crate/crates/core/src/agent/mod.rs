//! Soft actor-critic learner with distributional critics and the optimistic
//! behavior policy used for interaction.

mod buffer;
mod learner;
mod policy;
mod train;

pub use buffer::{ReplayBuffer, Transition};
pub use learner::{
    actor_update, critic_update, ActionMode, ActionValue, Agent, AgentConfig, Chosen,
};
pub use policy::{
    draw, log_squash_jacobian, squash, squashed_log_prob, PolicyHead, PolicySample, LOG_STD_MAX,
    LOG_STD_MIN,
};
pub use train::{evaluate, train, EpochMetrics, TrainConfig, TrainObserver};

//! DQN controller: value network, replay buffer, rule-constrained action
//! selection and the training loop.

mod checkpoint;
mod network;
mod policy;
mod replay;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointMeta,
    CHECKPOINT_MAGIC,
};
pub use network::{Gradients, ValueNetwork};
pub use policy::{random_constrained, rule_action, select_action, EpsilonSchedule};
pub use replay::ReplayBuffer;
pub use train::{
    build_network, rollout, td_target, train, train_step, write_reward_curve, AgentConfig,
    EarlyStop, EpisodeStats, Policy, Rollout, TrainOutcome,
};

//! Proximal policy optimization with a clipped surrogate, full-batch epochs
//! and generalized advantage estimation.

pub mod buffer;
pub mod config;
pub mod env;
pub mod normalize;
pub mod train;
pub mod update;

pub use buffer::{collect_rollout, compute_gae, normalize_advantages, RolloutBuffer};
pub use config::{anneal_lr, PpoConfig};
pub use normalize::{RewardNormalizer, RunningMeanStd};
pub use env::{BanditEnv, EpisodicEnv, RlEnv};
pub use train::{init_actor, init_critic, TrainLogRow, Trainer};
pub use update::{ppo_update, surrogate_loss_and_grad, value_loss_and_grad, UpdateStats};

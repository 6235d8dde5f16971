//! Student agent: feed-forward policy/value network, GAE and PPO.

mod checkpoint;
mod gae;
mod network;
mod normalize;
mod ppo;

pub use checkpoint::{checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use gae::{compute_gae, td_errors, Gae};
pub use network::{policy_forward, ActionDist, Activation, Architecture, Head, PolicyParams, INITIAL_LOG_STD};
pub use normalize::{ReturnNormalizer, RunningMeanStd};
pub use ppo::{
    build_batch, clip_grad_norm, global_norm, loss_and_grad, normalize_advantages, Adam, LossBreakdown, Ppo,
    PpoConfig, Sample, UpdateStats,
};

//! Regret-driven curriculum generation.
//!
//! A student agent trained with PPO on levels curated by their estimated
//! regret (positive value loss). Three teachers share one loop: domain
//! randomization, robust prioritized level replay, and replay with
//! evolutionary editing of high-regret levels.

pub mod buffer;
pub mod env;
pub mod error;
pub mod evalkit;
pub mod grid;
pub mod learner;
pub mod level;
pub mod regret;
pub mod rng;
pub mod terrain;
pub mod trajectory;
pub mod ued;

pub use error::{Error, Result};
pub use level::{decode_level, encode_level, Level, LevelId, LevelIds, LevelKind, Payload};
pub use rng::{Rng, RngState};
pub use trajectory::{Action, EpisodeSummary, Origin, RegretScore, Trajectory};

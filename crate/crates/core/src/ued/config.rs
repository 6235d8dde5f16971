use serde::{Deserialize, Serialize};

use crate::buffer::BufferConfig;
use crate::env::{EnvConfig, EnvKind, Generator};
use crate::error::{Error, Result};
use crate::learner::PpoConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Train on fresh generator levels every update.
    Dr,
    /// Curate generator levels by regret; train only on replays.
    Plr,
    /// PLR plus editing of replayed levels.
    Accel,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dr => "dr",
            Mode::Plr => "plr",
            Mode::Accel => "accel",
        }
    }
}

/// Which replayed levels get edited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditCriterion {
    /// The `edit_count` levels with the highest return minus regret.
    Easy,
    /// Every replayed level.
    Batch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UedConfig {
    pub mode: Mode,
    /// Probability of a replay iteration.
    pub replay_rate: f64,
    /// Probability of an edit phase after a replay.
    pub edit_rate: f64,
    pub edit_criterion: EditCriterion,
    pub edit_count: usize,
    pub generator: Generator,
    pub total_updates: usize,
    /// Checkpoint interval in updates; 0 keeps only the final checkpoint.
    pub eval_every: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { hidden: vec![64, 64] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub buffer: BufferConfig,
    pub ued: UedConfig,
    #[serde(default)]
    pub model: ModelConfig,
}

impl TrainConfig {
    /// Published defaults for an environment and teacher.
    pub fn preset(kind: EnvKind, mode: Mode) -> Self {
        let (ppo, buffer, accel_replay, criterion) = match kind {
            EnvKind::Lava => (PpoConfig::grid(), BufferConfig::lava(), 0.9, EditCriterion::Batch),
            EnvKind::Maze => (PpoConfig::grid(), BufferConfig::maze(), 0.8, EditCriterion::Easy),
            EnvKind::Terrain => (PpoConfig::terrain(), BufferConfig::terrain(), 0.9, EditCriterion::Easy),
        };
        let (replay_rate, generator) = match mode {
            Mode::Dr => (0.0, Generator::Dr),
            Mode::Plr => (0.5, Generator::Dr),
            Mode::Accel => (accel_replay, Generator::Easy),
        };
        TrainConfig {
            env: EnvConfig::for_kind(kind),
            ppo,
            buffer,
            ued: UedConfig {
                mode,
                replay_rate,
                edit_rate: 1.0,
                edit_criterion: criterion,
                edit_count: 4,
                generator,
                total_updates: 1000,
                eval_every: 0,
                seed: 0,
            },
            model: ModelConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()?;
        self.buffer.validate()?;
        let u = &self.ued;
        for (name, v) in [("replay_rate", u.replay_rate), ("edit_rate", u.edit_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if u.mode != Mode::Dr && u.replay_rate == 0.0 {
            return Err(Error::Config(format!("{} mode needs replay_rate > 0 to ever train", u.mode.as_str())));
        }
        if u.edit_count == 0 {
            return Err(Error::Config("edit_count must be at least 1".into()));
        }
        if u.total_updates == 0 {
            return Err(Error::Config("total_updates must be at least 1".into()));
        }
        if self.model.hidden.is_empty() || self.model.hidden.contains(&0) {
            return Err(Error::Config("model.hidden needs at least one non-zero layer".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for kind in [EnvKind::Lava, EnvKind::Maze, EnvKind::Terrain] {
            for mode in [Mode::Dr, Mode::Plr, Mode::Accel] {
                let c = TrainConfig::preset(kind, mode);
                c.validate().unwrap();
                let json = serde_json::to_string(&c).unwrap();
                assert_eq!(serde_json::from_str::<TrainConfig>(&json).unwrap(), c);
            }
        }
    }

    #[test]
    fn published_values() {
        let lava = TrainConfig::preset(EnvKind::Lava, Mode::Accel);
        assert_eq!(lava.ued.replay_rate, 0.9);
        assert_eq!(lava.buffer.capacity, 10_000);
        assert_eq!(lava.ued.edit_criterion, EditCriterion::Batch);
        let maze = TrainConfig::preset(EnvKind::Maze, Mode::Accel);
        assert_eq!(maze.ued.replay_rate, 0.8);
        assert_eq!(maze.buffer.capacity, 4_000);
        let walker = TrainConfig::preset(EnvKind::Terrain, Mode::Accel);
        assert_eq!(walker.buffer.temperature, 0.1);
        assert_eq!(walker.ppo.minibatches, 32);
        assert_eq!(TrainConfig::preset(EnvKind::Maze, Mode::Plr).ued.replay_rate, 0.5);
    }

    #[test]
    fn curated_modes_need_replay() {
        let mut c = TrainConfig::preset(EnvKind::Lava, Mode::Plr);
        c.ued.replay_rate = 0.0;
        assert!(c.validate().is_err());
    }
}

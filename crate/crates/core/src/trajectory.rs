use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::LevelId;

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

/// Where the level behind a trajectory came from. Only `Replay` trajectories
/// may reach the optimizer in curated modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Generator,
    Replay,
    Edit,
}

/// Outcome of one finished (or truncated) episode inside a rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub ret: f64,
    pub length: usize,
    pub solved: bool,
}

/// A rollout on a single level: possibly several episodes back to back.
///
/// `dones[t]` marks that the transition at `t` ended an episode; the value
/// of the state after it is then masked out of the TD target.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub level_id: LevelId,
    pub origin: Origin,
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Behaviour-policy log-probabilities of `actions`.
    pub log_probs: Vec<f64>,
    pub dones: Vec<bool>,
    /// V(s_T) after the last step; 0 when the last step terminated.
    pub bootstrap_value: f64,
    pub episodes: Vec<EpisodeSummary>,
}

impl Trajectory {
    pub fn new(level_id: LevelId, origin: Origin) -> Self {
        Trajectory {
            level_id,
            origin,
            observations: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            values: Vec::new(),
            log_probs: Vec::new(),
            dones: Vec::new(),
            bootstrap_value: 0.0,
            episodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.rewards.len();
        if t == 0 {
            return Err(Error::invalid("empty trajectory"));
        }
        let lens = [
            self.observations.len(),
            self.actions.len(),
            self.values.len(),
            self.log_probs.len(),
            self.dones.len(),
        ];
        if lens.iter().any(|&l| l != t) {
            return Err(Error::invalid(format!("trajectory sequences disagree in length: {t} vs {lens:?}")));
        }
        if self.dones[t - 1] && self.bootstrap_value != 0.0 {
            return Err(Error::invalid("non-zero bootstrap value after a terminal step"));
        }
        Ok(())
    }

    /// Mean undiscounted return over the episodes in this rollout. A rollout
    /// that never finished an episode reports its partial reward sum.
    pub fn mean_return(&self) -> f64 {
        if self.episodes.is_empty() {
            self.rewards.iter().sum()
        } else {
            self.episodes.iter().map(|e| e.ret).sum::<f64>() / self.episodes.len() as f64
        }
    }

    /// Index ranges `[start, end)` of the episodes in this rollout, split at
    /// done flags; a trailing unfinished segment is included.
    pub fn episode_spans(&self) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut start = 0;
        for (t, &done) in self.dones.iter().enumerate() {
            if done {
                spans.push((start, t + 1));
                start = t + 1;
            }
        }
        if start < self.dones.len() {
            spans.push((start, self.dones.len()));
        }
        spans
    }
}

/// Regret estimate attached to a level. Always non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct RegretScore(f64);

impl RegretScore {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(RegretScore(value))
        } else {
            Err(Error::invalid(format!("regret score must be finite and >= 0, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_split_at_dones() {
        let mut t = Trajectory::new(LevelId(0), Origin::Replay);
        t.dones = vec![false, true, false, false, true, false];
        assert_eq!(t.episode_spans(), vec![(0, 2), (2, 5), (5, 6)]);
    }

    #[test]
    fn regret_rejects_negative() {
        assert!(RegretScore::new(-0.1).is_err());
        assert!(RegretScore::new(f64::NAN).is_err());
        assert_eq!(RegretScore::new(0.0).unwrap().value(), 0.0);
    }
}

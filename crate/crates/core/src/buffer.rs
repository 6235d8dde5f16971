//! Bounded level replay buffer with rank-prioritized, staleness-mixed sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::{encode_level, Level, LevelId};
use crate::trajectory::RegretScore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferConfig {
    pub capacity: usize,
    /// Rank temperature beta.
    pub temperature: f64,
    /// Weight of the staleness distribution in the mixture.
    pub staleness_coef: f64,
    /// Fraction of the capacity filled from the generator before training.
    pub fill_ratio: f64,
}

impl BufferConfig {
    pub fn lava() -> Self {
        BufferConfig { capacity: 10_000, temperature: 0.3, staleness_coef: 0.5, fill_ratio: 0.0 }
    }

    pub fn maze() -> Self {
        BufferConfig { capacity: 4_000, ..Self::lava() }
    }

    pub fn terrain() -> Self {
        BufferConfig { capacity: 1_000, temperature: 0.1, staleness_coef: 0.5, fill_ratio: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::Config("buffer capacity must be at least 1".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if !(0.0..=1.0).contains(&self.staleness_coef) {
            return Err(Error::Config(format!("staleness_coef must lie in [0, 1], got {}", self.staleness_coef)));
        }
        if !(0.0..=1.0).contains(&self.fill_ratio) {
            return Err(Error::Config(format!("fill_ratio must lie in [0, 1], got {}", self.fill_ratio)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferEntry {
    pub level: Level,
    pub score: RegretScore,
    /// Clock value at the last replay, or at insertion if never replayed.
    pub last_replayed: u64,
    pub insert_time: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InsertOutcome {
    Accepted { evicted: Option<BufferEntry> },
    Rejected,
}

impl InsertOutcome {
    pub fn accepted(&self) -> bool {
        matches!(self, InsertOutcome::Accepted { .. })
    }
}

#[derive(Debug, Clone)]
pub struct LevelBuffer {
    config: BufferConfig,
    entries: Vec<BufferEntry>,
    /// Counts replay draws.
    clock: u64,
}

impl LevelBuffer {
    pub fn new(config: BufferConfig) -> Result<Self> {
        config.validate()?;
        Ok(LevelBuffer { config, entries: Vec::new(), clock: 0 })
    }

    pub fn config(&self) -> &BufferConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    pub fn get(&self, id: LevelId) -> Option<&BufferEntry> {
        self.entries.iter().find(|e| e.level.id == id)
    }

    /// Always accept below capacity; when full, accept only a score strictly
    /// above the current minimum, which is evicted.
    pub fn insert(&mut self, level: Level, score: RegretScore) -> InsertOutcome {
        let entry = BufferEntry { level, score, last_replayed: self.clock, insert_time: self.clock };
        if self.entries.len() < self.config.capacity {
            self.entries.push(entry);
            return InsertOutcome::Accepted { evicted: None };
        }
        let min_idx = self.min_index().expect("full buffer is non-empty");
        if score.value() > self.entries[min_idx].score.value() {
            let evicted = std::mem::replace(&mut self.entries[min_idx], entry);
            InsertOutcome::Accepted { evicted: Some(evicted) }
        } else {
            InsertOutcome::Rejected
        }
    }

    fn min_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if best.is_none_or(|b| e.score.value() < self.entries[b].score.value()) {
                best = Some(i);
            }
        }
        best
    }

    pub fn update_score(&mut self, id: LevelId, score: RegretScore) -> Result<()> {
        let entry = self.entries.iter_mut().find(|e| e.level.id == id).ok_or(Error::UnknownLevel(id.0))?;
        entry.score = score;
        Ok(())
    }

    /// 1-based rank of every entry by descending score; ties keep entry order.
    pub fn ranks(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by(|&a, &b| self.entries[b].score.value().total_cmp(&self.entries[a].score.value()));
        let mut ranks = vec![0; self.entries.len()];
        for (r, &i) in order.iter().enumerate() {
            ranks[i] = r + 1;
        }
        ranks
    }

    pub fn staleness(&self) -> Vec<u64> {
        self.entries.iter().map(|e| self.clock - e.last_replayed).collect()
    }

    /// The exact mixture `buffer_sample` draws from, in entry order.
    pub fn distribution(&self) -> Result<Vec<f64>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = self.entries.len();
        let score_w: Vec<f64> = self.ranks().iter().map(|&r| (r as f64).powf(-1.0 / self.config.temperature)).collect();
        let score_sum: f64 = score_w.iter().sum();
        let stale = self.staleness();
        let stale_sum: u64 = stale.iter().sum();
        let rho = self.config.staleness_coef;
        Ok((0..n)
            .map(|i| {
                let p_stale = if stale_sum == 0 { 1.0 / n as f64 } else { stale[i] as f64 / stale_sum as f64 };
                (1.0 - rho) * score_w[i] / score_sum + rho * p_stale
            })
            .collect())
    }

    /// Draw an entry, advance the clock and mark the entry as just replayed.
    pub fn sample<R: rand::Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Level> {
        let probs = self.distribution()?;
        let dist = WeightedIndex::new(&probs).map_err(|e| Error::invalid(format!("sampling weights: {e}")))?;
        let i = dist.sample(rng);
        self.clock += 1;
        self.entries[i].last_replayed = self.clock;
        Ok(self.entries[i].level.clone())
    }

    /// One line per entry: encoded level, score, staleness (tab separated).
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (e, s) in self.entries.iter().zip(self.staleness()) {
            out.push_str(&format!("{}\t{}\t{}\n", encode_level(&e.level), e.score.value(), s));
        }
        out
    }
}

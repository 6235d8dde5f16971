//! The curriculum loop shared by domain randomization, PLR and ACCEL.

mod config;
mod log;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rayon::prelude::*;
use serde_json::json;

pub use config::{EditCriterion, ModelConfig, Mode, TrainConfig, UedConfig};
pub use log::{BufferSummary, LOG_HEADER};

use crate::buffer::{InsertOutcome, LevelBuffer};
use crate::env::{rollout, ActionMode, Env, LevelMetrics, RolloutLength};
use crate::error::{Error, Result};
use crate::learner::{save_checkpoint, PolicyParams, Ppo, ReturnNormalizer, UpdateStats};
use crate::level::{encode_level, Level, LevelId, LevelIds};
use crate::regret::{easy_score, trajectory_regret};
use crate::rng::Rng;
use crate::trajectory::{Origin, RegretScore, Trajectory};

/// Hook for a learned editor. The default does nothing.
pub trait EditorHook: Send {
    fn observe(&mut self, _parent: &Level, _child: &Level, _score: RegretScore) {}
}

#[derive(Debug, Default)]
pub struct NoopEditor;

impl EditorHook for NoopEditor {}

/// Provenance of one optimizer update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateAudit {
    pub update: usize,
    pub level_ids: Vec<LevelId>,
    pub origins: Vec<Origin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iteration: u64,
    pub replay: bool,
    pub updated: bool,
    pub env_steps: u64,
    pub stats: Option<UpdateStats>,
}

const PHASE_TRAIN: u64 = 0;
const PHASE_EXPLORE: u64 = 1;
const PHASE_EDIT: u64 = 2;
const PHASE_UPDATE: u64 = 3;
const PHASE_FILL: u64 = 4;

pub struct Trainer {
    config: TrainConfig,
    env: Env,
    params: PolicyParams,
    ppo: Ppo,
    buffer: Option<LevelBuffer>,
    ids: LevelIds,
    decisions: Rng,
    root: Rng,
    normalizer: Option<ReturnNormalizer>,
    editor: Box<dyn EditorHook>,
    iteration: u64,
    updates: usize,
    env_steps: u64,
    registry: HashMap<LevelId, Level>,
    registry_order: Vec<LevelId>,
    metrics_cache: HashMap<LevelId, LevelMetrics>,
    pending_edit: Vec<(Level, f64)>,
    audit: Vec<UpdateAudit>,
    log_rows: Vec<String>,
    events: Vec<String>,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let env = Env::new(config.env.clone())?;
        let root = Rng::new(config.ued.seed, 0);
        let mut init_rng = root.split(u64::MAX);
        let params = PolicyParams::init(env.architecture(&config.model.hidden), &mut init_rng);
        let ppo = Ppo::new(config.ppo.clone(), params.params.len());
        let buffer = match config.ued.mode {
            Mode::Dr => None,
            Mode::Plr | Mode::Accel => Some(LevelBuffer::new(config.buffer)?),
        };
        let normalizer = config.ppo.return_normalization.then(|| ReturnNormalizer::new(config.ppo.gamma));
        Ok(Trainer {
            decisions: root.split(u64::MAX - 1),
            root,
            env,
            params,
            ppo,
            buffer,
            ids: LevelIds::default(),
            normalizer,
            editor: Box::new(NoopEditor),
            iteration: 0,
            updates: 0,
            env_steps: 0,
            registry: HashMap::new(),
            registry_order: Vec::new(),
            metrics_cache: HashMap::new(),
            pending_edit: Vec::new(),
            audit: Vec::new(),
            log_rows: Vec::new(),
            events: Vec::new(),
            config,
        })
    }

    pub fn with_editor(mut self, editor: Box<dyn EditorHook>) -> Self {
        self.editor = editor;
        self
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn buffer(&self) -> Option<&LevelBuffer> {
        self.buffer.as_ref()
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn audit_log(&self) -> &[UpdateAudit] {
        &self.audit
    }

    pub fn log_rows(&self) -> &[String] {
        &self.log_rows
    }

    /// Training log as CSV text, header included.
    pub fn log_csv(&self) -> String {
        let mut s = format!("{LOG_HEADER}\n");
        for row in &self.log_rows {
            s.push_str(row);
            s.push('\n');
        }
        s
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    /// Every level that ever entered the buffer, in insertion order.
    pub fn registry(&self) -> impl Iterator<Item = &Level> {
        self.registry_order.iter().map(|id| &self.registry[id])
    }

    /// Ancestor chain from `id` back to its generator-produced root.
    pub fn lineage(&self, id: LevelId) -> Result<Vec<Level>> {
        lineage_in(&self.registry, id)
    }

    fn rollouts(&self, levels: &[Level], origin: Origin, length: RolloutLength, phase: u64) -> Result<Vec<Trajectory>> {
        let (it, env, params, root) = (self.iteration, &self.env, &self.params, &self.root);
        let run = |(slot, level): (usize, &Level)| {
            let mut rng = root.split_path(&[it, phase, slot as u64]);
            rollout(env, params, level, origin, length, ActionMode::Sample, &mut rng)
        };
        if self.config.ppo.workers > 1 && levels.len() > 1 {
            levels.par_iter().enumerate().map(run).collect()
        } else {
            levels.iter().enumerate().map(run).collect()
        }
    }

    /// Count steps, normalize rewards in place and score each rollout.
    fn score(&mut self, trajs: &mut [Trajectory]) -> Result<Vec<RegretScore>> {
        let mut scores = Vec::with_capacity(trajs.len());
        for t in trajs.iter_mut() {
            self.env_steps += t.len() as u64;
            if let Some(n) = self.normalizer.as_mut() {
                n.observe(t);
                n.apply(t);
            }
            scores.push(trajectory_regret(t, self.config.ppo.gamma, self.config.ppo.gae_lambda)?);
        }
        Ok(scores)
    }

    fn offer(&mut self, level: Level, score: RegretScore, origin: Origin) {
        let Some(buffer) = self.buffer.as_mut() else { return };
        let outcome = buffer.insert(level.clone(), score);
        let evicted = match &outcome {
            InsertOutcome::Accepted { evicted } => evicted.as_ref().map(|e| e.level.id.0),
            InsertOutcome::Rejected => None,
        };
        self.events.push(
            json!({
                "iteration": self.iteration,
                "update": self.updates,
                "event": "insert",
                "origin": origin,
                "level": level.id.0,
                "parent": level.parent_id.map(|p| p.0),
                "generation": level.generation,
                "score": score.value(),
                "accepted": outcome.accepted(),
                "evicted": evicted,
            })
            .to_string(),
        );
        if outcome.accepted() && !self.registry.contains_key(&level.id) {
            self.registry_order.push(level.id);
            self.registry.insert(level.id, level);
        }
    }

    /// Evaluate generator levels and offer them to the buffer before training.
    pub fn initial_fill(&mut self) -> Result<()> {
        let Some(buffer) = self.buffer.as_ref() else { return Ok(()) };
        let n = (buffer.config().fill_ratio * buffer.config().capacity as f64).round() as usize;
        for i in 0..n {
            let mut rng = self.root.split_path(&[0, PHASE_FILL, i as u64]);
            let level = self.env.generate(self.config.ued.generator, &mut rng, &mut self.ids)?;
            let mut trajs = self.rollouts(
                std::slice::from_ref(&level),
                Origin::Generator,
                RolloutLength::Steps(self.config.ppo.rollout_length),
                PHASE_FILL,
            )?;
            let scores = self.score(&mut trajs)?;
            self.offer(level, scores[0], Origin::Generator);
        }
        Ok(())
    }

    fn train_on(&mut self, levels: &[Level], trajs: &[Trajectory]) -> Result<UpdateStats> {
        let curated = self.config.ued.mode != Mode::Dr;
        if curated {
            if let Some(t) = trajs.iter().find(|t| t.origin != Origin::Replay) {
                return Err(Error::Audit(format!(
                    "level {} with origin {:?} reached the optimizer in {} mode",
                    t.level_id,
                    t.origin,
                    self.config.ued.mode.as_str()
                )));
            }
        }
        let mut rng = self.root.split_path(&[self.iteration, PHASE_UPDATE]);
        let stats = self.ppo.update(&mut self.params, trajs, &mut rng)?;
        self.updates += 1;
        self.audit.push(UpdateAudit {
            update: self.updates,
            level_ids: levels.iter().map(|l| l.id).collect(),
            origins: trajs.iter().map(|t| t.origin).collect(),
        });
        Ok(stats)
    }

    /// One pass of the loop. Replay iterations train; exploration and edit
    /// rollouts only score levels.
    pub fn iteration(&mut self) -> Result<IterationReport> {
        self.iteration += 1;
        let steps_before = self.env_steps;
        let workers = self.config.ppo.workers;
        let rollout_len = RolloutLength::Steps(self.config.ppo.rollout_length);
        let mut train_returns = Vec::new();
        let mut stats = None;
        let replay;

        match self.config.ued.mode {
            Mode::Dr => {
                replay = false;
                let mut rng = self.root.split_path(&[self.iteration, PHASE_EXPLORE]);
                let levels = (0..workers)
                    .map(|_| self.env.generate(self.config.ued.generator, &mut rng, &mut self.ids))
                    .collect::<Result<Vec<_>>>()?;
                let mut trajs = self.rollouts(&levels, Origin::Generator, rollout_len, PHASE_TRAIN)?;
                train_returns = episode_stats(&trajs);
                self.score(&mut trajs)?;
                stats = Some(self.train_on(&levels, &trajs)?);
            }
            Mode::Plr | Mode::Accel => {
                let draw = self.decisions.random_bool(self.config.ued.replay_rate);
                let buffer_empty = self.buffer.as_ref().is_none_or(|b| b.is_empty());
                replay = draw && !buffer_empty;
                if replay {
                    let buffer = self.buffer.as_mut().expect("curated mode has a buffer");
                    let levels = (0..workers)
                        .map(|_| buffer.sample(&mut self.decisions))
                        .collect::<Result<Vec<_>>>()?;
                    let mut trajs = self.rollouts(&levels, Origin::Replay, rollout_len, PHASE_TRAIN)?;
                    train_returns = episode_stats(&trajs);
                    let scores = self.score(&mut trajs)?;
                    stats = Some(self.train_on(&levels, &trajs)?);
                    let buffer = self.buffer.as_mut().expect("curated mode has a buffer");
                    for ((level, score), traj) in levels.iter().zip(&scores).zip(&trajs) {
                        buffer.update_score(level.id, *score)?;
                        self.pending_edit.push((level.clone(), easy_score(raw_mean_return(traj), *score)));
                    }
                    if self.config.ued.mode == Mode::Accel && self.decisions.random_bool(self.config.ued.edit_rate) {
                        self.edit_phase()?;
                    }
                } else {
                    let mut rng = self.root.split_path(&[self.iteration, PHASE_EXPLORE]);
                    let level = self.env.generate(self.config.ued.generator, &mut rng, &mut self.ids)?;
                    let mut trajs =
                        self.rollouts(std::slice::from_ref(&level), Origin::Generator, rollout_len, PHASE_EXPLORE)?;
                    let scores = self.score(&mut trajs)?;
                    self.offer(level, scores[0], Origin::Generator);
                }
            }
        }

        let summary = self.buffer_summary()?;
        self.log_rows.push(log::row(self.iteration, self.updates, replay, self.env_steps, &train_returns, stats.as_ref(), summary.as_ref()));
        Ok(IterationReport {
            iteration: self.iteration,
            replay,
            updated: stats.is_some(),
            env_steps: self.env_steps - steps_before,
            stats,
        })
    }

    fn edit_phase(&mut self) -> Result<()> {
        let mut pending = std::mem::take(&mut self.pending_edit);
        let parents: Vec<Level> = match self.config.ued.edit_criterion {
            EditCriterion::Batch => pending.into_iter().map(|(l, _)| l).collect(),
            EditCriterion::Easy => {
                pending.sort_by(|a, b| b.1.total_cmp(&a.1));
                pending.into_iter().take(self.config.ued.edit_count).map(|(l, _)| l).collect()
            }
        };
        let mut rng = self.root.split_path(&[self.iteration, PHASE_EDIT]);
        let children = parents
            .iter()
            .map(|p| self.env.edit(p, &mut rng, &mut self.ids))
            .collect::<Result<Vec<_>>>()?;
        let mut trajs = self.rollouts(&children, Origin::Edit, RolloutLength::Episodes(1), PHASE_EDIT)?;
        let scores = self.score(&mut trajs)?;
        for ((parent, child), score) in parents.iter().zip(children).zip(scores) {
            self.events.push(
                json!({
                    "iteration": self.iteration,
                    "update": self.updates,
                    "event": "edit",
                    "parent": parent.id.0,
                    "child": child.id.0,
                    "generation": child.generation,
                })
                .to_string(),
            );
            self.editor.observe(parent, &child, score);
            self.offer(child, score, Origin::Edit);
        }
        Ok(())
    }

    fn buffer_summary(&mut self) -> Result<Option<BufferSummary>> {
        let Some(buffer) = self.buffer.as_ref() else { return Ok(None) };
        if buffer.is_empty() {
            return Ok(Some(BufferSummary::default()));
        }
        let mut metrics = Vec::with_capacity(buffer.len());
        for e in buffer.entries() {
            let m = match self.metrics_cache.get(&e.level.id) {
                Some(m) => *m,
                None => {
                    let m = self.env.metrics(&e.level)?;
                    self.metrics_cache.insert(e.level.id, m);
                    m
                }
            };
            metrics.push((e, m));
        }
        Ok(Some(BufferSummary::from_entries(&metrics)))
    }

    /// Run until `total_updates` updates, writing artifacts into `out_dir`
    /// when given.
    pub fn run(&mut self, out_dir: Option<&Path>) -> Result<()> {
        let mut writer = out_dir.map(RunWriter::create).transpose()?;
        self.initial_fill()?;
        while self.updates < self.config.ued.total_updates {
            let before = self.params.clone();
            let report = match self.iteration() {
                Ok(r) => r,
                Err(Error::NonFinite(msg)) => {
                    if let Some(w) = writer.as_mut() {
                        w.flush(self)?;
                        save_checkpoint(&w.dir.join("checkpoints").join("diagnostic.ckpt"), &before)?;
                    }
                    return Err(Error::NonFinite(msg));
                }
                Err(e) => return Err(e),
            };
            let every = self.config.ued.eval_every;
            if let Some(w) = writer.as_mut() {
                if report.updated && every > 0 && self.updates % every == 0 {
                    w.flush(self)?;
                    w.checkpoint(self, &format!("update_{:06}", self.updates))?;
                }
            }
        }
        if let Some(w) = writer.as_mut() {
            w.flush(self)?;
            w.checkpoint(self, "final")?;
        }
        Ok(())
    }
}

fn lineage_in(registry: &HashMap<LevelId, Level>, id: LevelId) -> Result<Vec<Level>> {
    let mut chain = Vec::new();
    let mut cur = Some(id);
    while let Some(c) = cur {
        let level = registry.get(&c).ok_or(Error::UnknownLevel(c.0))?;
        if chain.len() > registry.len() {
            return Err(Error::invalid(format!("lineage of {id} does not terminate")));
        }
        cur = level.parent_id;
        chain.push(level.clone());
    }
    Ok(chain)
}

/// Ancestor chain of `id` within a list of levels.
pub fn lineage(levels: &[Level], id: LevelId) -> Result<Vec<Level>> {
    let registry: HashMap<LevelId, Level> = levels.iter().map(|l| (l.id, l.clone())).collect();
    lineage_in(&registry, id)
}

fn raw_mean_return(traj: &Trajectory) -> f64 {
    if traj.episodes.is_empty() {
        0.0
    } else {
        traj.episodes.iter().map(|e| e.ret).sum::<f64>() / traj.episodes.len() as f64
    }
}

/// `(return, solved)` of every finished episode, before reward scaling.
fn episode_stats(trajs: &[Trajectory]) -> Vec<(f64, bool)> {
    trajs.iter().flat_map(|t| t.episodes.iter().map(|e| (e.ret, e.solved))).collect()
}

/// Incremental writer for a run directory.
struct RunWriter {
    dir: PathBuf,
    rows_written: usize,
    events_written: usize,
    levels_written: usize,
}

impl RunWriter {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir.join("checkpoints"))?;
        std::fs::write(dir.join("train_log.csv"), format!("{LOG_HEADER}\n"))?;
        std::fs::write(dir.join("events.jsonl"), "")?;
        std::fs::write(dir.join("levels.txt"), "")?;
        Ok(RunWriter { dir: dir.to_path_buf(), rows_written: 0, events_written: 0, levels_written: 0 })
    }

    fn append(path: &Path, lines: &[String]) -> Result<()> {
        use std::io::Write;
        if lines.is_empty() {
            return Ok(());
        }
        let mut f = std::fs::OpenOptions::new().append(true).open(path)?;
        for l in lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }

    fn flush(&mut self, t: &Trainer) -> Result<()> {
        Self::append(&self.dir.join("train_log.csv"), &t.log_rows[self.rows_written..])?;
        self.rows_written = t.log_rows.len();
        Self::append(&self.dir.join("events.jsonl"), &t.events[self.events_written..])?;
        self.events_written = t.events.len();
        let new_levels: Vec<String> =
            t.registry_order[self.levels_written..].iter().map(|id| encode_level(&t.registry[id])).collect();
        Self::append(&self.dir.join("levels.txt"), &new_levels)?;
        self.levels_written = t.registry_order.len();
        Ok(())
    }

    fn checkpoint(&self, t: &Trainer, name: &str) -> Result<()> {
        let dir = self.dir.join("checkpoints");
        save_checkpoint(&dir.join(format!("{name}.ckpt")), &t.params)?;
        if let Some(b) = t.buffer.as_ref() {
            std::fs::write(dir.join(format!("{name}.buffer.tsv")), b.snapshot())?;
        }
        Ok(())
    }
}

/// Build a trainer and run it to completion.
pub fn run_training(config: TrainConfig, out_dir: Option<&Path>) -> Result<Trainer> {
    let mut trainer = Trainer::new(config)?;
    trainer.run(out_dir)?;
    Ok(trainer)
}

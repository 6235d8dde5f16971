//! Uniform front over the grid and terrain environments, plus rollouts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    self, empty_room, grid_complexity, grid_edit, grid_sample_dr, GridConfig, GridGenConfig, GridKind, GridState,
};
use crate::learner::{policy_forward, Architecture, Head, PolicyParams};
use crate::level::{Level, LevelIds, LevelKind};
use crate::terrain::{
    self, categorize_params, terrain_easy_init, terrain_edit, terrain_reset, terrain_sample_dr, terrain_step, Course,
    DifficultyCategory, TerrainConfig, TerrainMode, TerrainState,
};
use crate::trajectory::{Action, EpisodeSummary, Origin, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Lava,
    Maze,
    Terrain,
}

impl EnvKind {
    pub fn level_kind(self) -> LevelKind {
        match self {
            EnvKind::Lava => LevelKind::LavaGrid,
            EnvKind::Maze => LevelKind::MazeGrid,
            EnvKind::Terrain => LevelKind::Terrain,
        }
    }
}

/// Where fresh levels come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Empty rooms for grids, the easy initial level for terrain.
    Easy,
    /// Uniform over the design space.
    Dr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub width: usize,
    pub height: usize,
    pub min_obstacles: usize,
    pub max_obstacles: usize,
    /// Episode cap.
    pub max_steps: usize,
    pub terrain_mode: TerrainMode,
    /// Primitive mutations per grid edit.
    pub n_edits: usize,
}

impl EnvConfig {
    pub fn lava() -> Self {
        let g = GridGenConfig::lava();
        EnvConfig {
            kind: EnvKind::Lava,
            width: g.width,
            height: g.height,
            min_obstacles: g.min_obstacles,
            max_obstacles: g.max_obstacles,
            max_steps: grid::DEFAULT_MAX_STEPS,
            terrain_mode: TerrainMode::Eight,
            n_edits: grid::DEFAULT_EDITS,
        }
    }

    pub fn maze() -> Self {
        let g = GridGenConfig::maze();
        EnvConfig {
            kind: EnvKind::Maze,
            width: g.width,
            height: g.height,
            min_obstacles: g.min_obstacles,
            max_obstacles: g.max_obstacles,
            ..Self::lava()
        }
    }

    pub fn terrain() -> Self {
        EnvConfig { kind: EnvKind::Terrain, max_steps: TerrainConfig::default().max_steps, ..Self::lava() }
    }

    pub fn for_kind(kind: EnvKind) -> Self {
        match kind {
            EnvKind::Lava => Self::lava(),
            EnvKind::Maze => Self::maze(),
            EnvKind::Terrain => Self::terrain(),
        }
    }

    pub fn gen_config(&self) -> GridGenConfig {
        GridGenConfig {
            width: self.width,
            height: self.height,
            min_obstacles: self.min_obstacles,
            max_obstacles: self.max_obstacles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if self.n_edits == 0 {
            return Err(Error::Config("n_edits must be at least 1".into()));
        }
        if self.kind != EnvKind::Terrain {
            let cells = self.width * self.height;
            if self.width == 0 || self.height == 0 || cells < 2 {
                return Err(Error::Config(format!("grid {}x{} is too small", self.width, self.height)));
            }
            if self.min_obstacles > self.max_obstacles || self.max_obstacles > cells - 2 {
                return Err(Error::Config(format!(
                    "obstacle range [{}, {}] does not fit a {cells}-cell grid",
                    self.min_obstacles, self.max_obstacles
                )));
            }
        }
        Ok(())
    }
}

/// Per-level complexity summary for logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMetrics {
    pub obstacles: usize,
    pub shortest_path: Option<usize>,
    pub solvable: bool,
    pub category: Option<DifficultyCategory>,
}

#[derive(Debug, Clone)]
pub enum EpisodeState {
    Grid(GridState),
    Terrain(TerrainState, Box<Course>),
}

#[derive(Debug, Clone)]
pub struct Env {
    pub config: EnvConfig,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Env { config })
    }

    fn grid_kind(&self) -> Option<GridKind> {
        match self.config.kind {
            EnvKind::Lava => Some(GridKind::Lava),
            EnvKind::Maze => Some(GridKind::Maze),
            EnvKind::Terrain => None,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self.grid_kind() {
            Some(k) => grid::obs_dim(k, self.config.width, self.config.height),
            None => terrain::TERRAIN_OBS_DIM,
        }
    }

    pub fn head(&self) -> Head {
        match self.grid_kind() {
            Some(k) => Head::Categorical(k.num_actions()),
            None => Head::Gaussian(2),
        }
    }

    pub fn architecture(&self, hidden: &[usize]) -> Architecture {
        Architecture::mlp(self.obs_dim(), hidden, self.head())
    }

    pub fn generate<R: rand::Rng + ?Sized>(&self, generator: Generator, rng: &mut R, ids: &mut LevelIds) -> Result<Level> {
        let id = ids.fresh();
        match (self.grid_kind(), generator) {
            (Some(k), Generator::Easy) => empty_room(rng, k, self.config.width, self.config.height, id),
            (Some(k), Generator::Dr) => grid_sample_dr(rng, k, &self.config.gen_config(), id),
            (None, Generator::Easy) => Ok(terrain_easy_init(rng, self.config.terrain_mode, id)),
            (None, Generator::Dr) => Ok(terrain_sample_dr(rng, self.config.terrain_mode, id)),
        }
    }

    pub fn edit<R: rand::Rng + ?Sized>(&self, level: &Level, rng: &mut R, ids: &mut LevelIds) -> Result<Level> {
        self.check_kind(level)?;
        match self.grid_kind() {
            Some(_) => grid_edit(level, rng, self.config.n_edits, ids),
            None => terrain_edit(level, rng, ids),
        }
    }

    fn check_kind(&self, level: &Level) -> Result<()> {
        let expected = self.config.kind.level_kind();
        if level.kind() != expected {
            return Err(Error::WrongKind { expected: expected.as_str(), actual: level.kind().as_str() });
        }
        if let Some(k) = self.grid_kind() {
            let (_, g) = level.as_grid()?;
            if (g.width, g.height) != (self.config.width, self.config.height) && k == GridKind::Lava {
                return Err(Error::ShapeMismatch {
                    expected: self.config.width * self.config.height,
                    actual: g.width * g.height,
                });
            }
        }
        Ok(())
    }

    pub fn metrics(&self, level: &Level) -> Result<LevelMetrics> {
        match self.grid_kind() {
            Some(_) => {
                let c = grid_complexity(level)?;
                Ok(LevelMetrics {
                    obstacles: c.obstacle_count,
                    shortest_path: c.shortest_path,
                    solvable: c.solvable,
                    category: None,
                })
            }
            None => Ok(LevelMetrics {
                obstacles: terrain::render_course(level.as_terrain()?).obstacles.len(),
                shortest_path: None,
                solvable: true,
                category: Some(categorize_params(level.as_terrain()?)),
            }),
        }
    }

    pub fn reset<R: rand::Rng + ?Sized>(&self, level: &Level, rng: &mut R) -> Result<(EpisodeState, Vec<f64>)> {
        self.check_kind(level)?;
        match self.grid_kind() {
            Some(k) => {
                let (state, obs) = grid::grid_reset(level, rng)?;
                Ok((EpisodeState::Grid(state), obs.features(k)))
            }
            None => {
                let (state, course, obs) = terrain_reset(level)?;
                Ok((EpisodeState::Terrain(state, Box::new(course)), obs))
            }
        }
    }

    /// Returns `(observation, reward, done, solved)`.
    pub fn step(&self, level: &Level, state: &mut EpisodeState, action: &Action) -> Result<(Vec<f64>, f64, bool, bool)> {
        match (state, action) {
            (EpisodeState::Grid(s), Action::Discrete(a)) => {
                let kind = self.grid_kind().ok_or_else(|| Error::invalid("grid state in a terrain env"))?;
                let cfg = GridConfig { max_steps: self.config.max_steps };
                let out = grid::grid_step(level, s, *a, &cfg)?;
                *s = out.state;
                Ok((out.observation.features(kind), out.reward, out.done, out.state.reached_goal))
            }
            (EpisodeState::Terrain(s, course), Action::Continuous(a)) => {
                let cfg = TerrainConfig { max_steps: self.config.max_steps };
                let out = terrain_step(course, s, a, &cfg)?;
                *s = out.state;
                Ok((out.observation, out.reward, out.done, out.state.completed))
            }
            _ => Err(Error::InvalidAction("action type does not match the environment".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutLength {
    /// Fixed step budget; episodes restart on the same level.
    Steps(usize),
    /// Run this many complete episodes.
    Episodes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    Sample,
    Greedy,
}

/// Roll `params` out on `level`. Truncated final steps bootstrap from the
/// value of the next observation.
pub fn rollout<R: rand::Rng + ?Sized>(
    env: &Env,
    params: &PolicyParams,
    level: &Level,
    origin: Origin,
    length: RolloutLength,
    mode: ActionMode,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new(level.id, origin);
    let (mut state, mut obs) = env.reset(level, rng)?;
    let mut ep_ret = 0.0;
    let mut ep_len = 0;
    loop {
        let (dist, value) = policy_forward(params, &obs)?;
        let action = match mode {
            ActionMode::Sample => dist.sample(rng),
            ActionMode::Greedy => dist.mode(),
        };
        let log_prob = dist.log_prob(&action)?;
        let (next_obs, reward, done, solved) = env.step(level, &mut state, &action)?;
        traj.observations.push(std::mem::replace(&mut obs, next_obs));
        traj.actions.push(action);
        traj.rewards.push(reward);
        traj.values.push(value);
        traj.log_probs.push(log_prob);
        ep_ret += reward;
        ep_len += 1;
        // Time-limit endings are treated as terminal.
        traj.dones.push(done);
        if done {
            traj.episodes.push(EpisodeSummary { ret: ep_ret, length: ep_len, solved });
            ep_ret = 0.0;
            ep_len = 0;
        }
        let finished = match length {
            RolloutLength::Steps(n) => traj.len() >= n,
            RolloutLength::Episodes(n) => traj.episodes.len() >= n,
        };
        if finished {
            traj.bootstrap_value = if done { 0.0 } else { policy_forward(params, &obs)?.1 };
            return Ok(traj);
        }
        if done {
            let (s, o) = env.reset(level, rng)?;
            state = s;
            obs = o;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn step_budget_and_episode_bookkeeping() {
        let env = Env::new(EnvConfig { max_steps: 10, ..EnvConfig::lava() }).unwrap();
        let mut rng = Rng::new(0, 0);
        let mut ids = LevelIds::default();
        let level = env.generate(Generator::Easy, &mut rng, &mut ids).unwrap();
        let params = PolicyParams::zeros(env.architecture(&[8]));
        let traj = rollout(&env, &params, &level, Origin::Replay, RolloutLength::Steps(64), ActionMode::Sample, &mut rng).unwrap();
        traj.validate().unwrap();
        assert_eq!(traj.len(), 64);
        let finished: usize = traj.episodes.iter().map(|e| e.length).sum();
        assert_eq!(finished, traj.dones.iter().rposition(|&d| d).map_or(0, |i| i + 1));
        assert!(traj.episodes.iter().all(|e| e.length <= 10));
    }

    #[test]
    fn episode_rollout_stops_after_one_episode() {
        let env = Env::new(EnvConfig { max_steps: 20, ..EnvConfig::maze() }).unwrap();
        let mut rng = Rng::new(1, 0);
        let level = env.generate(Generator::Dr, &mut rng, &mut LevelIds::default()).unwrap();
        let params = PolicyParams::zeros(env.architecture(&[8]));
        let traj = rollout(&env, &params, &level, Origin::Edit, RolloutLength::Episodes(1), ActionMode::Sample, &mut rng).unwrap();
        assert_eq!(traj.episodes.len(), 1);
        assert!(*traj.dones.last().unwrap());
        assert_eq!(traj.bootstrap_value, 0.0);
    }

    #[test]
    fn terrain_rollout_runs() {
        let env = Env::new(EnvConfig::terrain()).unwrap();
        let mut rng = Rng::new(2, 0);
        let level = env.generate(Generator::Easy, &mut rng, &mut LevelIds::default()).unwrap();
        let params = PolicyParams::init(env.architecture(&[16]), &mut rng);
        let traj = rollout(&env, &params, &level, Origin::Replay, RolloutLength::Steps(300), ActionMode::Sample, &mut rng).unwrap();
        assert_eq!(traj.len(), 300);
        assert_eq!(env.obs_dim(), traj.observations[0].len());
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let env = Env::new(EnvConfig::lava()).unwrap();
        let maze = Env::new(EnvConfig::maze()).unwrap();
        let level = maze.generate(Generator::Easy, &mut Rng::new(0, 0), &mut LevelIds::default()).unwrap();
        assert!(matches!(env.reset(&level, &mut Rng::new(0, 0)), Err(Error::WrongKind { .. })));
    }
}

//! Native gridworlds: the fully observed lava room and the partially
//! observed maze.
//!
//! Grids have no explicit border; anything outside `width x height` behaves
//! as wall. Dynamics are pure functions of `(level, state, action)`.

mod edit;
mod generate;
mod metrics;

pub use edit::{apply_mutation, grid_edit, Mutation, DEFAULT_EDITS};
pub use generate::{empty_room, grid_sample_dr, perfect_maze, GridGenConfig};
pub use metrics::{grid_complexity, shortest_path_length, GridComplexity};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::Level;

/// Episode cap for both grid kinds.
pub const DEFAULT_MAX_STEPS: usize = 250;
/// Lava room per-step penalty.
pub const LAVA_STEP_PENALTY: f64 = 0.01;
pub const LAVA_GOAL_REWARD: f64 = 1.0;

pub const MAZE_VIEW: usize = 7;
pub const MAZE_CHANNELS: usize = 3;
/// 7x7x3 crop plus a facing one-hot.
/// One-hot channels per lava window cell.
pub const LAVA_CHANNELS: usize = 4;

pub const MAZE_OBS_DIM: usize = MAZE_VIEW * MAZE_VIEW * MAZE_CHANNELS + 4;

// MiniGrid object indices for the tile channel.
pub const CODE_EMPTY: u8 = 1;
pub const CODE_WALL: u8 = 2;
pub const CODE_GOAL: u8 = 8;
pub const CODE_LAVA: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Lava,
    Maze,
}

impl GridKind {
    pub fn obstacle(self) -> Tile {
        match self {
            GridKind::Lava => Tile::Lava,
            GridKind::Maze => Tile::Wall,
        }
    }

    pub fn num_actions(self) -> usize {
        match self {
            GridKind::Lava => 8,
            GridKind::Maze => 3,
        }
    }

    /// Lava moves in eight directions; the maze agent only steps forward.
    pub fn neighbours(self) -> &'static [(i64, i64)] {
        match self {
            GridKind::Lava => &MOVES_8,
            GridKind::Maze => &MOVES_4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tile {
    Empty,
    Wall,
    Lava,
}

impl Tile {
    pub fn is_obstacle(self) -> bool {
        self != Tile::Empty
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Facing {
    N,
    E,
    S,
    W,
}

impl Facing {
    pub const ALL: [Facing; 4] = [Facing::N, Facing::E, Facing::S, Facing::W];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Facing::N => (0, -1),
            Facing::E => (1, 0),
            Facing::S => (0, 1),
            Facing::W => (-1, 0),
        }
    }

    pub fn left(self) -> Facing {
        match self {
            Facing::N => Facing::W,
            Facing::W => Facing::S,
            Facing::S => Facing::E,
            Facing::E => Facing::N,
        }
    }

    pub fn right(self) -> Facing {
        self.left().left().left()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn glyph(self) -> char {
        match self {
            Facing::N => 'N',
            Facing::E => 'E',
            Facing::S => 'S',
            Facing::W => 'W',
        }
    }

    pub fn from_glyph(c: char) -> Option<Facing> {
        Facing::ALL.into_iter().find(|f| f.glyph() == c)
    }
}

// Lava action ids 0..8 follow this order: N, NE, E, SE, S, SW, W, NW.
const MOVES_8: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];
const MOVES_4: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

pub const MAZE_TURN_LEFT: usize = 0;
pub const MAZE_TURN_RIGHT: usize = 1;
pub const MAZE_FORWARD: usize = 2;

/// Grid genotype. `agent` and `goal` index into `cells`, which hold
/// `Tile::Empty` at both positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridPayload {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Tile>,
    pub agent: usize,
    pub facing: Facing,
    pub goal: usize,
}

impl GridPayload {
    pub fn empty(width: usize, height: usize, agent: usize, goal: usize, facing: Facing) -> Self {
        GridPayload { width, height, cells: vec![Tile::Empty; width * height], agent, facing, goal }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn coords(&self, idx: usize) -> (i64, i64) {
        ((idx % self.width) as i64, (idx / self.width) as i64)
    }

    pub fn index(&self, x: i64, y: i64) -> Option<usize> {
        (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height)
            .then(|| y as usize * self.width + x as usize)
    }

    pub fn offset(&self, idx: usize, (dx, dy): (i64, i64)) -> Option<usize> {
        let (x, y) = self.coords(idx);
        self.index(x + dx, y + dy)
    }

    pub fn obstacle_count(&self) -> usize {
        self.cells.iter().filter(|t| t.is_obstacle()).count()
    }

    /// Cells that are empty and hold neither the agent nor the goal.
    pub fn free_cells(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i] == Tile::Empty && i != self.agent && i != self.goal)
            .collect()
    }

    pub fn validate(&self, kind: GridKind) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.cells.len() != self.width * self.height {
            return Err(Error::invalid(format!(
                "grid {}x{} has {} cells",
                self.width,
                self.height,
                self.cells.len()
            )));
        }
        if self.cells.len() < 2 {
            return Err(Error::invalid("grid needs room for an agent and a goal"));
        }
        if self.agent >= self.cells.len() || self.goal >= self.cells.len() {
            return Err(Error::invalid("agent or goal outside the grid"));
        }
        if self.agent == self.goal {
            return Err(Error::invalid("agent start coincides with goal"));
        }
        if self.cells[self.agent] != Tile::Empty {
            return Err(Error::invalid(format!("agent start is on {:?}", self.cells[self.agent])));
        }
        if self.cells[self.goal] != Tile::Empty {
            return Err(Error::invalid(format!("goal is on {:?}", self.cells[self.goal])));
        }
        let forbidden = match kind {
            GridKind::Lava => Tile::Wall,
            GridKind::Maze => Tile::Lava,
        };
        if self.cells.contains(&forbidden) {
            return Err(Error::invalid(format!("{kind:?} grid contains {forbidden:?} tiles")));
        }
        Ok(())
    }

    /// Text-art dump, one row per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let idx = y * self.width + x;
                out.push(if idx == self.agent {
                    'A'
                } else if idx == self.goal {
                    'G'
                } else {
                    match self.cells[idx] {
                        Tile::Empty => '.',
                        Tile::Wall => '#',
                        Tile::Lava => 'L',
                    }
                });
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Episode cap, T_max.
    pub max_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { max_steps: DEFAULT_MAX_STEPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridState {
    pub pos: usize,
    pub facing: Facing,
    pub t: usize,
    pub done: bool,
    pub reached_goal: bool,
}

/// Bounded integer observation. Maze: 7x7x3 egocentric crop followed by a
/// facing one-hot. Lava: the whole grid seen from the agent, as a
/// `(2w-1) x (2h-1)` window of one-hots over {empty, lava, goal, outside},
/// followed by a one-hot agent position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridObservation {
    pub values: Vec<u8>,
}

impl GridObservation {
    /// Network input; tile codes are scaled into [0, 1].
    pub fn features(&self, kind: GridKind) -> Vec<f64> {
        match kind {
            GridKind::Lava => self.values.iter().map(|&v| v as f64).collect(),
            GridKind::Maze => {
                let crop = MAZE_VIEW * MAZE_VIEW * MAZE_CHANNELS;
                self.values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if i < crop { v as f64 / 10.0 } else { v as f64 })
                    .collect()
            }
        }
    }
}

pub fn obs_dim(kind: GridKind, width: usize, height: usize) -> usize {
    match kind {
        GridKind::Maze => MAZE_OBS_DIM,
        GridKind::Lava => LAVA_CHANNELS * (2 * width - 1) * (2 * height - 1) + width * height,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridStep {
    pub state: GridState,
    pub observation: GridObservation,
    pub reward: f64,
    pub done: bool,
}

/// Start an episode. Grid dynamics are deterministic; `rng` is accepted for
/// interface symmetry with stochastic environments and left untouched.
pub fn grid_reset<R: rand::Rng + ?Sized>(level: &Level, _rng: &mut R) -> Result<(GridState, GridObservation)> {
    let (kind, grid) = level.as_grid()?;
    grid.validate(kind)?;
    let state = GridState { pos: grid.agent, facing: grid.facing, t: 0, done: false, reached_goal: false };
    let obs = observe(kind, grid, &state);
    Ok((state, obs))
}

pub fn grid_step(level: &Level, state: &GridState, action: usize, config: &GridConfig) -> Result<GridStep> {
    let (kind, grid) = level.as_grid()?;
    if state.done {
        return Err(Error::EpisodeDone);
    }
    if action >= kind.num_actions() {
        return Err(Error::InvalidAction(format!(
            "action {action} outside 0..{} for {kind:?}",
            kind.num_actions()
        )));
    }
    let mut next = *state;
    next.t += 1;
    let mut reward = 0.0;
    match kind {
        GridKind::Maze => match action {
            MAZE_TURN_LEFT => next.facing = state.facing.left(),
            MAZE_TURN_RIGHT => next.facing = state.facing.right(),
            _ => {
                if let Some(target) = grid.offset(state.pos, state.facing.delta()) {
                    if grid.cells[target] != Tile::Wall {
                        next.pos = target;
                    }
                }
                if next.pos == grid.goal {
                    reward = 1.0 - next.t as f64 / config.max_steps as f64;
                    next.done = true;
                    next.reached_goal = true;
                }
            }
        },
        GridKind::Lava => {
            reward -= LAVA_STEP_PENALTY;
            if let Some(target) = grid.offset(state.pos, MOVES_8[action]) {
                if grid.cells[target] != Tile::Wall {
                    next.pos = target;
                }
            }
            if grid.cells[next.pos] == Tile::Lava {
                next.done = true;
            } else if next.pos == grid.goal {
                reward += LAVA_GOAL_REWARD;
                next.done = true;
                next.reached_goal = true;
            }
        }
    }
    if next.t >= config.max_steps {
        next.done = true;
    }
    let observation = observe(kind, grid, &next);
    Ok(GridStep { state: next, observation, reward, done: next.done })
}

pub fn observe(kind: GridKind, grid: &GridPayload, state: &GridState) -> GridObservation {
    match kind {
        GridKind::Maze => observe_maze(grid, state),
        GridKind::Lava => observe_lava(grid, state),
    }
}

fn observe_maze(grid: &GridPayload, state: &GridState) -> GridObservation {
    let mut values = vec![0u8; MAZE_OBS_DIM];
    let (ax, ay) = grid.coords(state.pos);
    let (fx, fy) = state.facing.delta();
    let (rx, ry) = state.facing.right().delta();
    let half = (MAZE_VIEW / 2) as i64;
    // Agent sits at the bottom-centre of the view looking "up" the crop.
    for row in 0..MAZE_VIEW {
        for col in 0..MAZE_VIEW {
            let forward = (MAZE_VIEW - 1 - row) as i64;
            let side = col as i64 - half;
            let (x, y) = (ax + forward * fx + side * rx, ay + forward * fy + side * ry);
            let code = match grid.index(x, y) {
                None => CODE_WALL,
                Some(idx) if idx == grid.goal => CODE_GOAL,
                Some(idx) => match grid.cells[idx] {
                    Tile::Empty => CODE_EMPTY,
                    Tile::Wall => CODE_WALL,
                    Tile::Lava => CODE_LAVA,
                },
            };
            values[(row * MAZE_VIEW + col) * MAZE_CHANNELS] = code;
        }
    }
    values[MAZE_VIEW * MAZE_VIEW * MAZE_CHANNELS + state.facing.index()] = 1;
    GridObservation { values }
}

fn observe_lava(grid: &GridPayload, state: &GridState) -> GridObservation {
    let (w, h) = (grid.width as i64, grid.height as i64);
    let (vw, vh) = (2 * w - 1, 2 * h - 1);
    let window = (vw * vh) as usize;
    let mut values = vec![0u8; LAVA_CHANNELS * window + grid.cells.len()];
    let (ax, ay) = grid.coords(state.pos);
    for row in 0..vh {
        for col in 0..vw {
            let channel = match grid.index(ax + col - (w - 1), ay + row - (h - 1)) {
                None => 3,
                Some(i) if i == grid.goal => 2,
                Some(i) if grid.cells[i] == Tile::Lava => 1,
                Some(_) => 0,
            };
            values[(row * vw + col) as usize * LAVA_CHANNELS + channel] = 1;
        }
    }
    values[LAVA_CHANNELS * window + state.pos] = 1;
    GridObservation { values }
}

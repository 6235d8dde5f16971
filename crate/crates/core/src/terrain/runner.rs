//! Kinematic stand-in for the walker physics.
//!
//! The runner moves along a 1-D course with velocity `v` and may hop. Every
//! hazard it crosses has a size, and it passes iff
//!
//! ```text
//! size <= capability(v, hop) = BASE + SPEED_GAIN * v / MAX_SPEED + HOP_GAIN * hop
//! ```
//!
//! with `hop` clipped to `[0, 1]`. Hazard sizes: stump height, half the pit
//! gap, each stair step's rise, and the jump between neighbouring
//! roughness samples. All sizes grow with their genotype parameter, so a
//! harder genotype never yields an easier course. This is not a physics
//! model and makes no claim about transfer to the Box2D walker.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::TerrainParams;
use crate::error::{Error, Result};
use crate::level::Level;
use crate::rng::Rng;

pub const COURSE_LENGTH: f64 = 60.0;
/// Heightfield sample spacing.
pub const RESOLUTION: f64 = 0.25;
pub const FALL_PENALTY: f64 = -100.0;
/// Return for a full, cost-free traversal.
pub const PROGRESS_REWARD: f64 = 300.0;
pub const STEP_COST: f64 = 0.02;
pub const HOP_COST: f64 = 0.1;
pub const MAX_SPEED: f64 = 0.5;
pub const ACCEL: f64 = 0.1;

const BASE: f64 = 0.3;
const SPEED_GAIN: f64 = 1.0;
const HOP_GAIN: f64 = 2.0;
const ROUGHNESS_SCALE: f64 = 0.15;
const PIT_DEPTH: f64 = 3.0;
const FIRST_OBSTACLE: f64 = 8.0;
const STAIR_RUN: f64 = 1.0;
const STUMP_WIDTH: f64 = 0.5;
const LOOKAHEAD: usize = 5;

/// velocity, hop flag, progress, obstacle distance, obstacle size,
/// obstacle kind one-hot (3), roughness jumps ahead.
pub const TERRAIN_OBS_DIM: usize = 8 + LOOKAHEAD;

pub fn capability(velocity: f64, hop: f64) -> f64 {
    BASE + SPEED_GAIN * velocity / MAX_SPEED + HOP_GAIN * hop.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObstacleKind {
    Stump,
    Pit,
    Stair,
}

/// A hazard checkpoint at `x` of the given `size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub kind: ObstacleKind,
    pub x: f64,
    pub size: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Course {
    /// Sorted by `x`.
    pub obstacles: Vec<Obstacle>,
    /// Terrain height at `i * RESOLUTION`.
    pub heights: Vec<f64>,
    /// Roughness component of `heights`.
    pub bumps: Vec<f64>,
}

impl Course {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,height\n");
        for (i, h) in self.heights.iter().enumerate() {
            out.push_str(&format!("{},{h:.6}\n", i as f64 * RESOLUTION));
        }
        out
    }

    fn bump_jump(&self, i: usize) -> f64 {
        if i == 0 || i >= self.bumps.len() {
            0.0
        } else {
            (self.bumps[i] - self.bumps[i - 1]).abs()
        }
    }
}

/// Lay out the course for a genotype. Pure in `(params, seed)`.
pub fn render_course(params: &TerrainParams) -> Course {
    let mut rng = Rng::new(params.seed.unwrap_or(0), 0x7e44a1);
    let samples = (COURSE_LENGTH / RESOLUTION) as usize + 1;
    let roughness = params.roughness();
    // the start zone stays flat
    let flat = (FIRST_OBSTACLE / 2.0 / RESOLUTION) as usize;
    let bumps: Vec<f64> = (0..samples)
        .map(|i| {
            let u: f64 = rng.random_range(-1.0..=1.0);
            if i < flat {
                0.0
            } else {
                roughness * ROUGHNESS_SCALE * u
            }
        })
        .collect();

    let (stump, stair, pit, steps) = (params.stump(), params.stair(), params.pit(), params.stair_steps());
    let mut kinds = Vec::new();
    if stump.1 > 0.0 {
        kinds.push(ObstacleKind::Stump);
    }
    if pit.1 > 0.0 {
        kinds.push(ObstacleKind::Pit);
    }
    if stair.1 > 0.0 && steps > 0 {
        kinds.push(ObstacleKind::Stair);
    }
    let mut obstacles = Vec::new();
    let mut x = FIRST_OBSTACLE;
    while !kinds.is_empty() && x < COURSE_LENGTH - 4.0 {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let draw = |rng: &mut Rng, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let width = match kind {
            ObstacleKind::Stump => {
                let h = draw(&mut rng, stump);
                obstacles.push(Obstacle { kind, x, size: h, width: STUMP_WIDTH });
                STUMP_WIDTH
            }
            ObstacleKind::Pit => {
                let gap = draw(&mut rng, pit);
                obstacles.push(Obstacle { kind, x, size: gap / 2.0, width: gap });
                gap
            }
            ObstacleKind::Stair => {
                let rise = draw(&mut rng, stair);
                for s in 0..steps {
                    obstacles.push(Obstacle { kind, x: x + s as f64 * STAIR_RUN, size: rise, width: STAIR_RUN });
                }
                steps as f64 * STAIR_RUN
            }
        };
        x += width + rng.random_range(4.0..=8.0);
    }

    let mut heights = bumps.clone();
    let mut base = 0.0;
    let mut obs_iter = obstacles.iter().peekable();
    for (i, h) in heights.iter_mut().enumerate() {
        let xi = i as f64 * RESOLUTION;
        while let Some(o) = obs_iter.peek() {
            if o.kind == ObstacleKind::Stair && o.x <= xi {
                base += o.size;
                obs_iter.next();
            } else if o.kind != ObstacleKind::Stair && o.x + o.width < xi {
                obs_iter.next();
            } else {
                break;
            }
        }
        *h += base;
        for o in &obstacles {
            if o.x <= xi && xi <= o.x + o.width {
                match o.kind {
                    ObstacleKind::Stump => *h += o.size,
                    ObstacleKind::Pit => *h -= PIT_DEPTH,
                    ObstacleKind::Stair => {}
                }
            }
        }
    }
    Course { obstacles, heights, bumps }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainConfig {
    pub max_steps: usize,
}

impl Default for TerrainConfig {
    fn default() -> Self {
        TerrainConfig { max_steps: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainState {
    pub x: f64,
    pub velocity: f64,
    /// Posture: whether the last action hopped.
    pub hopping: bool,
    pub t: usize,
    pub done: bool,
    pub fallen: bool,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainStep {
    pub state: TerrainState,
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

pub fn terrain_reset(level: &Level) -> Result<(TerrainState, Course, Vec<f64>)> {
    let params = level.as_terrain()?;
    params.validate()?;
    let course = render_course(params);
    let state = TerrainState { x: 0.0, velocity: 0.0, hopping: false, t: 0, done: false, fallen: false, completed: false };
    let obs = observe(&course, &state);
    Ok((state, course, obs))
}

/// Advance one step with action `[thrust, hop]`, both clipped to `[-1, 1]`.
pub fn terrain_step(course: &Course, state: &TerrainState, action: &[f64], config: &TerrainConfig) -> Result<TerrainStep> {
    if state.done {
        return Err(Error::EpisodeDone);
    }
    if action.len() != 2 {
        return Err(Error::InvalidAction(format!("terrain actions have 2 components, got {}", action.len())));
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidAction(format!("non-finite action {action:?}")));
    }
    let thrust = action[0].clamp(-1.0, 1.0);
    let hop = action[1].clamp(0.0, 1.0);
    let mut next = *state;
    next.t += 1;
    next.hopping = hop > 0.0;
    next.velocity = (state.velocity + ACCEL * thrust).clamp(0.0, MAX_SPEED);
    let target = (state.x + next.velocity).min(COURSE_LENGTH);
    let cap = capability(next.velocity, hop);

    let mut reward = -STEP_COST - HOP_COST * hop;
    let mut reached = target;
    let crossed = |x: f64| x > state.x && x <= target;
    let hazard = course
        .obstacles
        .iter()
        .filter(|o| crossed(o.x) && o.size > cap)
        .map(|o| o.x)
        .chain(
            (0..course.bumps.len())
                .filter(|&i| crossed(i as f64 * RESOLUTION) && course.bump_jump(i) > cap)
                .map(|i| i as f64 * RESOLUTION),
        )
        .fold(f64::INFINITY, f64::min);
    if hazard.is_finite() {
        reached = hazard;
        next.fallen = true;
        next.done = true;
        reward += FALL_PENALTY;
    }
    reward += PROGRESS_REWARD / COURSE_LENGTH * (reached - state.x);
    next.x = reached;
    if !next.fallen && next.x >= COURSE_LENGTH {
        next.completed = true;
        next.done = true;
    }
    if next.t >= config.max_steps {
        next.done = true;
    }
    let observation = observe(course, &next);
    Ok(TerrainStep { state: next, observation, reward, done: next.done })
}

fn observe(course: &Course, state: &TerrainState) -> Vec<f64> {
    let mut obs = Vec::with_capacity(TERRAIN_OBS_DIM);
    obs.push(state.velocity / MAX_SPEED);
    obs.push(if state.hopping { 1.0 } else { 0.0 });
    obs.push(state.x / COURSE_LENGTH);
    match course.obstacles.iter().find(|o| o.x > state.x) {
        Some(o) => {
            obs.push(((o.x - state.x) / 10.0).min(1.0));
            obs.push(o.size / 5.0);
            obs.extend(match o.kind {
                ObstacleKind::Stump => [1.0, 0.0, 0.0],
                ObstacleKind::Pit => [0.0, 1.0, 0.0],
                ObstacleKind::Stair => [0.0, 0.0, 1.0],
            });
        }
        None => obs.extend([1.0, 0.0, 0.0, 0.0, 0.0]),
    }
    let first = (state.x / RESOLUTION).floor() as usize + 1;
    for k in 0..LOOKAHEAD {
        obs.push(course.bump_jump(first + k) / 3.0);
    }
    obs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::{LevelId, Payload};
    use crate::terrain::TerrainMode;

    fn level(values: Vec<f64>, seed: u64) -> Level {
        let mode = if values.len() == 5 { TerrainMode::Five } else { TerrainMode::Eight };
        Level::root(LevelId(0), Payload::Terrain(TerrainParams::new(mode, values, Some(seed))))
    }

    fn run(level: &Level, policy: impl Fn(&[f64]) -> [f64; 2]) -> (f64, TerrainState) {
        let (mut state, course, mut obs) = terrain_reset(level).unwrap();
        let cfg = TerrainConfig::default();
        let mut ret = 0.0;
        while !state.done {
            let step = terrain_step(&course, &state, &policy(&obs), &cfg).unwrap();
            ret += step.reward;
            state = step.state;
            obs = step.observation;
        }
        (ret, state)
    }

    #[test]
    fn flat_course_is_completed() {
        let lvl = level(vec![0.0; 5], 1);
        let (ret, state) = run(&lvl, |_| [1.0, 0.0]);
        assert!(state.completed);
        assert!(ret > 0.0, "{ret}");
    }

    #[test]
    fn falling_costs_a_hundred() {
        // 5 high stumps, no hopping
        let lvl = level(vec![5.0, 0.0, 0.0, 0.0, 0.0], 2);
        let (mut state, course, _) = terrain_reset(&lvl).unwrap();
        let cfg = TerrainConfig::default();
        let mut last = None;
        while !state.done {
            let step = terrain_step(&course, &state, &[1.0, 0.0], &cfg).unwrap();
            state = step.state;
            last = Some(step.reward);
        }
        assert!(state.fallen);
        assert!(last.unwrap() <= FALL_PENALTY + PROGRESS_REWARD / COURSE_LENGTH * MAX_SPEED);
    }

    #[test]
    fn deterministic_returns() {
        let lvl = level(vec![1.0, 2.0, 3.0, 0.5, 2.0], 3);
        let policy = |o: &[f64]| [1.0, if o[3] < 0.1 { 1.0 } else { 0.0 }];
        assert_eq!(run(&lvl, policy).0, run(&lvl, policy).0);
    }

    #[test]
    fn rendering_is_pure() {
        let p = TerrainParams::new(TerrainMode::Eight, vec![0.5, 1.0, 0.2, 0.4, 3.0, 2.0, 1.0, 2.0], Some(9));
        let a = render_course(&p);
        assert_eq!(a, render_course(&p));
        assert_eq!(a.heights.len(), (COURSE_LENGTH / RESOLUTION) as usize + 1);
        assert!(a.obstacles.windows(2).all(|w| w[0].x <= w[1].x));
    }

    #[test]
    fn action_arity() {
        let lvl = level(vec![0.0; 5], 1);
        let (state, course, _) = terrain_reset(&lvl).unwrap();
        assert!(matches!(
            terrain_step(&course, &state, &[1.0], &TerrainConfig::default()),
            Err(Error::InvalidAction(_))
        ));
    }

    #[test]
    fn capability_is_monotone() {
        assert!(capability(0.2, 0.0) < capability(0.4, 0.0));
        assert!(capability(0.2, 0.1) < capability(0.2, 0.5));
        assert_eq!(capability(0.2, 3.0), capability(0.2, 1.0));
    }
}

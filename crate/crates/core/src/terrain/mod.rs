//! Walker terrain genotype, its generators and edit operator, difficulty
//! categories, and a simplified course runner.
//!
//! Two encodings are supported. The 8-parameter layout is
//! `stump_low, stump_high, stair_low, stair_high, stair_steps, roughness,
//! pit_low, pit_high`; the 5-parameter layout is `stump_high, pit_high,
//! roughness, stair_high, stair_steps` with all lows fixed at zero.

mod runner;

pub use runner::{
    render_course, terrain_reset, terrain_step, Course, Obstacle, ObstacleKind, TerrainConfig, TerrainState,
    TerrainStep, COURSE_LENGTH, FALL_PENALTY, TERRAIN_OBS_DIM,
};

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::{Level, LevelId, LevelIds, Payload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerrainMode {
    #[serde(rename = "5d")]
    Five,
    #[serde(rename = "8d")]
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    Fixed(f64),
    /// Magnitude drawn from Unif(0, x).
    UniformUpTo(f64),
}

#[derive(Debug, Clone, Copy)]
struct ParamSpec {
    name: &'static str,
    max: f64,
    edit: Step,
    easy: Step,
    integer: bool,
}

const fn spec(name: &'static str, max: f64, edit: Step, easy: Step, integer: bool) -> ParamSpec {
    ParamSpec { name, max, edit, easy, integer }
}

const ROUGH: Step = Step::UniformUpTo(0.6);

const EIGHT: [ParamSpec; 8] = [
    spec("stump_low", 5.0, Step::Fixed(0.2), Step::Fixed(0.0), false),
    spec("stump_high", 5.0, Step::Fixed(0.2), Step::Fixed(0.4), false),
    spec("stair_low", 5.0, Step::Fixed(0.2), Step::Fixed(0.0), false),
    spec("stair_high", 5.0, Step::Fixed(0.2), Step::Fixed(0.4), false),
    spec("stair_steps", 9.0, Step::Fixed(1.0), Step::Fixed(1.0), true),
    spec("roughness", 10.0, ROUGH, ROUGH, false),
    spec("pit_low", 10.0, Step::Fixed(0.4), Step::Fixed(0.0), false),
    spec("pit_high", 10.0, Step::Fixed(0.4), Step::Fixed(0.8), false),
];
const EIGHT_PAIRS: [(usize, usize); 3] = [(0, 1), (2, 3), (6, 7)];

const FIVE: [ParamSpec; 5] = [
    spec("stump_high", 5.0, Step::Fixed(0.2), Step::Fixed(0.4), false),
    spec("pit_high", 10.0, Step::Fixed(0.4), Step::Fixed(0.8), false),
    spec("roughness", 10.0, ROUGH, ROUGH, false),
    spec("stair_high", 5.0, Step::Fixed(0.2), Step::Fixed(0.4), false),
    spec("stair_steps", 9.0, Step::Fixed(1.0), Step::Fixed(1.0), true),
];

impl TerrainMode {
    fn specs(self) -> &'static [ParamSpec] {
        match self {
            TerrainMode::Five => &FIVE,
            TerrainMode::Eight => &EIGHT,
        }
    }

    fn pairs(self) -> &'static [(usize, usize)] {
        match self {
            TerrainMode::Five => &[],
            TerrainMode::Eight => &EIGHT_PAIRS,
        }
    }

    pub fn len(self) -> usize {
        self.specs().len()
    }

    pub fn param_names(self) -> Vec<&'static str> {
        self.specs().iter().map(|s| s.name).collect()
    }

    pub fn max_values(self) -> Vec<f64> {
        self.specs().iter().map(|s| s.max).collect()
    }
}

/// Terrain genotype plus the seed that fixes obstacle placement.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainParams {
    mode: TerrainMode,
    values: Vec<f64>,
    pub seed: Option<u64>,
}

impl TerrainParams {
    pub fn new(mode: TerrainMode, values: Vec<f64>, seed: Option<u64>) -> Self {
        TerrainParams { mode, values, seed }
    }

    pub fn zeros(mode: TerrainMode) -> Self {
        TerrainParams { mode, values: vec![0.0; mode.len()], seed: None }
    }

    pub fn mode(&self) -> TerrainMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validate(&self) -> Result<()> {
        let specs = self.mode.specs();
        if self.values.len() != specs.len() {
            return Err(Error::invalid(format!(
                "{:?} terrain expects {} values, got {}",
                self.mode,
                specs.len(),
                self.values.len()
            )));
        }
        for (v, s) in self.values.iter().zip(specs) {
            if !v.is_finite() || *v < 0.0 || *v > s.max {
                return Err(Error::invalid(format!("{} = {v} outside [0, {}]", s.name, s.max)));
            }
            if s.integer && v.fract() != 0.0 {
                return Err(Error::invalid(format!("{} = {v} must be an integer", s.name)));
            }
        }
        for &(lo, hi) in self.mode.pairs() {
            if self.values[lo] > self.values[hi] {
                return Err(Error::invalid(format!(
                    "{} = {} exceeds {} = {}",
                    specs[lo].name, self.values[lo], specs[hi].name, self.values[hi]
                )));
            }
        }
        Ok(())
    }

    pub fn stump(&self) -> (f64, f64) {
        match self.mode {
            TerrainMode::Five => (0.0, self.values[0]),
            TerrainMode::Eight => (self.values[0], self.values[1]),
        }
    }

    pub fn stair(&self) -> (f64, f64) {
        match self.mode {
            TerrainMode::Five => (0.0, self.values[3]),
            TerrainMode::Eight => (self.values[2], self.values[3]),
        }
    }

    pub fn stair_steps(&self) -> u32 {
        // index 4 in both layouts
        self.values[4] as u32
    }

    pub fn roughness(&self) -> f64 {
        match self.mode {
            TerrainMode::Five => self.values[2],
            TerrainMode::Eight => self.values[5],
        }
    }

    pub fn pit(&self) -> (f64, f64) {
        match self.mode {
            TerrainMode::Five => (0.0, self.values[1]),
            TerrainMode::Eight => (self.values[6], self.values[7]),
        }
    }

    /// Range an edit may move value `i` within.
    fn edit_bounds(&self, i: usize) -> (f64, f64) {
        let max = self.mode.specs()[i].max;
        for &(lo, hi) in self.mode.pairs() {
            if i == lo {
                return (0.0, self.values[hi]);
            }
            if i == hi {
                return (self.values[lo], max);
            }
        }
        (0.0, max)
    }

    fn sort_pairs(&mut self) {
        for &(lo, hi) in self.mode.pairs() {
            if self.values[lo] > self.values[hi] {
                self.values.swap(lo, hi);
            }
        }
    }
}

fn draw_step<R: rand::Rng + ?Sized>(step: Step, rng: &mut R) -> f64 {
    match step {
        Step::Fixed(v) => v,
        Step::UniformUpTo(hi) => rng.random_range(0.0..=hi),
    }
}

/// The hand-tuned easy starting level ACCEL grows from.
pub fn terrain_easy_init<R: rand::Rng + ?Sized>(rng: &mut R, mode: TerrainMode, id: LevelId) -> Level {
    let values = mode.specs().iter().map(|s| draw_step(s.easy, rng)).collect();
    let seed = Some(rng.random::<u64>());
    Level::root(id, Payload::Terrain(TerrainParams { mode, values, seed }))
}

/// Uniform over the design space; range pairs are sorted afterwards.
pub fn terrain_sample_dr<R: rand::Rng + ?Sized>(rng: &mut R, mode: TerrainMode, id: LevelId) -> Level {
    let values = mode
        .specs()
        .iter()
        .map(|s| if s.integer { rng.random_range(0..=s.max as u32) as f64 } else { rng.random_range(0.0..=s.max) })
        .collect();
    let mut params = TerrainParams { mode, values, seed: Some(rng.random::<u64>()) };
    params.sort_pairs();
    Level::root(id, Payload::Terrain(params))
}

/// Nudge one parameter up or down by its edit size. Each parameter stays in
/// `[0, max]` and range pairs stay ordered, so exactly one value changes. A
/// parameter sitting on a bound moves inward. The child keeps the parent's seed.
pub fn terrain_edit<R: rand::Rng + ?Sized>(level: &Level, rng: &mut R, ids: &mut LevelIds) -> Result<Level> {
    let mut params = level.as_terrain()?.clone();
    let specs = params.mode.specs();
    let bounds: Vec<(f64, f64)> = (0..specs.len()).map(|i| params.edit_bounds(i)).collect();
    let movable: Vec<usize> = (0..specs.len()).filter(|&i| bounds[i].0 < bounds[i].1).collect();
    let slot = *movable.choose(rng).ok_or_else(|| Error::invalid("no terrain parameter can move"))?;
    let (lo, hi) = bounds[slot];
    let s = specs[slot];
    let old = params.values[slot];
    let sign = if old <= lo {
        1.0
    } else if old >= hi {
        -1.0
    } else if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    };
    let v = loop {
        let mut v = (old + sign * draw_step(s.edit, rng)).clamp(lo, hi);
        if s.integer {
            v = v.round().clamp(lo, hi);
        }
        if v != old {
            break v;
        }
    };
    params.values[slot] = v;
    Ok(level.child(ids.fresh(), Payload::Terrain(params)))
}

/// Difficulty categories by the number of hardness thresholds a level meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DifficultyCategory {
    Easy,
    Challenging,
    VeryChallenging,
    ExtremelyChallenging,
}

impl DifficultyCategory {
    pub const ALL: [DifficultyCategory; 4] = [
        DifficultyCategory::Easy,
        DifficultyCategory::Challenging,
        DifficultyCategory::VeryChallenging,
        DifficultyCategory::ExtremelyChallenging,
    ];

    pub fn from_count(met: usize) -> Self {
        match met {
            0 => DifficultyCategory::Easy,
            1 => DifficultyCategory::Challenging,
            2 => DifficultyCategory::VeryChallenging,
            _ => DifficultyCategory::ExtremelyChallenging,
        }
    }
}

pub const STUMP_THRESHOLD: f64 = 2.4;
pub const PIT_THRESHOLD: f64 = 6.0;
pub const ROUGHNESS_THRESHOLD: f64 = 4.5;

pub fn categorize_params(params: &TerrainParams) -> DifficultyCategory {
    let met = [
        params.stump().1 >= STUMP_THRESHOLD,
        params.pit().1 >= PIT_THRESHOLD,
        params.roughness() >= ROUGHNESS_THRESHOLD,
    ]
    .into_iter()
    .filter(|&m| m)
    .count();
    DifficultyCategory::from_count(met)
}

pub fn categorize(level: &Level) -> Result<DifficultyCategory> {
    Ok(categorize_params(level.as_terrain()?))
}

/// Resample until all three hardness thresholds are met.
pub fn sample_extremely_challenging<R: rand::Rng + ?Sized>(rng: &mut R, mode: TerrainMode, id: LevelId) -> Level {
    loop {
        let level = terrain_sample_dr(rng, mode, id);
        if categorize(&level).ok() == Some(DifficultyCategory::ExtremelyChallenging) {
            return level;
        }
    }
}

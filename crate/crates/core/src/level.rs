//! Levels and their single-line text codec.
//!
//! ```text
//! <kind>;<id>;<parent_id|->;<generation>;<payload>
//! ```
//!
//! Grid payloads are row-major glyph strings (`.` empty, `#` wall, `L` lava,
//! `G` goal, `A` agent start). Square grids are written as one run of
//! glyphs; non-square grids separate rows with `/`. A maze agent facing
//! anything other than east carries an `@N`/`@S`/`@W` suffix.
//!
//! Terrain payloads are comma-separated decimals in the parameter order of
//! [`TerrainParams`], optionally followed by `@<seed>`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Facing, GridKind, GridPayload, Tile};
use crate::terrain::{TerrainMode, TerrainParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LevelId(pub u64);

impl fmt::Display for LevelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelKind {
    LavaGrid,
    MazeGrid,
    Terrain,
}

impl LevelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LevelKind::LavaGrid => "lava-grid",
            LevelKind::MazeGrid => "maze-grid",
            LevelKind::Terrain => "terrain",
        }
    }

    pub fn grid_kind(self) -> Option<GridKind> {
        match self {
            LevelKind::LavaGrid => Some(GridKind::Lava),
            LevelKind::MazeGrid => Some(GridKind::Maze),
            LevelKind::Terrain => None,
        }
    }
}

impl fmt::Display for LevelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LevelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lava-grid" => Ok(LevelKind::LavaGrid),
            "maze-grid" => Ok(LevelKind::MazeGrid),
            "terrain" => Ok(LevelKind::Terrain),
            other => Err(Error::parse("kind", format!("unknown level kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    LavaGrid(GridPayload),
    MazeGrid(GridPayload),
    Terrain(TerrainParams),
}

impl Payload {
    pub fn kind(&self) -> LevelKind {
        match self {
            Payload::LavaGrid(_) => LevelKind::LavaGrid,
            Payload::MazeGrid(_) => LevelKind::MazeGrid,
            Payload::Terrain(_) => LevelKind::Terrain,
        }
    }

    pub fn grid(kind: GridKind, grid: GridPayload) -> Payload {
        match kind {
            GridKind::Lava => Payload::LavaGrid(grid),
            GridKind::Maze => Payload::MazeGrid(grid),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Payload::LavaGrid(g) => g.validate(GridKind::Lava),
            Payload::MazeGrid(g) => g.validate(GridKind::Maze),
            Payload::Terrain(t) => t.validate(),
        }
    }
}

/// A concrete environment instance plus its edit lineage.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub id: LevelId,
    pub parent_id: Option<LevelId>,
    /// Number of edits separating this level from a generator-produced root.
    pub generation: u32,
    pub payload: Payload,
}

impl Level {
    pub fn root(id: LevelId, payload: Payload) -> Level {
        Level { id, parent_id: None, generation: 0, payload }
    }

    /// A level derived from `self` by one edit step.
    pub fn child(&self, id: LevelId, payload: Payload) -> Level {
        Level { id, parent_id: Some(self.id), generation: self.generation + 1, payload }
    }

    pub fn kind(&self) -> LevelKind {
        self.payload.kind()
    }

    pub fn as_grid(&self) -> Result<(GridKind, &GridPayload)> {
        match &self.payload {
            Payload::LavaGrid(g) => Ok((GridKind::Lava, g)),
            Payload::MazeGrid(g) => Ok((GridKind::Maze, g)),
            Payload::Terrain(_) => Err(Error::WrongKind { expected: "grid", actual: "terrain" }),
        }
    }

    pub fn as_terrain(&self) -> Result<&TerrainParams> {
        match &self.payload {
            Payload::Terrain(t) => Ok(t),
            other => Err(Error::WrongKind { expected: "terrain", actual: other.kind().as_str() }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.generation == 0) != self.parent_id.is_none() {
            return Err(Error::invalid(format!(
                "generation {} inconsistent with parent {:?}",
                self.generation, self.parent_id
            )));
        }
        self.payload.validate()
    }

    pub fn encode(&self) -> String {
        encode_level(self)
    }

    pub fn decode(text: &str) -> Result<Level> {
        decode_level(text)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_level(self))
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        decode_level(s)
    }
}

/// Hands out run-scoped level ids.
#[derive(Debug, Clone, Default)]
pub struct LevelIds {
    next: u64,
}

impl LevelIds {
    pub fn starting_at(next: u64) -> Self {
        LevelIds { next }
    }

    pub fn fresh(&mut self) -> LevelId {
        let id = LevelId(self.next);
        self.next += 1;
        id
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

pub fn encode_level(level: &Level) -> String {
    let parent = level.parent_id.map_or_else(|| "-".to_string(), |p| p.0.to_string());
    let payload = match &level.payload {
        Payload::LavaGrid(g) | Payload::MazeGrid(g) => encode_grid(g),
        Payload::Terrain(t) => encode_terrain(t),
    };
    format!("{};{};{};{};{}", level.kind(), level.id, parent, level.generation, payload)
}

pub fn decode_level(text: &str) -> Result<Level> {
    let text = text.trim_end_matches(['\n', '\r']);
    let fields: Vec<&str> = text.split(';').collect();
    if fields.len() != 5 {
        return Err(Error::parse("level", format!("expected 5 `;`-separated fields, found {}", fields.len())));
    }
    let kind: LevelKind = fields[0].parse()?;
    let id = fields[1]
        .parse::<u64>()
        .map_err(|e| Error::parse("id", format!("`{}`: {e}", fields[1])))?;
    let parent_id = match fields[2] {
        "-" => None,
        p => Some(LevelId(p.parse::<u64>().map_err(|e| Error::parse("parent_id", format!("`{p}`: {e}")))?)),
    };
    let generation = fields[3]
        .parse::<u32>()
        .map_err(|e| Error::parse("generation", format!("`{}`: {e}", fields[3])))?;
    let payload = match kind {
        LevelKind::LavaGrid => Payload::LavaGrid(decode_grid(fields[4])?),
        LevelKind::MazeGrid => Payload::MazeGrid(decode_grid(fields[4])?),
        LevelKind::Terrain => Payload::Terrain(decode_terrain(fields[4])?),
    };
    let level = Level { id: LevelId(id), parent_id, generation, payload };
    level.validate()?;
    Ok(level)
}

fn encode_grid(g: &GridPayload) -> String {
    let mut out = String::with_capacity(g.cells.len() + g.height + 2);
    for row in 0..g.height {
        if row > 0 && g.width != g.height {
            out.push('/');
        }
        for col in 0..g.width {
            let idx = row * g.width + col;
            out.push(if idx == g.agent {
                'A'
            } else if idx == g.goal {
                'G'
            } else {
                match g.cells[idx] {
                    Tile::Empty => '.',
                    Tile::Wall => '#',
                    Tile::Lava => 'L',
                }
            });
        }
    }
    if g.facing != Facing::E {
        out.push('@');
        out.push(g.facing.glyph());
    }
    out
}

fn decode_grid(text: &str) -> Result<GridPayload> {
    let (body, facing) = match text.split_once('@') {
        Some((body, f)) => {
            let mut chars = f.chars();
            let facing = match (chars.next(), chars.next()) {
                (Some(c), None) => Facing::from_glyph(c)
                    .ok_or_else(|| Error::parse("payload", format!("bad facing `{c}`")))?,
                _ => return Err(Error::parse("payload", format!("bad facing suffix `@{f}`"))),
            };
            (body, facing)
        }
        None => (text, Facing::E),
    };
    let (width, height, glyphs): (usize, usize, Vec<char>) = if body.contains('/') {
        let rows: Vec<&str> = body.split('/').collect();
        let width = rows[0].chars().count();
        if rows.iter().any(|r| r.chars().count() != width) {
            return Err(Error::parse("payload", "grid rows have unequal length"));
        }
        (width, rows.len(), rows.concat().chars().collect())
    } else {
        let glyphs: Vec<char> = body.chars().collect();
        let side = (glyphs.len() as f64).sqrt().round() as usize;
        if side * side != glyphs.len() {
            return Err(Error::parse(
                "payload",
                format!("{} glyphs is not a square grid; separate rows with `/`", glyphs.len()),
            ));
        }
        (side, side, glyphs)
    };
    if width == 0 || height == 0 {
        return Err(Error::parse("payload", "empty grid"));
    }
    let mut cells = Vec::with_capacity(glyphs.len());
    let mut agent = None;
    let mut goal = None;
    for (idx, c) in glyphs.into_iter().enumerate() {
        let tile = match c {
            '.' => Tile::Empty,
            '#' => Tile::Wall,
            'L' => Tile::Lava,
            'A' | 'G' => {
                let slot = if c == 'A' { &mut agent } else { &mut goal };
                if slot.replace(idx).is_some() {
                    return Err(Error::parse("payload", format!("more than one `{c}`")));
                }
                Tile::Empty
            }
            other => return Err(Error::parse("payload", format!("unknown glyph `{other}`"))),
        };
        cells.push(tile);
    }
    let agent = agent.ok_or_else(|| Error::parse("payload", "missing agent `A`"))?;
    let goal = goal.ok_or_else(|| Error::parse("payload", "missing goal `G`"))?;
    Ok(GridPayload { width, height, cells, agent, facing, goal })
}

fn encode_terrain(t: &TerrainParams) -> String {
    let mut out = t.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    if let Some(seed) = t.seed {
        out.push('@');
        out.push_str(&seed.to_string());
    }
    out
}

fn decode_terrain(text: &str) -> Result<TerrainParams> {
    let (body, seed) = match text.split_once('@') {
        Some((body, s)) => {
            let seed = s.parse::<u64>().map_err(|e| Error::parse("payload", format!("seed `{s}`: {e}")))?;
            (body, Some(seed))
        }
        None => (text, None),
    };
    let values = body
        .split(',')
        .map(|v| {
            v.parse::<f64>()
                .map_err(|e| Error::parse("payload", format!("terrain value `{v}`: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mode = match values.len() {
        5 => TerrainMode::Five,
        8 => TerrainMode::Eight,
        n => return Err(Error::parse("payload", format!("terrain needs 5 or 8 values, got {n}"))),
    };
    let params = TerrainParams::new(mode, values, seed);
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_maze_3x3() -> Level {
        let grid = GridPayload::empty(3, 3, 0, 8, Facing::E);
        Level::root(LevelId(7), Payload::MazeGrid(grid))
    }

    #[test]
    fn encodes_minimal_maze() {
        let text = encode_level(&empty_maze_3x3());
        assert_eq!(text, "maze-grid;7;-;0;A.......G");
        let payload = text.rsplit(';').next().unwrap();
        assert_eq!(payload.len(), 9);
        assert_eq!(payload.find('A'), Some(0));
        assert_eq!(payload.find('G'), Some(8));
    }

    #[test]
    fn decodes_minimal_maze() {
        assert_eq!(decode_level("maze-grid;7;-;0;A.......G").unwrap(), empty_maze_3x3());
    }

    #[test]
    fn zero_terrain_payload() {
        let level = Level::root(LevelId(1), Payload::Terrain(TerrainParams::zeros(TerrainMode::Five)));
        assert!(encode_level(&level).ends_with(";0,0,0,0,0"));
    }

    #[test]
    fn terrain_above_max_is_rejected() {
        // stump high max is 5
        let err = decode_level("terrain;1;-;0;5.5,0,0,0,0").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn parse_errors_name_the_field() {
        let cases = [
            ("bogus;1;-;0;A.......G", "kind"),
            ("maze-grid;x;-;0;A.......G", "id"),
            ("maze-grid;1;?;0;A.......G", "parent_id"),
            ("maze-grid;1;-;-3;A.......G", "generation"),
            ("maze-grid;1;-;0;A......G", "payload"),
        ];
        for (text, field) in cases {
            match decode_level(text) {
                Err(Error::Parse { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn lineage_consistency_is_validated() {
        assert!(decode_level("maze-grid;1;0;0;A.......G").is_err());
        assert!(decode_level("maze-grid;1;-;2;A.......G").is_err());
        assert!(decode_level("maze-grid;1;0;2;A.......G").is_ok());
    }

    #[test]
    fn non_square_and_facing_round_trip() {
        let mut grid = GridPayload::empty(5, 3, 1, 13, Facing::S);
        grid.cells[7] = Tile::Wall;
        let level = Level::root(LevelId(3), Payload::MazeGrid(grid));
        let text = encode_level(&level);
        assert_eq!(text, "maze-grid;3;-;0;.A.../..#../...G.@S");
        assert_eq!(decode_level(&text).unwrap(), level);
    }

    #[test]
    fn kind_specific_tiles() {
        assert!(decode_level("maze-grid;1;-;0;AL......G").is_err());
        assert!(decode_level("lava-grid;1;-;0;A#......G").is_err());
        assert!(decode_level("lava-grid;1;-;0;AL......G").is_ok());
    }
}

use rand::seq::IndexedRandom;

use super::{GridKind, GridPayload, Tile};
use crate::error::{Error, Result};
use crate::level::{Level, LevelIds, Payload};

/// Edit steps applied per child.
pub const DEFAULT_EDITS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Flip the cell between empty and the kind's obstacle. Dropping an
    /// obstacle on the agent or goal pushes them to a random free cell.
    Toggle(usize),
    /// Maze only: relocate the goal to a random free cell.
    MoveGoal,
}

/// Apply one primitive mutation in place. Returns `false` when it was void
/// (no room to relocate an entity).
pub fn apply_mutation<R: rand::Rng + ?Sized>(
    grid: &mut GridPayload,
    kind: GridKind,
    mutation: Mutation,
    rng: &mut R,
) -> Result<bool> {
    match mutation {
        Mutation::Toggle(cell) => {
            if cell >= grid.cells.len() {
                return Err(Error::invalid(format!("toggle target {cell} outside grid")));
            }
            if cell == grid.agent || cell == grid.goal {
                let Some(&dest) = grid.free_cells().choose(rng) else {
                    return Ok(false);
                };
                if cell == grid.agent {
                    grid.agent = dest;
                } else {
                    grid.goal = dest;
                }
                grid.cells[cell] = kind.obstacle();
            } else if grid.cells[cell].is_obstacle() {
                grid.cells[cell] = Tile::Empty;
            } else {
                grid.cells[cell] = kind.obstacle();
            }
            Ok(true)
        }
        Mutation::MoveGoal => {
            if kind != GridKind::Maze {
                return Err(Error::invalid("goal moves are maze-only"));
            }
            match grid.free_cells().choose(rng) {
                Some(&dest) => {
                    grid.goal = dest;
                    Ok(true)
                }
                None => Ok(false),
            }
        }
    }
}

fn sample_mutation<R: rand::Rng + ?Sized>(grid: &GridPayload, kind: GridKind, rng: &mut R) -> Mutation {
    let toggle = match kind {
        GridKind::Lava => true,
        GridKind::Maze => rng.random_bool(0.5),
    };
    if toggle {
        Mutation::Toggle(rng.random_range(0..grid.cells.len()))
    } else {
        Mutation::MoveGoal
    }
}

/// Child of `level` after `n_edits` random mutations.
pub fn grid_edit<R: rand::Rng + ?Sized>(
    level: &Level,
    rng: &mut R,
    n_edits: usize,
    ids: &mut LevelIds,
) -> Result<Level> {
    let (kind, parent) = level.as_grid()?;
    if n_edits == 0 {
        return Err(Error::Config("n_edits must be at least 1".into()));
    }
    let mut grid = parent.clone();
    for _ in 0..n_edits {
        let m = sample_mutation(&grid, kind, rng);
        apply_mutation(&mut grid, kind, m, rng)?;
    }
    Ok(level.child(ids.fresh(), Payload::grid(kind, grid)))
}

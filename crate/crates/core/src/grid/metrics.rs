use std::collections::VecDeque;

use serde::Serialize;

use super::{GridKind, GridPayload};
use crate::error::Result;
use crate::level::Level;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridComplexity {
    pub obstacle_count: usize,
    pub shortest_path: Option<usize>,
    pub solvable: bool,
}

/// BFS distance from agent start to goal; walls and lava block. The maze is
/// 4-connected, the lava room 8-connected (matching their action sets).
pub fn shortest_path_length(level: &Level) -> Result<Option<usize>> {
    let (kind, grid) = level.as_grid()?;
    Ok(bfs(kind, grid))
}

pub(crate) fn bfs(kind: GridKind, grid: &GridPayload) -> Option<usize> {
    let mut dist = vec![usize::MAX; grid.cells.len()];
    let mut queue = VecDeque::new();
    dist[grid.agent] = 0;
    queue.push_back(grid.agent);
    while let Some(cell) = queue.pop_front() {
        if cell == grid.goal {
            return Some(dist[cell]);
        }
        for &delta in kind.neighbours() {
            if let Some(next) = grid.offset(cell, delta) {
                if !grid.cells[next].is_obstacle() && dist[next] == usize::MAX {
                    dist[next] = dist[cell] + 1;
                    queue.push_back(next);
                }
            }
        }
    }
    None
}

pub fn grid_complexity(level: &Level) -> Result<GridComplexity> {
    let (kind, grid) = level.as_grid()?;
    let shortest_path = bfs(kind, grid);
    Ok(GridComplexity {
        obstacle_count: grid.obstacle_count(),
        shortest_path,
        solvable: shortest_path.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Facing, Tile};
    use crate::level::{LevelId, Payload};

    fn level(kind: GridKind, grid: GridPayload) -> Level {
        Level::root(LevelId(0), Payload::grid(kind, grid))
    }

    #[test]
    fn corner_to_corner() {
        let maze = level(GridKind::Maze, GridPayload::empty(3, 3, 0, 8, Facing::E));
        assert_eq!(shortest_path_length(&maze).unwrap(), Some(4));
        let lava = level(GridKind::Lava, GridPayload::empty(3, 3, 0, 8, Facing::E));
        assert_eq!(shortest_path_length(&lava).unwrap(), Some(2));
    }

    #[test]
    fn walled_in_goal() {
        let mut grid = GridPayload::empty(3, 3, 0, 8, Facing::E);
        grid.cells[5] = Tile::Wall;
        grid.cells[7] = Tile::Wall;
        let maze = level(GridKind::Maze, grid);
        assert_eq!(shortest_path_length(&maze).unwrap(), None);
    }

    #[test]
    fn lava_ring_without_diagonal_gap() {
        let mut grid = GridPayload::empty(5, 5, 12, 0, Facing::E);
        for idx in [6, 7, 8, 11, 13, 16, 17, 18] {
            grid.cells[idx] = Tile::Lava;
        }
        let c = grid_complexity(&level(GridKind::Lava, grid.clone())).unwrap();
        assert_eq!(c.obstacle_count, 8);
        assert!(!c.solvable);
        // open one diagonal corner and the 8-connected agent escapes
        grid.cells[6] = Tile::Empty;
        assert!(grid_complexity(&level(GridKind::Lava, grid)).unwrap().solvable);
    }

    #[test]
    fn empty_15x15() {
        let c = grid_complexity(&level(GridKind::Maze, GridPayload::empty(15, 15, 0, 224, Facing::E))).unwrap();
        assert_eq!(c.obstacle_count, 0);
        assert!(c.solvable);
        assert_eq!(c.shortest_path, Some(28));
    }
}

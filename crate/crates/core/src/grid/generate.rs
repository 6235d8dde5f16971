use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{Facing, GridKind, GridPayload, Tile};
use crate::error::{Error, Result};
use crate::level::{Level, LevelId, Payload};

/// Random-generator settings: grid size and the obstacle-count range the
/// generator draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridGenConfig {
    pub width: usize,
    pub height: usize,
    pub min_obstacles: usize,
    pub max_obstacles: usize,
}

impl GridGenConfig {
    /// 7x7 lava room, 0 to 20 lava tiles.
    pub fn lava() -> Self {
        GridGenConfig { width: 7, height: 7, min_obstacles: 0, max_obstacles: 20 }
    }

    /// 15x15 maze, 0 to 60 blocks.
    pub fn maze() -> Self {
        GridGenConfig { width: 15, height: 15, min_obstacles: 0, max_obstacles: 60 }
    }

    pub fn for_kind(kind: GridKind) -> Self {
        match kind {
            GridKind::Lava => Self::lava(),
            GridKind::Maze => Self::maze(),
        }
    }

    pub fn empty(self) -> Self {
        GridGenConfig { min_obstacles: 0, max_obstacles: 0, ..self }
    }
}

/// Sample a level the way a sequential designer would: draw an obstacle
/// count, drop that many obstacles on uniformly random cells (landing on an
/// occupied cell does nothing), then place the goal and the agent on random
/// remaining cells.
pub fn grid_sample_dr<R: rand::Rng + ?Sized>(
    rng: &mut R,
    kind: GridKind,
    config: &GridGenConfig,
    id: LevelId,
) -> Result<Level> {
    let cells = config.width * config.height;
    if config.width == 0 || config.height == 0 || cells < 2 {
        return Err(Error::Config(format!("grid {}x{} is too small", config.width, config.height)));
    }
    if config.min_obstacles > config.max_obstacles || config.max_obstacles > cells - 2 {
        return Err(Error::Config(format!(
            "obstacle range [{}, {}] does not fit a {}-cell grid",
            config.min_obstacles, config.max_obstacles, cells
        )));
    }
    let count = rng.random_range(config.min_obstacles..=config.max_obstacles);
    let mut grid_cells = vec![Tile::Empty; cells];
    for _ in 0..count {
        grid_cells[rng.random_range(0..cells)] = kind.obstacle();
    }
    let free: Vec<usize> = (0..cells).filter(|&i| grid_cells[i] == Tile::Empty).collect();
    let goal = *free.choose(rng).expect("at least two free cells");
    let agent = loop {
        let c = *free.choose(rng).expect("at least two free cells");
        if c != goal {
            break c;
        }
    };
    let facing = match kind {
        GridKind::Maze => *Facing::ALL.choose(rng).unwrap(),
        GridKind::Lava => Facing::E,
    };
    let grid = GridPayload { width: config.width, height: config.height, cells: grid_cells, agent, facing, goal };
    Ok(Level::root(id, Payload::grid(kind, grid)))
}

/// Obstacle-free room with random agent and goal.
pub fn empty_room<R: rand::Rng + ?Sized>(
    rng: &mut R,
    kind: GridKind,
    width: usize,
    height: usize,
    id: LevelId,
) -> Result<Level> {
    let config = GridGenConfig { width, height, min_obstacles: 0, max_obstacles: 0 };
    grid_sample_dr(rng, kind, &config, id)
}

/// Recursive-backtracker maze over the odd-coordinate cells of a
/// `width x height` grid (both odd, at least 5). The open cells form a
/// spanning tree, so every pair is joined by exactly one path.
pub fn perfect_maze<R: rand::Rng + ?Sized>(rng: &mut R, width: usize, height: usize, id: LevelId) -> Result<Level> {
    if width < 5 || height < 5 || width % 2 == 0 || height % 2 == 0 {
        return Err(Error::Config(format!("perfect maze needs odd dimensions >= 5, got {width}x{height}")));
    }
    let mut cells = vec![Tile::Wall; width * height];
    let at = |x: usize, y: usize| y * width + x;
    let (rooms_x, rooms_y) = ((width - 1) / 2, (height - 1) / 2);
    let room_pos = |rx: usize, ry: usize| (2 * rx + 1, 2 * ry + 1);
    let mut visited = vec![false; rooms_x * rooms_y];

    let start = (rng.random_range(0..rooms_x), rng.random_range(0..rooms_y));
    let mut stack = vec![start];
    visited[start.1 * rooms_x + start.0] = true;
    let (sx, sy) = room_pos(start.0, start.1);
    cells[at(sx, sy)] = Tile::Empty;
    while let Some(&(rx, ry)) = stack.last() {
        let mut options = Vec::with_capacity(4);
        if rx > 0 && !visited[ry * rooms_x + rx - 1] {
            options.push((rx - 1, ry));
        }
        if rx + 1 < rooms_x && !visited[ry * rooms_x + rx + 1] {
            options.push((rx + 1, ry));
        }
        if ry > 0 && !visited[(ry - 1) * rooms_x + rx] {
            options.push((rx, ry - 1));
        }
        if ry + 1 < rooms_y && !visited[(ry + 1) * rooms_x + rx] {
            options.push((rx, ry + 1));
        }
        match options.choose(rng) {
            None => {
                stack.pop();
            }
            Some(&(nx, ny)) => {
                visited[ny * rooms_x + nx] = true;
                let (ax, ay) = room_pos(rx, ry);
                let (bx, by) = room_pos(nx, ny);
                cells[at((ax + bx) / 2, (ay + by) / 2)] = Tile::Empty;
                cells[at(bx, by)] = Tile::Empty;
                stack.push((nx, ny));
            }
        }
    }

    let corridor: Vec<usize> = (0..cells.len()).filter(|&i| cells[i] == Tile::Empty).collect();
    let chosen: Vec<usize> = corridor.choose_multiple(rng, 2).copied().collect();
    let facing = *Facing::ALL.choose(rng).unwrap();
    let grid = GridPayload { width, height, cells, agent: chosen[0], facing, goal: chosen[1] };
    Ok(Level::root(id, Payload::MazeGrid(grid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;
    use crate::grid::metrics::bfs;
    use crate::level::{decode_level, encode_level};
    use crate::rng::Rng;

    /// Exact distribution of the number of distinct cells hit when `n`
    /// obstacles are dropped uniformly on `cells` cells.
    fn occupancy(n: usize, cells: usize) -> Vec<f64> {
        let mut p = vec![0.0; n + 1];
        p[0] = 1.0;
        for _ in 0..n {
            let mut next = vec![0.0; n + 1];
            for (k, &pk) in p.iter().enumerate() {
                if pk == 0.0 {
                    continue;
                }
                let hit = k as f64 / cells as f64;
                next[k] += pk * hit;
                if k + 1 <= n {
                    next[k + 1] += pk * (1.0 - hit);
                }
            }
            p = next;
        }
        p
    }

    /// Independent simulation of the placement procedure over a set.
    fn simulate_count(rng: &mut Rng, lo: usize, hi: usize, cells: usize) -> usize {
        let n = rng.random_range(lo..=hi);
        let mut hit = std::collections::HashSet::new();
        for _ in 0..n {
            hit.insert(rng.random_range(0..cells));
        }
        hit.len()
    }

    #[test]
    fn maze_dr_counts_in_range() {
        let mut rng = Rng::new(1, 0);
        let cfg = GridGenConfig::maze();
        for i in 0..10_000 {
            let lvl = grid_sample_dr(&mut rng, GridKind::Maze, &cfg, LevelId(i)).unwrap();
            let (_, g) = lvl.as_grid().unwrap();
            assert!(g.obstacle_count() <= 60);
            lvl.validate().unwrap();
        }
    }

    #[test]
    fn maze_dr_count_distribution_matches_oracles() {
        let cfg = GridGenConfig::maze();
        let cells = cfg.width * cfg.height;
        // exact mixture over the uniformly drawn count
        let mut exact = vec![0.0; 61];
        for n in 0..=60 {
            for (k, p) in occupancy(n, cells).into_iter().enumerate() {
                exact[k] += p / 61.0;
            }
        }
        let draws = 200_000;
        let mut rng = Rng::new(2, 0);
        let mut hist = vec![0.0; 61];
        let mut sim_rng = Rng::new(3, 0);
        let mut sim = vec![0.0; 61];
        for i in 0..draws {
            let lvl = grid_sample_dr(&mut rng, GridKind::Maze, &cfg, LevelId(i)).unwrap();
            hist[lvl.as_grid().unwrap().1.obstacle_count()] += 1.0 / draws as f64;
            sim[simulate_count(&mut sim_rng, 0, 60, cells)] += 1.0 / draws as f64;
        }
        let l1_exact: f64 = hist.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum();
        let l1_sim: f64 = hist.iter().zip(&sim).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1_exact < 0.02, "L1 vs exact occupancy {l1_exact}");
        assert!(l1_sim < 0.02, "L1 vs simulated placement {l1_sim}");
    }

    #[test]
    fn zero_obstacles_gives_empty_room() {
        let mut rng = Rng::new(4, 0);
        let cfg = GridGenConfig::lava().empty();
        for i in 0..1000 {
            let lvl = grid_sample_dr(&mut rng, GridKind::Lava, &cfg, LevelId(i)).unwrap();
            assert_eq!(lvl.as_grid().unwrap().1.obstacle_count(), 0);
        }
    }

    #[test]
    fn agent_never_on_goal() {
        let mut rng = Rng::new(5, 0);
        let cfg = GridGenConfig::lava();
        for i in 0..100_000 {
            let lvl = grid_sample_dr(&mut rng, GridKind::Lava, &cfg, LevelId(i)).unwrap();
            let (_, g) = lvl.as_grid().unwrap();
            assert_ne!(g.agent, g.goal);
        }
    }

    #[test]
    fn range_too_large() {
        let cfg = GridGenConfig { width: 3, height: 3, min_obstacles: 0, max_obstacles: 8 };
        assert!(grid_sample_dr(&mut Rng::new(0, 0), GridKind::Maze, &cfg, LevelId(0)).is_err());
    }

    fn corridor_stats(g: &GridPayload) -> (usize, usize) {
        let open: Vec<usize> = (0..g.cells.len()).filter(|&i| !g.cells[i].is_obstacle()).collect();
        let mut edges = 0;
        for &c in &open {
            for delta in [(1, 0), (0, 1)] {
                if let Some(n) = g.offset(c, delta) {
                    if !g.cells[n].is_obstacle() {
                        edges += 1;
                    }
                }
            }
        }
        (open.len(), edges)
    }

    #[test]
    fn perfect_maze_is_a_spanning_tree() {
        let mut rng = Rng::new(6, 0);
        for (i, (w, h)) in [(5, 5), (7, 9), (15, 15), (21, 11)].into_iter().enumerate() {
            for j in 0..20 {
                let lvl = perfect_maze(&mut rng, w, h, LevelId((i * 100 + j) as u64)).unwrap();
                let (kind, g) = lvl.as_grid().unwrap();
                assert!(bfs(kind, g).is_some());
                let (open, edges) = corridor_stats(g);
                assert_eq!(open - 1, edges, "{w}x{h} has a cycle");
                assert_eq!(open, (w - 1) / 2 * ((h - 1) / 2) * 2 - 1);
            }
        }
    }

    #[test]
    fn perfect_maze_51_round_trips() {
        let lvl = perfect_maze(&mut Rng::new(7, 0), 51, 51, LevelId(9)).unwrap();
        assert_eq!(decode_level(&encode_level(&lvl)).unwrap(), lvl);
    }

    #[test]
    fn perfect_maze_rejects_even() {
        assert!(perfect_maze(&mut Rng::new(0, 0), 6, 7, LevelId(0)).is_err());
        assert!(perfect_maze(&mut Rng::new(0, 0), 3, 3, LevelId(0)).is_err());
    }
}

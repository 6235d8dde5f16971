use crate::buffer::BufferEntry;
use crate::env::LevelMetrics;
use crate::learner::UpdateStats;
use crate::terrain::DifficultyCategory;

pub const LOG_HEADER: &str = "iteration,update,replay,env_steps,train_episodes,mean_train_return,train_solved_rate,\
policy_loss,value_loss,entropy,buffer_size,buffer_mean_score,buffer_mean_obstacles,buffer_mean_shortest_path,\
buffer_solvable_frac,buffer_mean_generation,buffer_max_generation,frac_easy,frac_challenging,\
frac_very_challenging,frac_extremely_challenging";

/// Aggregates over the current buffer contents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BufferSummary {
    pub size: usize,
    pub mean_score: Option<f64>,
    pub mean_obstacles: Option<f64>,
    /// Over solvable grid levels.
    pub mean_shortest_path: Option<f64>,
    pub solvable_frac: Option<f64>,
    pub mean_generation: Option<f64>,
    pub max_generation: Option<u32>,
    /// Terrain only.
    pub categories: Option<[f64; 4]>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl BufferSummary {
    pub fn from_entries(entries: &[(&BufferEntry, LevelMetrics)]) -> Self {
        let n = entries.len();
        let is_terrain = entries.iter().any(|(_, m)| m.category.is_some());
        let categories = is_terrain.then(|| {
            let mut c = [0.0; 4];
            for (_, m) in entries {
                if let Some(cat) = m.category {
                    let i = DifficultyCategory::ALL.iter().position(|x| *x == cat).unwrap();
                    c[i] += 1.0 / n as f64;
                }
            }
            c
        });
        BufferSummary {
            size: n,
            mean_score: mean(entries.iter().map(|(e, _)| e.score.value())),
            mean_obstacles: mean(entries.iter().map(|(_, m)| m.obstacles as f64)),
            mean_shortest_path: if is_terrain {
                None
            } else {
                mean(entries.iter().filter_map(|(_, m)| m.shortest_path.map(|p| p as f64)))
            },
            solvable_frac: if is_terrain {
                None
            } else {
                mean(entries.iter().map(|(_, m)| if m.solvable { 1.0 } else { 0.0 }))
            },
            mean_generation: mean(entries.iter().map(|(e, _)| e.level.generation as f64)),
            max_generation: entries.iter().map(|(e, _)| e.level.generation).max(),
            categories,
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn row(
    iteration: u64,
    update: usize,
    replay: bool,
    env_steps: u64,
    train: &[(f64, bool)],
    stats: Option<&UpdateStats>,
    buffer: Option<&BufferSummary>,
) -> String {
    let mut cols = vec![
        iteration.to_string(),
        update.to_string(),
        (replay as u8).to_string(),
        env_steps.to_string(),
        train.len().to_string(),
        opt(mean(train.iter().map(|(r, _)| *r))),
        opt(mean(train.iter().map(|(_, s)| if *s { 1.0 } else { 0.0 }))),
        opt(stats.map(|s| s.policy_loss)),
        opt(stats.map(|s| s.value_loss)),
        opt(stats.map(|s| s.entropy)),
    ];
    match buffer {
        Some(b) => {
            cols.push(b.size.to_string());
            cols.push(opt(b.mean_score));
            cols.push(opt(b.mean_obstacles));
            cols.push(opt(b.mean_shortest_path));
            cols.push(opt(b.solvable_frac));
            cols.push(opt(b.mean_generation));
            cols.push(opt(b.max_generation));
            match b.categories {
                Some(c) => cols.extend(c.iter().map(|f| f.to_string())),
                None => cols.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        None => cols.extend(std::iter::repeat_n(String::new(), 11)),
    }
    cols.join(",")
}

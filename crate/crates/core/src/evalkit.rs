//! Held-out evaluation and robust aggregates.

use std::path::Path;

use crate::env::{rollout, ActionMode, Env, RolloutLength};
use crate::error::{Error, Result};
use crate::grid::perfect_maze;
use crate::learner::PolicyParams;
use crate::level::{decode_level, Level, LevelId};
use crate::rng::Rng;
use crate::terrain::{sample_extremely_challenging, TerrainMode};
use crate::trajectory::Origin;

pub const DEFAULT_EPISODES: usize = 100;

/// Resampled every episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Procedural {
    PerfectMaze { width: usize, height: usize },
    ExtremelyChallenging(TerrainMode),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevelSource {
    Fixed(Level),
    Procedural(Procedural),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub name: String,
    pub source: LevelSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    pub name: String,
    pub entries: Vec<SuiteEntry>,
    pub episodes: usize,
}

impl TestSuite {
    pub fn procedural(name: &str, generator: Procedural, episodes: usize) -> Self {
        TestSuite {
            name: name.to_string(),
            entries: vec![SuiteEntry { name: name.to_string(), source: LevelSource::Procedural(generator) }],
            episodes,
        }
    }

    pub fn fixed_levels(&self) -> impl Iterator<Item = (&str, &Level)> {
        self.entries.iter().filter_map(|e| match &e.source {
            LevelSource::Fixed(l) => Some((e.name.as_str(), l)),
            LevelSource::Procedural(_) => None,
        })
    }
}

/// Parse fixture text: one encoded level per line, each optionally preceded
/// by a `# name` line. Every bad line is reported.
pub fn parse_fixtures(name: &str, text: &str) -> Result<TestSuite> {
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    let mut pending: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            pending = Some(comment.trim().to_string());
            continue;
        }
        match decode_level(line).and_then(|l| l.validate().map(|_| l)) {
            Ok(level) => {
                let name = pending.take().unwrap_or_else(|| format!("level-{}", entries.len()));
                entries.push(SuiteEntry { name, source: LevelSource::Fixed(level) });
            }
            Err(e) => failures.push(format!("line {}: {e}", i + 1)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Validation(format!("fixture {name}: {}", failures.join("; "))));
    }
    if entries.is_empty() {
        return Err(Error::Validation(format!("fixture {name} holds no levels")));
    }
    Ok(TestSuite { name: name.to_string(), entries, episodes: DEFAULT_EPISODES })
}

pub fn load_fixtures(path: &Path) -> Result<TestSuite> {
    let text = std::fs::read_to_string(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("suite");
    parse_fixtures(name, &text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    pub ret: f64,
    pub solved: bool,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub name: String,
    pub episodes: Vec<EpisodeResult>,
    pub solved_rate: f64,
    pub solved_sem: f64,
    pub mean_return: f64,
    pub return_sem: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub suite: String,
    pub levels: Vec<LevelReport>,
    pub solved_rate: f64,
    pub solved_sem: f64,
    pub mean_return: f64,
    pub return_sem: f64,
}

/// Mean and standard error of the mean.
pub fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn summarize(name: String, episodes: Vec<EpisodeResult>) -> LevelReport {
    let solved: Vec<f64> = episodes.iter().map(|e| if e.solved { 1.0 } else { 0.0 }).collect();
    let rets: Vec<f64> = episodes.iter().map(|e| e.ret).collect();
    let (solved_rate, solved_sem) = mean_sem(&solved);
    let (mean_return, return_sem) = mean_sem(&rets);
    LevelReport { name, episodes, solved_rate, solved_sem, mean_return, return_sem }
}

/// Greedy rollouts, `suite.episodes` per entry, one rng stream per episode.
pub fn evaluate(params: &PolicyParams, env: &Env, suite: &TestSuite, seed: u64) -> Result<EvalReport> {
    evaluate_with(params, env, suite, seed, ActionMode::Greedy)
}

pub fn evaluate_with(
    params: &PolicyParams,
    env: &Env,
    suite: &TestSuite,
    seed: u64,
    mode: ActionMode,
) -> Result<EvalReport> {
    if params.arch.input_dim != env.obs_dim() {
        return Err(Error::ShapeMismatch { expected: env.obs_dim(), actual: params.arch.input_dim });
    }
    if suite.episodes == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let base = Rng::new(seed, 0);
    let mut levels = Vec::with_capacity(suite.entries.len());
    for (li, entry) in suite.entries.iter().enumerate() {
        let mut episodes = Vec::with_capacity(suite.episodes);
        for ep in 0..suite.episodes {
            let mut rng = base.split_path(&[li as u64, ep as u64]);
            let level = match &entry.source {
                LevelSource::Fixed(l) => l.clone(),
                LevelSource::Procedural(Procedural::PerfectMaze { width, height }) => {
                    perfect_maze(&mut rng, *width, *height, LevelId(ep as u64))?
                }
                LevelSource::Procedural(Procedural::ExtremelyChallenging(m)) => {
                    sample_extremely_challenging(&mut rng, *m, LevelId(ep as u64))
                }
            };
            let traj = rollout(env, params, &level, Origin::Generator, RolloutLength::Episodes(1), mode, &mut rng)?;
            let e = traj.episodes[0];
            episodes.push(EpisodeResult { ret: e.ret, solved: e.solved, length: e.length });
        }
        levels.push(summarize(entry.name.clone(), episodes));
    }
    let all: Vec<EpisodeResult> = levels.iter().flat_map(|l| l.episodes.iter().copied()).collect();
    let agg = summarize(suite.name.clone(), all);
    Ok(EvalReport {
        suite: suite.name.clone(),
        levels,
        solved_rate: agg.solved_rate,
        solved_sem: agg.solved_sem,
        mean_return: agg.mean_return,
        return_sem: agg.return_sem,
    })
}

/// Mean of the middle half of the sorted samples. Samples straddling the
/// quartile cut points count in proportion to the overlap.
pub fn iqm(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("iqm of an empty sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("iqm of a sample containing NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let (lo, hi) = (0.25 * n, 0.75 * n);
    let mut total = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let (a, b) = (i as f64, i as f64 + 1.0);
        let w = (b.min(hi) - a.max(lo)).max(0.0);
        total += w * x;
    }
    Ok(total / (hi - lo))
}

/// Mean shortfall below `optimum`, as a fraction of it.
pub fn optimality_gap(samples: &[f64], optimum: f64) -> Result<f64> {
    if !(optimum > 0.0) {
        return Err(Error::invalid(format!("optimum must be > 0, got {optimum}")));
    }
    if samples.is_empty() {
        return Err(Error::invalid("optimality gap of an empty sample"));
    }
    Ok(samples.iter().map(|s| (1.0 - s / optimum).max(0.0)).sum::<f64>() / samples.len() as f64)
}

/// CSV with one row per level plus an aggregate row.
pub fn report_csv(report: &EvalReport) -> String {
    let mut s = String::from("suite,level,episodes,solved_rate,solved_sem,mean_return,return_sem\n");
    for l in &report.levels {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            report.suite,
            l.name,
            l.episodes.len(),
            l.solved_rate,
            l.solved_sem,
            l.mean_return,
            l.return_sem
        ));
    }
    let total: usize = report.levels.iter().map(|l| l.episodes.len()).sum();
    s.push_str(&format!(
        "{},ALL,{},{},{},{},{}\n",
        report.suite, total, report.solved_rate, report.solved_sem, report.mean_return, report.return_sem
    ));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iqm_examples() {
        assert_eq!(iqm(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(iqm(&[7.0; 5]).unwrap(), 7.0);
        assert_eq!(iqm(&[3.0]).unwrap(), 3.0);
        assert!(iqm(&[]).is_err());
    }

    #[test]
    fn iqm_fractional_trim() {
        // n = 5: keep 3.75 samples' worth: 0.75 of x1, x2, x3, 0.75 of x4
        let v = iqm(&[0.0, 1.0, 2.0, 3.0, 100.0]).unwrap();
        assert!((v - (0.75 * 1.0 + 2.0 + 0.75 * 3.0) / 2.5).abs() < 1e-12);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(optimality_gap(&[300.0, 300.0], 300.0).unwrap(), 0.0);
        assert_eq!(optimality_gap(&[0.0, 0.0], 300.0).unwrap(), 1.0);
        assert_eq!(optimality_gap(&[150.0], 300.0).unwrap(), 0.5);
        assert_eq!(optimality_gap(&[400.0], 300.0).unwrap(), 0.0);
        assert!(optimality_gap(&[1.0], 0.0).is_err());
    }

    #[test]
    fn fixture_parsing_names_and_errors() {
        let suite = parse_fixtures("t", "# Tiny\nmaze-grid;0;-;0;A.......G\n\nmaze-grid;1;-;0;A.......G\n").unwrap();
        assert_eq!(suite.entries.len(), 2);
        assert_eq!(suite.entries[0].name, "Tiny");
        assert_eq!(suite.entries[1].name, "level-1");
        let err = parse_fixtures("t", "maze-grid;0;-;0;A.......G\nnonsense\nmaze-grid;x\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn csv_rows() {
        let suite = parse_fixtures("t", "maze-grid;0;-;0;A.......G\nmaze-grid;1;-;0;G.......A\n").unwrap();
        let env = Env::new(crate::env::EnvConfig::maze()).unwrap();
        let params = PolicyParams::zeros(env.architecture(&[4]));
        let report = evaluate(&params, &env, &TestSuite { episodes: 3, ..suite }, 0).unwrap();
        assert_eq!(report_csv(&report).lines().count(), 1 + 2 + 1);
    }
}

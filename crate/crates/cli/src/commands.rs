use std::path::{Path, PathBuf};

use ued::env::{Env, EnvConfig};
use ued::evalkit::{evaluate, load_fixtures, report_csv, Procedural, TestSuite};
use ued::learner::load_checkpoint;
use ued::terrain::{render_course, TerrainMode};
use ued::ued::{lineage, run_training};
use ued::{decode_level, Level, LevelId, LevelKind};

use crate::config::{resolve, RunConfig, SNAPSHOT_NAME};
use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn load_run_config(run: &Path) -> CliResult<RunConfig> {
    let path = run.join(SNAPSHOT_NAME);
    resolve(&path.display().to_string(), &read(&path)?, &[])
}

pub fn train(config: Option<PathBuf>, seed: Option<u64>, overrides: &[String], out: Option<PathBuf>) -> CliResult<()> {
    let (source, text) = match &config {
        Some(p) => (p.display().to_string(), read(p)?),
        None => ("<defaults>".to_string(), String::new()),
    };
    let mut overrides = overrides.to_vec();
    if let Some(s) = seed {
        overrides.push(format!("ued.seed={s}"));
    }
    let resolved = resolve(&source, &text, &overrides)?;
    let dir = resolved.output_dir(out);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write(&dir.join(SNAPSHOT_NAME), &resolved.to_toml()?)?;

    let trainer = run_training(resolved.train_config(), Some(&dir))?;
    println!(
        "trained {} updates, {} env steps, artifacts in {}",
        trainer.updates(),
        trainer.env_steps(),
        dir.display()
    );
    for suite_path in &resolved.run.suites {
        let mut suite = load_fixtures(suite_path).map_err(|e| CliError::from(e).context(suite_path.display()))?;
        suite.episodes = resolved.run.eval_episodes;
        let report = evaluate(trainer.params(), trainer.env(), &suite, resolved.ued.seed)?;
        write(&dir.join(format!("eval_{}.csv", suite.name)), &report_csv(&report))?;
        print_report(&report);
    }
    Ok(())
}

/// Fixture file path, `perfect-maze:WxH` or `extreme:5d|8d`.
pub fn parse_suite(spec: &str, episodes: usize) -> CliResult<TestSuite> {
    if let Some(size) = spec.strip_prefix("perfect-maze:") {
        let (w, h) = size
            .split_once('x')
            .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
            .ok_or_else(|| CliError::config(format!("suite `{spec}`: expected perfect-maze:WxH")))?;
        return Ok(TestSuite::procedural(spec, Procedural::PerfectMaze { width: w, height: h }, episodes));
    }
    if let Some(mode) = spec.strip_prefix("extreme:") {
        let mode = match mode {
            "5d" => TerrainMode::Five,
            "8d" => TerrainMode::Eight,
            _ => return Err(CliError::config(format!("suite `{spec}`: expected extreme:5d or extreme:8d"))),
        };
        return Ok(TestSuite::procedural(spec, Procedural::ExtremelyChallenging(mode), episodes));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::runtime("E_NOT_FOUND", format!("suite {spec} does not exist")));
    }
    let mut suite = load_fixtures(path).map_err(|e| CliError::from(e).context(spec))?;
    suite.episodes = episodes;
    Ok(suite)
}

/// Environment matching the levels of a suite.
pub fn env_for_suite(suite: &TestSuite) -> CliResult<EnvConfig> {
    if let Some((_, level)) = suite.fixed_levels().next() {
        let kind = level.kind();
        if let Some((name, other)) = suite.fixed_levels().find(|(_, l)| l.kind() != kind) {
            return Err(CliError::config(format!(
                "suite mixes {} and {} levels ({name})",
                kind.as_str(),
                other.kind().as_str()
            )));
        }
        return match kind {
            LevelKind::Terrain => Ok(EnvConfig { terrain_mode: level.as_terrain()?.mode(), ..EnvConfig::terrain() }),
            LevelKind::LavaGrid | LevelKind::MazeGrid => {
                let (_, grid) = level.as_grid()?;
                let base = if kind == LevelKind::LavaGrid { EnvConfig::lava() } else { EnvConfig::maze() };
                let cap = (grid.width * grid.height).saturating_sub(2);
                Ok(EnvConfig {
                    width: grid.width,
                    height: grid.height,
                    min_obstacles: base.min_obstacles.min(cap),
                    max_obstacles: base.max_obstacles.min(cap),
                    ..base
                })
            }
        };
    }
    match suite.entries.first().map(|e| &e.source) {
        Some(ued::evalkit::LevelSource::Procedural(Procedural::PerfectMaze { .. })) => Ok(EnvConfig::maze()),
        Some(ued::evalkit::LevelSource::Procedural(Procedural::ExtremelyChallenging(m))) => {
            Ok(EnvConfig { terrain_mode: *m, ..EnvConfig::terrain() })
        }
        _ => Err(CliError::config("empty suite")),
    }
}

fn print_report(report: &ued::evalkit::EvalReport) {
    for l in &report.levels {
        println!(
            "{:<24} solved {:.3} ± {:.3}  return {:.3} ± {:.3}",
            l.name, l.solved_rate, l.solved_sem, l.mean_return, l.return_sem
        );
    }
    println!(
        "{:<24} solved {:.3} ± {:.3}  return {:.3} ± {:.3}",
        format!("{} (all)", report.suite),
        report.solved_rate,
        report.solved_sem,
        report.mean_return,
        report.return_sem
    );
}

pub fn eval(
    checkpoint: Option<PathBuf>,
    suite_spec: &str,
    run: Option<PathBuf>,
    episodes: usize,
    seed: u64,
    csv: Option<PathBuf>,
) -> CliResult<()> {
    if episodes == 0 {
        return Err(CliError::config("--episodes must be at least 1"));
    }
    let suite = parse_suite(suite_spec, episodes)?;
    let (env_config, checkpoint) = match (&run, checkpoint) {
        (Some(run), ck) => {
            let cfg = load_run_config(run)?;
            (cfg.env, ck.unwrap_or_else(|| run.join("checkpoints").join("final.ckpt")))
        }
        (None, Some(ck)) => (env_for_suite(&suite)?, ck),
        (None, None) => return Err(CliError::usage("eval needs --checkpoint or --run")),
    };
    if !checkpoint.exists() {
        return Err(CliError::runtime("E_NOT_FOUND", format!("checkpoint {} does not exist", checkpoint.display())));
    }
    let params = load_checkpoint(&checkpoint).map_err(|e| CliError::from(e).context(checkpoint.display()))?;
    let env = Env::new(env_config)?;
    let report = evaluate(&params, &env, &suite, seed)?;
    let csv = csv.unwrap_or_else(|| {
        let stem: String =
            suite.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
        checkpoint.with_file_name(format!("eval_{stem}.csv"))
    });
    write(&csv, &report_csv(&report))?;
    print_report(&report);
    Ok(())
}

pub fn inspect_buffer(run: &Path, at: &str) -> CliResult<()> {
    let path = run.join("checkpoints").join(format!("{at}.buffer.tsv"));
    if !path.exists() {
        let cfg = load_run_config(run)?;
        if cfg.ued.mode == ued::ued::Mode::Dr {
            return Err(CliError::runtime("E_NO_BUFFER", format!("{} ran in dr mode and keeps no buffer", run.display())));
        }
    }
    let text = read(&path)?;
    println!("level\tscore\tstaleness");
    print!("{text}");
    Ok(())
}

fn run_levels(run: &Path) -> CliResult<Vec<Level>> {
    let path = run.join("levels.txt");
    read(&path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| decode_level(l).map_err(|e| CliError::from(e).context(format!("{} line {}", path.display(), i + 1))))
        .collect()
}

pub fn inspect_lineage(run: &Path, id: u64) -> CliResult<()> {
    let levels = run_levels(run)?;
    for level in lineage(&levels, LevelId(id))? {
        println!("{}", level.encode());
    }
    Ok(())
}

fn render(level: &Level) -> CliResult<String> {
    Ok(match level.kind() {
        LevelKind::Terrain => render_course(level.as_terrain()?).to_csv(),
        LevelKind::LavaGrid | LevelKind::MazeGrid => level.as_grid()?.1.render(),
    })
}

pub fn render_arg(arg: &str, index: Option<usize>, name: Option<&str>) -> CliResult<()> {
    let path = Path::new(arg);
    let level = if path.is_file() {
        let suite = load_fixtures(path).map_err(|e| CliError::from(e).context(arg))?;
        let fixed: Vec<(&str, &Level)> = suite.fixed_levels().collect();
        let found = match (name, index) {
            (Some(n), _) => fixed.iter().find(|(ln, _)| *ln == n),
            (None, i) => fixed.get(i.unwrap_or(0)),
        };
        found
            .map(|(_, l)| (*l).clone())
            .ok_or_else(|| CliError::runtime("E_UNKNOWN_ID", format!("no such level in {arg}")))?
    } else {
        let level = decode_level(arg)?;
        level.validate()?;
        level
    };
    print!("{}", render(&level)?);
    Ok(())
}

pub fn render_run_level(run: &Path, id: u64) -> CliResult<()> {
    let levels = run_levels(run)?;
    let level = levels.iter().find(|l| l.id == LevelId(id)).ok_or(ued::Error::UnknownLevel(id))?;
    print!("{}", render(level)?);
    Ok(())
}

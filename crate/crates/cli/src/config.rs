//! Run configuration files.
//!
//! A config file holds any subset of the `[run]`, `[env]`, `[ppo]`, `[buffer]`,
//! `[ued]` and `[model]` tables. Missing keys come from the published preset
//! for `env.kind` and `ued.mode` (default lava / accel).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};
use ued::buffer::BufferConfig;
use ued::env::{EnvConfig, EnvKind};
use ued::learner::PpoConfig;
use ued::ued::{Mode, ModelConfig, TrainConfig, UedConfig};

use crate::error::{CliError, CliResult};

pub const OUTPUT_ROOT_VAR: &str = "UED_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";
pub const SNAPSHOT_NAME: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Fixture files evaluated after training.
    #[serde(default)]
    pub suites: Vec<PathBuf>,
    #[serde(default = "default_episodes")]
    pub eval_episodes: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { name: None, out_dir: None, suites: Vec::new(), eval_episodes: default_episodes() }
    }
}

fn default_episodes() -> usize {
    ued::evalkit::DEFAULT_EPISODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub buffer: BufferConfig,
    pub ued: UedConfig,
    pub model: ModelConfig,
}

impl RunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            env: self.env.clone(),
            ppo: self.ppo.clone(),
            buffer: self.buffer.clone(),
            ued: self.ued.clone(),
            model: self.model.clone(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.train_config().validate()?;
        if self.ued.seed > i64::MAX as u64 {
            return Err(CliError::config(format!("ued.seed must be at most {}", i64::MAX)));
        }
        if self.run.eval_episodes == 0 {
            return Err(CliError::config("run.eval_episodes must be at least 1"));
        }
        Ok(())
    }

    pub fn default_name(&self) -> String {
        self.run.name.clone().unwrap_or_else(|| {
            let kind = match self.env.kind {
                EnvKind::Lava => "lava",
                EnvKind::Maze => "maze",
                EnvKind::Terrain => "terrain",
            };
            format!("{kind}-{}-seed{}", self.ued.mode.as_str(), self.ued.seed)
        })
    }

    /// Explicit flag, then `run.out_dir`, then the output root.
    pub fn output_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.run.out_dir.clone()).unwrap_or_else(|| {
            let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from);
            root.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT)).join(self.default_name())
        })
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::config(format!("cannot serialize config: {e}")))
    }
}

/// Parse `key.path=value`. Values that are not TOML literals are taken as strings.
pub fn parse_override(spec: &str) -> CliResult<(Vec<String>, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{spec}` is not key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("override `{spec}` has an empty key segment")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((path, value))
}

fn set_path(table: &mut Table, path: &[String], value: Value) -> CliResult<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for (i, p) in parents.iter().enumerate() {
        let entry = cur.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("`{}` is not a table", path[..=i].join("."))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn selector<T: for<'de> Deserialize<'de>>(table: &Table, section: &str, key: &str, default: T) -> CliResult<T> {
    match table.get(section).and_then(|s| s.get(key)) {
        None => Ok(default),
        Some(v) => v
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(format!("{section}.{key}: {}", e.message()))),
    }
}

fn syntax_error(source: &str, text: &str, e: &toml::de::Error) -> CliError {
    let location = e.span().map(|span| {
        let line_no = text[..span.start].matches('\n').count() + 1;
        let section = text[..span.start]
            .lines()
            .rev()
            .find_map(|l| l.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')).map(str::to_string));
        let line = text.lines().nth(line_no - 1).unwrap_or("").trim().to_string();
        match section {
            Some(s) => format!("line {line_no} in [{s}] `{line}`"),
            None => format!("line {line_no} `{line}`"),
        }
    });
    match location {
        Some(loc) => CliError::config(format!("{source}: {loc}: {}", e.message())),
        None => CliError::config(format!("{source}: {}", e.message())),
    }
}

/// Resolve config text plus overrides into a validated config.
pub fn resolve(source: &str, text: &str, overrides: &[String]) -> CliResult<RunConfig> {
    let mut user: Table = toml::from_str(text).map_err(|e| syntax_error(source, text, &e))?;
    for spec in overrides {
        let (path, value) = parse_override(spec)?;
        set_path(&mut user, &path, value)?;
    }
    let kind = selector(&user, "env", "kind", EnvKind::Lava)?;
    let mode = selector(&user, "ued", "mode", Mode::Accel)?;
    let preset = TrainConfig::preset(kind, mode);
    let mut merged = match Value::try_from(&preset) {
        Ok(Value::Table(t)) => t,
        _ => return Err(CliError::config("preset does not serialize to a table")),
    };
    merge(&mut merged, user);
    let rendered = toml::to_string(&merged).map_err(|e| CliError::config(e.to_string()))?;
    let config: RunConfig = toml::from_str(&rendered).map_err(|e| syntax_error(source, &rendered, &e))?;
    config.validate().map_err(|e| e.context(source))?;
    Ok(config)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;

use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ued", version, about = "Regret-based environment design: train, evaluate, inspect")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a student under DR, PLR or ACCEL.
    Train {
        /// TOML config; omitted keys come from the preset for env.kind and ued.mode.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// `section.key=value`, applied after the config file.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Defaults to `run.out_dir`, else `$UED_OUTPUT_ROOT/<run name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy evaluation of a checkpoint on a test suite.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Fixture file, `perfect-maze:WxH` or `extreme:5d|8d`.
        #[arg(long)]
        suite: String,
        /// Run directory; supplies the environment and `checkpoints/final.ckpt`.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, default_value_t = ued::evalkit::DEFAULT_EPISODES)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to `eval_<suite>.csv` beside the checkpoint.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Look inside a run directory or a level.
    Inspect {
        #[command(subcommand)]
        what: Inspect,
    },
}

#[derive(Debug, Subcommand)]
enum Inspect {
    /// Buffer snapshot table.
    Buffer {
        #[arg(long)]
        run: PathBuf,
        /// Checkpoint name, e.g. `final` or `update_000300`.
        #[arg(long, default_value = "final")]
        at: String,
    },
    /// Ancestor chain of a level, newest first.
    Lineage {
        #[arg(long)]
        run: PathBuf,
        id: u64,
    },
    /// Text-art grid or terrain heightfield CSV.
    Render {
        /// Encoded level, or a fixture file.
        level: Option<String>,
        #[arg(long)]
        index: Option<usize>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, requires = "id")]
        run: Option<PathBuf>,
        #[arg(long, requires = "run")]
        id: Option<u64>,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { config, seed, overrides, out } => commands::train(config, seed, &overrides, out),
        Command::Eval { checkpoint, suite, run, episodes, seed, csv } => {
            commands::eval(checkpoint, &suite, run, episodes, seed, csv)
        }
        Command::Inspect { what } => match what {
            Inspect::Buffer { run, at } => commands::inspect_buffer(&run, &at),
            Inspect::Lineage { run, id } => commands::inspect_lineage(&run, id),
            Inspect::Render { level, index, name, run, id } => match (level, run, id) {
                (Some(level), None, None) => commands::render_arg(&level, index, name.as_deref()),
                (None, Some(run), Some(id)) => commands::render_run_level(&run, id),
                _ => Err(CliError::usage("render takes either a level/fixture or --run with --id")),
            },
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", CliError::usage(first.trim_start_matches("error: ")));
            return ExitCode::from(error::EXIT_CONFIG as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit as u8)
        }
    }
}

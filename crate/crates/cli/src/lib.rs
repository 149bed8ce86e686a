//! Configuration-driven front end: runs one experiment per process and writes
//! CSV tables plus a JSON summary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use commands::Command;
pub use config::{ConfigError, RunConfig};
pub use error::CliError;
use output::OutputDir;

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "TRIBODY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "tribody", version, about = "Three-body resolvent experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Run one experiment.
    Run {
        #[arg(value_enum)]
        command: Command,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Check a configuration without computing anything.
    Validate {
        #[command(flatten)]
        opts: RunOptions,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    /// Configuration file (alternative to --config).
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    pub config_positional: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed, overriding `seed`.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N", env = THREADS_ENV)]
    pub threads: Option<usize>,
}

impl RunOptions {
    fn config_path(&self) -> Result<&PathBuf, CliError> {
        self.config.as_ref().or(self.config_positional.as_ref()).ok_or_else(|| {
            CliError::Config(ConfigError::Schema { field: "--config".into(), message: "no configuration file given".into() })
        })
    }

    /// The file's configuration with the command-line overrides applied.
    pub fn effective_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(self.config_path()?)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Serialize)]
struct Versions {
    tribody_cli: &'static str,
    tribody_core: &'static str,
}

#[derive(Debug, Serialize)]
struct Stage {
    name: String,
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct Timings {
    total_seconds: f64,
    stages: Vec<Stage>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    command: &'static str,
    status: &'static str,
    versions: Versions,
    config: &'a RunConfig,
    threads: usize,
    timings: Timings,
    artifacts: Vec<String>,
    results: serde_json::Map<String, serde_json::Value>,
}

/// Paths written by a run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: PathBuf,
    pub tables: Vec<PathBuf>,
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(ConfigError::Schema { field: "--threads".into(), message: "must be at least 1".into() }.into());
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs `command` and writes its artifacts.
pub fn execute(command: Command, opts: &RunOptions) -> Result<RunArtifacts, CliError> {
    configure_threads(opts.threads)?;
    let cfg = opts.effective_config()?;
    let start = Instant::now();
    let outcome = commands::run(command, &cfg)?;
    let dir = OutputDir::new(cfg.output_dir.clone());
    let mut tables = Vec::new();
    for t in &outcome.tables {
        tables.push(dir.write_table(t)?);
    }
    let summary = Summary {
        command: command.name(),
        status: "ok",
        versions: Versions { tribody_cli: env!("CARGO_PKG_VERSION"), tribody_core: tribody_core::VERSION },
        config: &cfg,
        threads: rayon::current_num_threads(),
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
            stages: outcome.stages.into_iter().map(|(name, seconds)| Stage { name, seconds }).collect(),
        },
        artifacts: outcome.tables.iter().map(|t| t.file_name()).collect(),
        results: outcome.results,
    };
    let summary = dir.write_json(&format!("{}_summary.json", command.name()), &summary)?;
    Ok(RunArtifacts { summary, tables })
}

/// Validation report: the normalized configuration as pretty JSON.
pub fn validate(opts: &RunOptions) -> Result<String, CliError> {
    let cfg = opts.effective_config()?;
    serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Output(e.to_string()))
}

/// Entry point shared by the binary; returns the exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match &cli.action {
        Action::Run { command, opts } => execute(*command, opts).map(|a| {
            println!("{} ok: {}", command.name(), a.summary.display());
        }),
        Action::Validate { opts } => validate(opts).map(|echo| {
            println!("ok");
            println!("{echo}");
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Config(ConfigError::Invalid(list)) => {
                    eprintln!("error: invalid configuration");
                    for f in list {
                        eprintln!("  {}: {}", f.field, f.message);
                    }
                }
                other => eprintln!("error: {other}"),
            }
            e.exit_code()
        }
    }
}

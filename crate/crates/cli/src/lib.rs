//! Configuration-driven runner for the `coarse-core` checks.
//!
//! Every run writes a JSON report (schema [`output::SCHEMA`]) embedding the
//! resolved configuration, plus CSV tables. Exit status: `0` when every
//! assertion passes, `1` when one fails, `2` for configuration or budget
//! errors.

pub mod commands;
pub mod config;
pub mod output;

use std::process::ExitCode;

pub use config::{Command, ExperimentConfig, RawConfig};
pub use output::Outcome;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] coarse_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(2)
    }
}

/// Runs the configured command and writes its reports.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sections = match cfg.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("workers: {e}")))?;
            pool.install(|| commands::sections(cfg))?
        }
        None => commands::sections(cfg)?,
    };
    output::write(cfg, &sections)
}

pub fn exit_code(outcome: &Outcome) -> ExitCode {
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

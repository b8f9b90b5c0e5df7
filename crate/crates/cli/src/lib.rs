//! Command-line harness around the `collisional` library: JSON
//! configuration, the experiment subcommands and CSV/JSON output.

pub mod args;
pub mod commands;
pub mod config;
mod error;
pub mod table;

pub use args::{Cli, Command};
pub use commands::Report;
pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use table::ResultTable;

/// Run one command inside a pool of `cfg.threads` workers (the global pool
/// when unset). The command's own flags are applied to a copy of `cfg`
/// before it is validated.
pub fn execute(command: &Command, cfg: &ExperimentConfig) -> Result<Report> {
    let mut owned = cfg.clone();
    command.apply_overrides(&mut owned);
    owned.validate()?;
    let cfg = &owned;
    let job = || match command {
        Command::MapCheck => commands::map_check(cfg),
        Command::Trajectory { .. } => commands::trajectory(cfg),
        Command::Steady { .. } => commands::steady(cfg),
        Command::Sweep => commands::sweep(cfg),
        Command::Estimate { .. } => commands::estimate(cfg),
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?
            .install(job),
        None => job(),
    }
}

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{BackendChoice, ExperimentConfig};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "collisional", version, about = "Collisional reservoir experiments: maps, trajectories, steady states")]
pub struct Cli {
    /// JSON configuration (a previous output's JSON mirror also works).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// CSV destination; the JSON mirror goes next to it with a `.json`
    /// extension. Without it the CSV is printed to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for map builds, sweeps and ensembles.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendChoice>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build the collision map and report its quality diagnostics.
    MapCheck,
    /// Sample a trajectory or an ensemble mean under Poissonian collisions.
    Trajectory {
        #[arg(long)]
        gamma: Option<f64>,
        /// Apply full dephasing after every collision.
        #[arg(long)]
        dephase: bool,
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Steady state of the averaged master equation.
    Steady {
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Steady states over the configured (delta, dx, gamma) grid.
    Sweep,
    /// Order-of-magnitude coherence estimate over the sweep grid.
    Estimate {
        /// Also solve the steady state at every grid point.
        #[arg(long)]
        compare_exact: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::MapCheck => "map-check",
            Command::Trajectory { .. } => "trajectory",
            Command::Steady { .. } => "steady",
            Command::Sweep => "sweep",
            Command::Estimate { .. } => "estimate",
        }
    }

    /// Write the subcommand's own flags into `cfg`.
    pub fn apply_overrides(&self, cfg: &mut ExperimentConfig) {
        match self {
            Command::Trajectory { gamma, dephase, trajectories } => {
                if let Some(g) = gamma {
                    cfg.run.gamma = *g;
                }
                if *dephase {
                    cfg.run.dephase = true;
                }
                if let Some(n) = trajectories {
                    cfg.run.trajectories = *n;
                }
            }
            Command::Steady { gamma: Some(g) } => {
                cfg.run.gamma = *g;
                cfg.run.gamma_grid = None;
            }
            Command::Estimate { compare_exact: true } => cfg.estimate.compare_exact = true,
            _ => {}
        }
    }
}

impl Cli {
    /// Config file (or defaults) with command-line overrides applied, validated.
    pub fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if let Some(b) = self.backend {
            cfg.map.backend = b;
        }
        self.command.apply_overrides(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

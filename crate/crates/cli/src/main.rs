//! `parkodo`: simulate, calibrate, filter and evaluate low-speed lateral
//! velocity models from the command line.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 when a
//! numerical routine fails.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use parkodo_core::config::ModelName;

#[derive(Debug, Parser)]
#[command(name = "parkodo", version, about = "Lateral-velocity models for parking odometry")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for all sensor noise; overrides `noise.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `paths.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Lateral model: zero-slip, delta-beta or omega-vy.
    #[arg(long, global = true)]
    pub model: Option<ModelName>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    OmegaVy,
    DeltaBeta,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate truth and synthetic sensors for a scenario.
    Simulate {
        /// Scenario file; falls back to the `[scenario]` section of the config.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Estimate the zero-side-slip offset per driving direction.
    Calibrate {
        /// Log directory written by `simulate`.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        variant: VariantArg,
    },
    /// Run the localization filter over a log.
    Filter {
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Closed-form drift on a circle driven with a wrong offset.
    Disturb {
        /// Offset error [m].
        #[arg(long, default_value_t = 0.21, allow_hyphen_values = true)]
        delta_x: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        vx: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        yaw_rate: f64,
        #[arg(long, default_value_t = 360.0)]
        turn_angle_deg: f64,
        #[arg(long, default_value_t = 360)]
        steps: usize,
    },
    /// Compare the zero-slip baseline with `--model` over one or more logs.
    Evaluate {
        #[arg(long = "log", required = true)]
        logs: Vec<PathBuf>,
    },
    /// Render tables and charts from a stored comparison.
    Report {
        /// `comparison.json`, or a directory written by `evaluate`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "zero-slip")]
        baseline: String,
        #[arg(long, default_value = "omega-vy")]
        candidate: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

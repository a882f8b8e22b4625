//! Command-line driver: `oqe simulate | tomography | reconstruct | fig3 | fig4`.
//!
//! Exit codes: 0 success, 2 invalid configuration or input, 3 environment
//! bound too small, 4 optimization diverged, 5 I/O failure.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use oqe_core::OqeError;
use thiserror::Error;

use config::{CommonArgs, Defaults};
use oqe_core::oqe::InitKind;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] OqeError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 5,
            CliError::Core(e) => match e {
                OqeError::EnvBoundTooSmall { .. } => 3,
                OqeError::OptimizationDiverged { .. } => 4,
                OqeError::Io(_) => 5,
                OqeError::Validation(_)
                | OqeError::Domain(_)
                | OqeError::Shape(_)
                | OqeError::Format(_)
                | OqeError::StepMismatch { .. }
                | OqeError::HorizonTooShort { .. }
                | OqeError::ContractViolation(_)
                | OqeError::Resource { .. } => 2,
                OqeError::NumericalFailure { .. } | OqeError::DegeneratePolar { .. } => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "oqe", version, about = "Hidden open-quantum-evolution models and purified process tensors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random model and write it with its k-step PPT.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reconstruct the PPT of a model file by disentangling tomography.
    Tomography {
        /// Model file written by `simulate`.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit a unitary model to a PPT file.
    Reconstruct {
        /// PPT file written by `simulate` or `tomography`.
        #[arg(long)]
        ppt: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Extrapolation infidelity of time-independent fits.
    Fig3 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Memory size and complexity sweeps with their predicted limits.
    Fig4 {
        #[command(flatten)]
        common: CommonArgs,
    },
}

const SIMULATE: Defaults = Defaults { k: 6, init: InitKind::Separable, horizon: 20 };
const FIG3: Defaults = Defaults { k: 3, init: InitKind::Separable, horizon: 20 };
const FIG4: Defaults = Defaults { k: 3, init: InitKind::Pure, horizon: 80 };

pub fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = common.resolve(SIMULATE)?;
            commands::cmd_simulate(&cfg, &common.output)
        }
        Command::Tomography { model, common } => {
            let (m, _) = oqe_core::io::read_model::<f64>(&model)?;
            let mut o = common.overrides.clone();
            o.d = o.d.or(Some(m.sys_dim));
            o.env = o.env.or(Some(m.env_dim));
            let cfg = CommonArgs { overrides: o, ..common.clone() }.resolve(SIMULATE)?;
            if (cfg.d, cfg.env) != (m.sys_dim, m.env_dim) {
                return Err(CliError::Config(format!(
                    "model has d = {}, D = {} but the configuration asks for d = {}, D = {}",
                    m.sys_dim, m.env_dim, cfg.d, cfg.env
                )));
            }
            commands::cmd_tomography(&cfg, &m, &common.output)
        }
        Command::Reconstruct { ppt, common } => {
            let (p, _) = oqe_core::io::read_ppt::<f64>(&ppt)?;
            let cfg = common.resolve(SIMULATE)?;
            commands::cmd_reconstruct(&cfg, &p, &common.output, common.timing)
        }
        Command::Fig3 { common } => {
            let cfg = common.resolve(FIG3)?;
            if cfg.mode != oqe_core::reconstruction::FitMode::TimeIndependent {
                return Err(CliError::Config("fig3 fits time-independent models only".into()));
            }
            commands::cmd_fig3(&cfg, &common.output, common.timing)
        }
        Command::Fig4 { common } => {
            let cfg = common.resolve(FIG4)?;
            commands::cmd_fig4(&cfg, &common.output, common.timing)
        }
    }
}

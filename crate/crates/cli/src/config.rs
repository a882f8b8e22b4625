//! Experiment configuration: defaults, an optional JSON config file and
//! command-line flags, merged in that order.

use std::path::{Path, PathBuf};

use clap::Args;
use oqe_core::oqe::InitKind;
use oqe_core::reconstruction::FitMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every field is optional; unset fields fall back to the command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// System dimension d.
    #[arg(long)]
    pub d: Option<usize>,
    /// Environment dimension D.
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub env: Option<usize>,
    /// Number of steps k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Coupling strength of the random unitaries exp(iηH).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rényi order of the memory complexity.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Initial state: separable, pure or mixed.
    #[arg(long)]
    pub init: Option<InitKind>,
    /// Depolarizing noise of the tomography oracle.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Last step of a sweep.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// time-dependent or time-independent.
    #[arg(long)]
    pub mode: Option<FitMode>,
    /// Fit horizons of the extrapolation curves, comma separated.
    #[arg(long = "fit-k", value_delimiter = ',')]
    pub fit_k: Option<Vec<usize>>,
    /// Environment bound used by tomography (defaults to D).
    #[arg(long = "d-bound")]
    pub d_bound: Option<usize>,
    /// Number of extra random starts per fit.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Window length m of extrapolated process tensors.
    #[arg(long)]
    pub window: Option<usize>,
}

impl Overrides {
    /// Fields set in `other` replace those of `self`.
    pub fn merge(self, other: Overrides) -> Overrides {
        Overrides {
            d: other.d.or(self.d),
            env: other.env.or(self.env),
            k: other.k.or(self.k),
            eta: other.eta.or(self.eta),
            seed: other.seed.or(self.seed),
            gamma: other.gamma.or(self.gamma),
            init: other.init.or(self.init),
            epsilon: other.epsilon.or(self.epsilon),
            horizon: other.horizon.or(self.horizon),
            mode: other.mode.or(self.mode),
            fit_k: other.fit_k.or(self.fit_k),
            d_bound: other.d_bound.or(self.d_bound),
            restarts: other.restarts.or(self.restarts),
            window: other.window.or(self.window),
        }
    }

    pub fn from_file(path: &Path) -> Result<Overrides, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved configuration, embedded in every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: usize,
    #[serde(rename = "D")]
    pub env: usize,
    pub k: usize,
    pub eta: f64,
    pub seed: u64,
    pub gamma: f64,
    pub init: InitKind,
    pub epsilon: f64,
    pub horizon: usize,
    pub mode: FitMode,
    pub fit_k: Vec<usize>,
    pub d_bound: usize,
    pub restarts: usize,
    pub window: usize,
}

/// Per-command defaults.
#[derive(Clone, Copy, Debug)]
pub struct Defaults {
    pub k: usize,
    pub init: InitKind,
    pub horizon: usize,
}

impl ExperimentConfig {
    pub fn resolve(o: Overrides, defaults: Defaults) -> Result<Self, CliError> {
        let env = o.env.unwrap_or(5);
        let cfg = ExperimentConfig {
            d: o.d.unwrap_or(2),
            env,
            k: o.k.unwrap_or(defaults.k),
            eta: o.eta.unwrap_or(0.1),
            seed: o.seed.unwrap_or(0),
            gamma: o.gamma.unwrap_or(1.0),
            init: o.init.unwrap_or(defaults.init),
            epsilon: o.epsilon.unwrap_or(0.0),
            horizon: o.horizon.unwrap_or(defaults.horizon),
            mode: o.mode.unwrap_or(FitMode::TimeIndependent),
            fit_k: o.fit_k.unwrap_or_else(|| vec![2, 3]),
            d_bound: o.d_bound.unwrap_or(env),
            restarts: o.restarts.unwrap_or(0),
            window: o.window.unwrap_or(3),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        if self.d < 2 {
            problems.push(format!("d must be at least 2, got {}", self.d));
        }
        if self.env < 1 {
            problems.push("D must be at least 1".to_string());
        }
        if self.d_bound < 1 {
            problems.push("d-bound must be at least 1".to_string());
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            problems.push(format!("eta must be a finite non-negative number, got {}", self.eta));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            problems.push(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            problems.push(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.fit_k.is_empty() || self.fit_k.contains(&0) {
            problems.push("fit-k needs at least one positive horizon".to_string());
        }
        if self.window < 1 {
            problems.push("window must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Options shared by every subcommand.
#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// JSON config file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    /// Record wall-clock timings (outputs are then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
}

impl CommonArgs {
    pub fn resolve(&self, defaults: Defaults) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        ExperimentConfig::resolve(base.merge(self.overrides.clone()), defaults)
    }
}

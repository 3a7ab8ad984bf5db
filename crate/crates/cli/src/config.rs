use std::path::PathBuf;

use clap::Args;
use noise_reversal::{BoundaryPolicy, BudgetPolicy, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    #[default]
    Exact,
    OffPeriod,
}

/// Everything a denoise run needs, loadable from `--config file.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub solver: SolverConfig,
    /// Overrides `solver.seed` when present.
    pub seed: Option<u64>,
    pub boundary: BoundaryPolicy,
    /// Switches 1D frames to blocked mode.
    pub block_size: Option<usize>,
    pub passes: usize,
    pub sweeps: usize,
    pub budget_policy: BudgetPolicy,
    pub cross_column_weight: f64,
    pub budget_mode: BudgetMode,
    pub noise_total: Option<u64>,
    /// Corruption sidecar supplying the exact total, or λ for off-period mode.
    pub meta: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub off_period_samples: usize,
    pub hardware_profile_check: bool,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub pgm: Option<PathBuf>,
    pub dump_energy: Option<PathBuf>,
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            solver: SolverConfig::default(),
            seed: None,
            boundary: BoundaryPolicy::Interior,
            block_size: None,
            passes: 2,
            sweeps: 3,
            budget_policy: BudgetPolicy::Proportional,
            cross_column_weight: 1.0,
            budget_mode: BudgetMode::Exact,
            noise_total: None,
            meta: None,
            lambda: None,
            off_period_samples: 100,
            hardware_profile_check: false,
            input: None,
            output: None,
            pgm: None,
            dump_energy: None,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = self.solver.clone();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.solver.validate()?;
        if self.passes == 0 {
            return Err(CliError::usage("passes must be at least 1"));
        }
        if self.sweeps == 0 {
            return Err(CliError::usage("sweeps must be at least 1"));
        }
        if let Some(b) = self.block_size {
            if b < noise_reversal::pipeline::MIN_BLOCK {
                return Err(CliError::usage(format!(
                    "block size {b} is below the minimum of {}",
                    noise_reversal::pipeline::MIN_BLOCK
                )));
            }
        }
        if !(self.cross_column_weight.is_finite() && self.cross_column_weight >= 0.0) {
            return Err(CliError::usage("cross-column weight must be finite and nonnegative"));
        }
        if self.budget_mode == BudgetMode::OffPeriod && self.off_period_samples == 0 {
            return Err(CliError::usage("off-period estimation needs at least one sample"));
        }
        if self.budget_mode == BudgetMode::Exact && self.noise_total.is_some() && self.meta.is_some() {
            return Err(CliError::usage("give either a noise total or a meta file, not both"));
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(CliError::usage("lambda must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// Pipeline and solver flags shared by `denoise` and `sweep`. Each one, when
/// given, overrides the loaded configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// JSON experiment configuration; unknown keys are rejected
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge treatment: interior or periodic
    #[arg(long)]
    pub boundary: Option<BoundaryPolicy>,
    /// Solve 1D frames in blocks of this many pixels
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Shifted-block passes in blocked mode
    #[arg(long)]
    pub passes: Option<usize>,
    /// Column sweeps for 2D images
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Budget split across blocks or columns: uniform or proportional
    #[arg(long)]
    pub budget_policy: Option<BudgetPolicy>,
    /// Weight of the cross-column term for 2D images
    #[arg(long)]
    pub cross_weight: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Check results against the 5000-mode / 100-photon hardware profile
    #[arg(long)]
    pub hardware_check: bool,
    /// Include wall-clock times in reports (makes reruns differ)
    #[arg(long)]
    pub record_timing: bool,
}

impl PipelineArgs {
    pub fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => crate::files::read_json(path)?,
            None => ExperimentConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.boundary {
            cfg.boundary = v;
        }
        if let Some(v) = self.block_size {
            cfg.block_size = Some(v);
        }
        if let Some(v) = self.passes {
            cfg.passes = v;
        }
        if let Some(v) = self.sweeps {
            cfg.sweeps = v;
        }
        if let Some(v) = self.budget_policy {
            cfg.budget_policy = v;
        }
        if let Some(v) = self.cross_weight {
            cfg.cross_column_weight = v;
        }
        if let Some(v) = self.restarts {
            cfg.solver.restarts = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.solver.max_iterations = v;
        }
        if let Some(v) = self.step_size {
            cfg.solver.step_size = v;
        }
        cfg.hardware_profile_check |= self.hardware_check;
        cfg.record_timing |= self.record_timing;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"sweeps": 2, "bogus": 1}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"solver": {"restart": 2}}"#);
        assert!(err.is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"seed": 9, "solver": {"restarts": 4}, "boundary": "periodic"}"#)
                .unwrap();
        assert_eq!(cfg.solver.restarts, 4);
        assert_eq!(cfg.solver_config().seed, 9);
        assert_eq!(cfg.boundary, BoundaryPolicy::Periodic);
        assert_eq!(cfg.sweeps, 3);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_values() {
        let cfg = ExperimentConfig {
            block_size: Some(3),
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            noise_total: Some(3),
            meta: Some("x.json".into()),
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}

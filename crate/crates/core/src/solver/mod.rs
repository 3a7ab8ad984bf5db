//! Minimizers for [`SumConstrainedPolynomial`] over nonnegative integer
//! assignments with a fixed total.
//!
//! The main entry point is [`mean_field_solve`], a restarted multiplicative
//! mirror-descent emulation of a photon loop followed by rounding and integer
//! hill climbing. [`brute_force`] enumerates every weak composition and serves
//! as the exact oracle on small instances.

mod brute_force;
mod local_search;
mod mean_field;
mod rounding;

pub use brute_force::{brute_force, composition_count, BruteForceResult, DEFAULT_BRUTE_FORCE_CAP};
pub use local_search::{integer_local_search, is_locally_optimal};
pub use mean_field::mean_field_solve;
pub use rounding::{largest_remainder, round_to_integers};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::SumConstrainedPolynomial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Mirror-descent step size.
    pub step_size: f64,
    /// Initial log-domain noise amplitude.
    pub noise_initial: f64,
    /// Geometric decay factor applied to the noise amplitude every iteration.
    pub noise_decay: f64,
    /// Relative energy change that counts as converged.
    pub convergence_tol: f64,
    /// Iterations between the energies compared for convergence.
    pub convergence_window: usize,
    pub seed: u64,
    /// Cap on improving unit moves after rounding; `None` means `10 · P`.
    pub local_search_moves: Option<usize>,
    pub dirichlet_concentration: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            restarts: 32,
            max_iterations: 2000,
            step_size: 1.0,
            noise_initial: 0.2,
            noise_decay: 0.995,
            convergence_tol: 1e-9,
            convergence_window: 50,
            seed: 0,
            local_search_moves: None,
            dirichlet_concentration: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("solver config: {what}")));
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        if !(self.noise_initial.is_finite() && self.noise_initial >= 0.0) {
            return bad("noise_initial must be nonnegative");
        }
        if !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return bad("noise_decay must lie in (0, 1]");
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return bad("convergence_tol must be nonnegative");
        }
        if self.convergence_window == 0 {
            return bad("convergence_window must be positive");
        }
        if !(self.dirichlet_concentration.is_finite() && self.dirichlet_concentration > 0.0) {
            return bad("dirichlet_concentration must be positive");
        }
        Ok(())
    }

    pub(crate) fn moves_for(&self, num_vars: usize) -> usize {
        self.local_search_moves.unwrap_or(10 * num_vars)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartStats {
    /// Energy of the restart's integer result; `None` when the restart aborted.
    pub final_energy: Option<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub best: Vec<u64>,
    pub best_energy: f64,
    pub per_restart: Vec<RestartStats>,
    /// Continuous energy per iteration of the winning restart.
    pub energy_trace: Vec<f64>,
    pub wall_time: f64,
    pub seed: u64,
}

impl SolveReport {
    /// Index of the winning restart, if any restart ran.
    pub fn best_restart(&self) -> Option<usize> {
        self.per_restart
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.final_energy.map(|e| (i, e)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    }

    /// `iteration,energy` lines with a header row.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,energy\n");
        for (i, e) in self.energy_trace.iter().enumerate() {
            s.push_str(&format!("{i},{e}\n"));
        }
        s
    }
}

pub(crate) fn check_feasible(poly: &SumConstrainedPolynomial, x: &[u64]) -> Result<()> {
    if x.len() != poly.num_vars {
        return Err(Error::DimensionMismatch {
            expected: poly.num_vars,
            actual: x.len(),
        });
    }
    let total: u64 = x.iter().sum();
    if total != poly.sum_budget {
        return Err(Error::Infeasible(format!(
            "assignment sums to {total}, budget is {}",
            poly.sum_budget
        )));
    }
    Ok(())
}

//! Noise reversal for photon-counting measurements.
//!
//! Given measured counts `M_i` and a known total of background photons `N`,
//! find the per-pixel noise `N_i ≥ 0` with `Σ N_i = N` whose subtraction leaves
//! the smoothest signal. The smoothness cost is expanded into a sum-constrained
//! polynomial ([`polynomial`], [`smoothness`]) and minimized by a mean-field
//! emulation of a photonic loop ([`solver`]). [`pipeline`] wires this into
//! 1D, blocked, and column-swept 2D denoising; [`datagen`] and [`metrics`]
//! support synthetic experiments.

pub mod datagen;
pub mod error;
pub mod formats;
pub mod metrics;
pub mod pipeline;
pub mod polynomial;
pub mod smoothness;
pub mod solver;

pub use error::{Error, Result};
pub use pipeline::{BudgetPolicy, DenoiseResult, Image2D, Shape};
pub use polynomial::{CubicTerm, PolynomialBuilder, QuadraticTerm, SumConstrainedPolynomial, Violation};
pub use smoothness::{BoundaryPolicy, CrossColumnContext, MeasuredFrame};
pub use solver::{SolveReport, SolverConfig};

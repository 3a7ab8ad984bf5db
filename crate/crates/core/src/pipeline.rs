//! End-to-end noise reversal: single frames, blocked long frames, and 2D
//! images processed column by column.

use std::fmt;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::SumConstrainedPolynomial;
use crate::smoothness::{
    add_squared_residual, augment_cross_column, build_cost_form, residual_cost_counts, BoundaryPolicy,
    CrossColumnContext, MeasuredFrame,
};
use crate::solver::{largest_remainder, mean_field_solve, SolveReport, SolverConfig};

/// Smallest block the blocked pipeline will solve on its own.
pub const MIN_BLOCK: usize = 5;

pub const MIN_IMAGE_ROWS: usize = 5;

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for the `unit`-th independent solve of a pipeline run; unit 0 keeps the
/// caller's seed.
fn unit_seed(seed: u64, unit: usize) -> u64 {
    seed.wrapping_add((unit as u64).wrapping_mul(SEED_STRIDE))
}

/// Row-major grid of photon counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image2D {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl Image2D {
    pub fn new(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if rows < MIN_IMAGE_ROWS || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "image must have at least {MIN_IMAGE_ROWS} rows and 1 column, got {rows}x{cols}"
            )));
        }
        if counts.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: counts.len(),
            });
        }
        Ok(Image2D { rows, cols, counts })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn column_frame(&self, c: usize) -> MeasuredFrame {
        MeasuredFrame::new(self.column(c)).expect("rows checked at construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Shape {
    Line { len: usize },
    Grid { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Line { len } => len,
            Shape::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a global noise total is split across blocks or columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetPolicy {
    Uniform,
    #[default]
    Proportional,
}

impl std::str::FromStr for BudgetPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(BudgetPolicy::Uniform),
            "proportional" => Ok(BudgetPolicy::Proportional),
            _ => Err(Error::InvalidInput(format!("unknown budget policy '{s}'"))),
        }
    }
}

/// Splits `total` over units by largest remainder. Proportional splits fall back
/// to uniform when every unit total is zero.
pub fn allocate_budget(unit_totals: &[u64], total: u64, policy: BudgetPolicy) -> Vec<u64> {
    let units = unit_totals.len();
    if units == 0 {
        return Vec::new();
    }
    let sum: u64 = unit_totals.iter().sum();
    let shares: Vec<f64> = match policy {
        BudgetPolicy::Proportional if sum > 0 => unit_totals
            .iter()
            .map(|&t| total as f64 * t as f64 / sum as f64)
            .collect(),
        _ => vec![total as f64 / units as f64; units],
    };
    largest_remainder(&shares, total)
}

/// Per-solve bookkeeping for blocks and columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitDiagnostic {
    /// Pass (blocked) or sweep (2D) index.
    pub pass: usize,
    /// Block or column index within the pass.
    pub unit: usize,
    pub start: usize,
    pub len: usize,
    pub budget: u64,
    pub energy: f64,
    pub iterations: usize,
    /// True when the previous estimate beat the fresh solve and was kept.
    pub kept_previous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseResult {
    pub shape: Shape,
    /// Row-major for grids.
    pub noise_field: Vec<u64>,
    /// `counts − noise_field`; negative where assigned noise exceeds the measurement.
    pub recovered: Vec<i64>,
    pub final_cost: f64,
    pub diagnostics: Vec<UnitDiagnostic>,
    pub passes_completed: usize,
    /// Global objective after each pass or sweep.
    pub objective_history: Vec<f64>,
    /// Solver report of a single-unit run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_report: Option<SolveReport>,
}

impl DenoiseResult {
    pub fn noise_total(&self) -> u64 {
        self.noise_field.iter().sum()
    }
}

fn subtract(counts: &[u64], noise: &[u64]) -> Vec<i64> {
    counts
        .iter()
        .zip(noise)
        .map(|(&m, &n)| m as i64 - n as i64)
        .collect()
}

fn iterations_of(report: &SolveReport) -> usize {
    report
        .best_restart()
        .map_or(0, |r| report.per_restart[r].iterations_used)
}

/// Noise reversal of one frame as a single solve.
pub fn denoise_1d(
    frame: &MeasuredFrame,
    noise_total: u64,
    boundary: BoundaryPolicy,
    config: &SolverConfig,
) -> Result<DenoiseResult> {
    let poly = build_cost_form(frame, boundary, noise_total)?;
    let report = mean_field_solve(&poly, config)?;
    let noise = report.best.clone();
    let final_cost = residual_cost_counts(frame, boundary, &noise)?;
    Ok(DenoiseResult {
        shape: Shape::Line { len: frame.len() },
        recovered: subtract(frame.counts(), &noise),
        noise_field: noise,
        final_cost,
        diagnostics: vec![UnitDiagnostic {
            pass: 0,
            unit: 0,
            start: 0,
            len: frame.len(),
            budget: noise_total,
            energy: report.best_energy,
            iterations: iterations_of(&report),
            kept_previous: false,
        }],
        passes_completed: 1,
        objective_history: vec![final_cost],
        solve_report: Some(report),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockedOptions {
    pub block_size: usize,
    pub passes: usize,
    pub budget_policy: BudgetPolicy,
    /// Include the residuals that straddle each block edge, with the pixels
    /// outside the block held at the previous pass's estimate. When off, edge
    /// pixels of a block are free to absorb budget.
    pub halo: bool,
}

impl BlockedOptions {
    pub fn new(block_size: usize, passes: usize) -> Self {
        BlockedOptions {
            block_size,
            passes,
            budget_policy: BudgetPolicy::Proportional,
            halo: true,
        }
    }
}

/// Block ranges covering `0..len` with the first boundary at `offset`.
/// Blocks shorter than [`MIN_BLOCK`] merge into a neighbor.
pub fn block_ranges(len: usize, block: usize, offset: usize) -> Vec<Range<usize>> {
    let mut cuts = vec![0];
    let mut at = offset % block.max(1);
    if at == 0 {
        at = block;
    }
    while at < len {
        cuts.push(at);
        at += block;
    }
    cuts.push(len);
    let mut ranges: Vec<Range<usize>> = cuts.windows(2).map(|w| w[0]..w[1]).collect();
    if ranges.len() > 1 && ranges[0].len() < MIN_BLOCK {
        let first = ranges.remove(0);
        ranges[0].start = first.start;
    }
    while ranges.len() > 1 && ranges.last().is_some_and(|r| r.len() < MIN_BLOCK) {
        let last = ranges.pop().expect("non-empty");
        ranges.last_mut().expect("non-empty").end = last.end;
    }
    ranges
}

/// Adds the frame residuals centred within one pixel of the block edge whose
/// stencil reaches outside `range`, with outside pixels fixed at `context`.
fn add_block_halo(
    poly: SumConstrainedPolynomial,
    counts: &[u64],
    range: Range<usize>,
    context: &[f64],
) -> Result<SumConstrainedPolynomial> {
    let p = counts.len();
    let mut centers: Vec<usize> = [range.start.wrapping_sub(1), range.start, range.end - 1, range.end]
        .into_iter()
        .filter(|&c| c >= 1 && c < p - 1)
        .filter(|&c| c - 1 < range.start || c + 1 >= range.end)
        .filter(|&c| c + 1 >= range.start && c < range.end + 1)
        .collect();
    centers.dedup();
    if centers.is_empty() {
        return Ok(poly);
    }
    let mut b = poly.to_builder();
    for c in centers {
        let mut a = 0.0;
        let mut coeffs = Vec::with_capacity(3);
        for (j, w) in [(c - 1, -0.5), (c, 1.0), (c + 1, -0.5)] {
            if range.contains(&j) {
                a += w * counts[j] as f64;
                coeffs.push((j - range.start, -w));
            } else {
                a += w * context[j];
            }
        }
        add_squared_residual(&mut b, a, &coeffs)?;
    }
    Ok(b.build())
}

/// Noise reversal of a long frame in independent blocks, repeated over shifted
/// block boundaries.
///
/// Pass 0 splits the budget across blocks by policy. Every later pass shifts
/// the boundaries by half a block and hands each new block the noise the
/// previous pass already placed inside it, so the global total never moves.
pub fn denoise_1d_blocked(
    frame: &MeasuredFrame,
    noise_total: u64,
    options: &BlockedOptions,
    config: &SolverConfig,
) -> Result<DenoiseResult> {
    if options.block_size < MIN_BLOCK {
        return Err(Error::InvalidInput(format!(
            "block size {} is below the minimum of {MIN_BLOCK}",
            options.block_size
        )));
    }
    if options.passes == 0 {
        return Err(Error::InvalidInput("at least one pass is required".into()));
    }
    let p = frame.len();
    let counts = frame.counts();
    let boundary = BoundaryPolicy::Interior;
    let mut noise = vec![0u64; p];
    let mut diagnostics = Vec::new();
    let mut history = Vec::new();
    let mut unit = 0usize;
    let mut last_report = None;

    for pass in 0..options.passes {
        let offset = (pass * (options.block_size / 2)) % options.block_size;
        let ranges = block_ranges(p, options.block_size, offset);
        let budgets: Vec<u64> = if pass == 0 {
            let sums: Vec<u64> = ranges.iter().map(|r| counts[r.clone()].iter().sum()).collect();
            allocate_budget(&sums, noise_total, options.budget_policy)
        } else {
            ranges.iter().map(|r| noise[r.clone()].iter().sum()).collect()
        };
        let context: Vec<f64> = if pass == 0 {
            let mut ctx = vec![0.0; p];
            for (range, &budget) in ranges.iter().zip(&budgets) {
                let share = budget as f64 / range.len() as f64;
                for j in range.clone() {
                    ctx[j] = counts[j] as f64 - share;
                }
            }
            ctx
        } else {
            counts.iter().zip(&noise).map(|(&m, &n)| m as f64 - n as f64).collect()
        };
        let first_unit = unit;
        unit += ranges.len();
        let solved: Vec<(Vec<u64>, f64, bool, SolveReport)> = ranges
            .par_iter()
            .zip(budgets.par_iter())
            .enumerate()
            .map(|(b, (range, &budget))| {
                let sub = MeasuredFrame::new(counts[range.clone()].to_vec())?;
                let mut poly = build_cost_form(&sub, boundary, budget)?;
                if options.halo {
                    poly = add_block_halo(poly, counts, range.clone(), &context)?;
                }
                let cfg = config.clone().with_seed(unit_seed(config.seed, first_unit + b));
                let report = mean_field_solve(&poly, &cfg)?;
                if pass > 0 {
                    let previous = &noise[range.clone()];
                    let e = poly.evaluate_counts(previous)?;
                    if e < report.best_energy {
                        return Ok((previous.to_vec(), e, true, report));
                    }
                }
                Ok((report.best.clone(), report.best_energy, false, report))
            })
            .collect::<Result<_>>()?;
        let single = ranges.len() == 1;
        for (b, ((range, budget), (field, energy, kept_previous, report))) in
            ranges.iter().zip(&budgets).zip(solved).enumerate()
        {
            noise[range.clone()].copy_from_slice(&field);
            diagnostics.push(UnitDiagnostic {
                pass,
                unit: b,
                start: range.start,
                len: range.len(),
                budget: *budget,
                energy,
                iterations: iterations_of(&report),
                kept_previous,
            });
            if single {
                last_report = Some(report);
            }
        }
        history.push(residual_cost_counts(frame, boundary, &noise)?);
    }

    let final_cost = *history.last().expect("at least one pass");
    Ok(DenoiseResult {
        shape: Shape::Line { len: p },
        recovered: subtract(counts, &noise),
        noise_field: noise,
        final_cost,
        diagnostics,
        passes_completed: options.passes,
        objective_history: history,
        solve_report: if options.passes == 1 { last_report } else { None },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub sweeps: usize,
    pub budget_policy: BudgetPolicy,
    pub cross_column_weight: f64,
    /// Edge treatment along each column.
    pub boundary: BoundaryPolicy,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            sweeps: 3,
            budget_policy: BudgetPolicy::Proportional,
            cross_column_weight: 1.0,
            boundary: BoundaryPolicy::Interior,
        }
    }
}

fn recovered_column(counts: &[u64], noise: &[u64]) -> Vec<f64> {
    counts
        .iter()
        .zip(noise)
        .map(|(&m, &n)| m as f64 - n as f64)
        .collect()
}

/// Column residuals plus the cross-column variance terms of the current state.
fn sweep_objective(
    columns: &[MeasuredFrame],
    noise: &[Vec<u64>],
    options: &SweepOptions,
) -> Result<f64> {
    let recovered: Vec<Vec<f64>> = columns
        .iter()
        .zip(noise)
        .map(|(f, n)| recovered_column(f.counts(), n))
        .collect();
    let mut total = 0.0;
    for (frame, n) in columns.iter().zip(noise) {
        total += residual_cost_counts(frame, options.boundary, n)?;
    }
    let half = 0.5 * options.cross_column_weight;
    for pair in recovered.windows(2) {
        total += half
            * pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
    }
    Ok(total)
}

/// Cross-column context for column `c`. A border column sees one neighbor and
/// gets half the weight, so that every column's augmented energy equals the
/// sweep objective up to a constant.
fn neighbor_context(recovered: &[Vec<f64>], c: usize, weight: f64) -> CrossColumnContext {
    let left = (c > 0).then(|| recovered[c - 1].clone());
    let right = recovered.get(c + 1).cloned();
    let weight = if left.is_some() && right.is_some() {
        weight
    } else {
        0.5 * weight
    };
    CrossColumnContext::new(left, right).with_weight(weight)
}

/// Column-by-column noise reversal of an image with Gauss–Seidel sweeps.
///
/// Each column's cost gains `w · Σ_i (M_i − N_i − A_i)²`, where `A_i` averages
/// the current recovered estimates of the adjacent columns: the left one from
/// this sweep, the right one from the previous sweep. Column budgets are fixed
/// up front. From the second sweep on a column keeps its previous noise field
/// when that scores lower than the fresh solve under the updated cost.
pub fn denoise_2d(
    image: &Image2D,
    noise_total: u64,
    options: &SweepOptions,
    config: &SolverConfig,
) -> Result<DenoiseResult> {
    if options.sweeps == 0 {
        return Err(Error::InvalidInput("at least one sweep is required".into()));
    }
    if !(options.cross_column_weight.is_finite() && options.cross_column_weight >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "cross-column weight must be finite and nonnegative, got {}",
            options.cross_column_weight
        )));
    }
    let q = image.cols();
    let columns: Vec<MeasuredFrame> = (0..q).map(|c| image.column_frame(c)).collect();
    let sums: Vec<u64> = columns.iter().map(MeasuredFrame::total).collect();
    let budgets = allocate_budget(&sums, noise_total, options.budget_policy);

    let mut noise: Vec<Vec<u64>> = budgets
        .iter()
        .map(|&b| largest_remainder(&vec![b as f64 / image.rows() as f64; image.rows()], b))
        .collect();
    let mut recovered: Vec<Vec<f64>> = columns
        .iter()
        .zip(&noise)
        .map(|(f, n)| recovered_column(f.counts(), n))
        .collect();

    // A lone column has no neighbor, so further sweeps would re-solve the same problem.
    let sweeps = if q == 1 { 1 } else { options.sweeps };
    let mut diagnostics = Vec::with_capacity(sweeps * q);
    let mut history = Vec::with_capacity(sweeps);
    let mut last_report = None;

    for sweep in 0..sweeps {
        for c in 0..q {
            let frame = &columns[c];
            let mut poly: SumConstrainedPolynomial =
                build_cost_form(frame, options.boundary, budgets[c])?;
            if q > 1 {
                let ctx = neighbor_context(&recovered, c, options.cross_column_weight);
                poly = augment_cross_column(&poly, frame, &ctx)?;
            }
            let cfg = config.clone().with_seed(unit_seed(config.seed, sweep * q + c));
            let report = mean_field_solve(&poly, &cfg)?;
            let mut energy = report.best_energy;
            let mut kept_previous = false;
            if sweep > 0 {
                let previous = poly.evaluate_counts(&noise[c])?;
                if previous < energy {
                    energy = previous;
                    kept_previous = true;
                }
            }
            if !kept_previous {
                noise[c] = report.best.clone();
                recovered[c] = recovered_column(frame.counts(), &noise[c]);
            }
            diagnostics.push(UnitDiagnostic {
                pass: sweep,
                unit: c,
                start: c,
                len: frame.len(),
                budget: budgets[c],
                energy,
                iterations: iterations_of(&report),
                kept_previous,
            });
            if q == 1 {
                last_report = Some(report);
            }
        }
        history.push(sweep_objective(&columns, &noise, options)?);
    }

    let rows = image.rows();
    let mut field = vec![0u64; rows * q];
    for (c, col) in noise.iter().enumerate() {
        for (r, &n) in col.iter().enumerate() {
            field[r * q + c] = n;
        }
    }
    Ok(DenoiseResult {
        shape: Shape::Grid { rows, cols: q },
        recovered: subtract(image.counts(), &field),
        noise_field: field,
        final_cost: *history.last().expect("at least one sweep"),
        diagnostics,
        passes_completed: sweeps,
        objective_history: history,
        solve_report: last_report,
    })
}

/// Capacity limits of the photonic solver being emulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareProfile {
    pub max_modes: usize,
    pub max_photons_per_mode: u64,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        HardwareProfile {
            max_modes: 5000,
            max_photons_per_mode: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardwareWarning {
    TooManyModes { modes: usize, max: usize },
    TooManyPhotons { pixel: usize, photons: u64, max: u64 },
}

impl fmt::Display for HardwareWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HardwareWarning::TooManyModes { modes, max } => {
                write!(f, "{modes} variables exceeds {max} modes")
            }
            HardwareWarning::TooManyPhotons { pixel, photons, max } => write!(
                f,
                "pixel {pixel} holds {photons} photons, exceeds {max} per mode"
            ),
        }
    }
}

impl HardwareProfile {
    /// Warnings for a single solve of `modes` variables with the given field.
    pub fn check_field(&self, modes: usize, field: &[u64]) -> Vec<HardwareWarning> {
        let mut out = Vec::new();
        if modes > self.max_modes {
            out.push(HardwareWarning::TooManyModes {
                modes,
                max: self.max_modes,
            });
        }
        out.extend(
            field
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > self.max_photons_per_mode)
                .map(|(pixel, &photons)| HardwareWarning::TooManyPhotons {
                    pixel,
                    photons,
                    max: self.max_photons_per_mode,
                }),
        );
        out
    }

    pub fn check_poly(&self, poly: &SumConstrainedPolynomial) -> Vec<HardwareWarning> {
        self.check_field(poly.num_vars, &[])
    }

    /// Uses the largest individual solve of the run as the mode count.
    pub fn check_result(&self, result: &DenoiseResult) -> Vec<HardwareWarning> {
        let modes = result
            .diagnostics
            .iter()
            .map(|d| d.len)
            .max()
            .unwrap_or(result.shape.len());
        self.check_field(modes, &result.noise_field)
    }
}

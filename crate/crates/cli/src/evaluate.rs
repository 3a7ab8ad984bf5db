use std::path::PathBuf;

use clap::Args;
use noise_reversal::metrics::{metrics_from_arrays, RecoveryMetrics};
use noise_reversal::smoothness::residual_cost;
use noise_reversal::{BoundaryPolicy, MeasuredFrame, Shape};
use serde::Serialize;

use crate::error::CliError;
use crate::files::{self, FORMAT_VERSION};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub measured: PathBuf,
    #[arg(long)]
    pub recovered: PathBuf,
    /// Pixels excluded from every border
    #[arg(long, default_value_t = 0)]
    pub trim: usize,
    /// Boundary used for the residual cost of the recovered signal
    #[arg(long, default_value = "interior")]
    pub boundary: BoundaryPolicy,
    /// Write the report here instead of stdout
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct EvaluationReport {
    pub version: &'static str,
    pub shape: Shape,
    #[serde(flatten)]
    pub metrics: RecoveryMetrics,
}

/// Smoothness residual of `recovered`, summed over columns for grids.
fn recovered_residual(
    shape: Shape,
    measured: &[u64],
    recovered: &[i64],
    boundary: BoundaryPolicy,
) -> Result<f64, CliError> {
    let noise: Vec<f64> = measured
        .iter()
        .zip(recovered)
        .map(|(&m, &r)| m as f64 - r as f64)
        .collect();
    match shape {
        Shape::Line { .. } => Ok(residual_cost(&MeasuredFrame::new(measured.to_vec())?, boundary, &noise)?),
        Shape::Grid { rows, cols } => {
            let mut total = 0.0;
            for c in 0..cols {
                let col: Vec<u64> = (0..rows).map(|r| measured[r * cols + c]).collect();
                let n: Vec<f64> = (0..rows).map(|r| noise[r * cols + c]).collect();
                total += residual_cost(&MeasuredFrame::new(col)?, boundary, &n)?;
            }
            Ok(total)
        }
    }
}

pub fn evaluation(
    shape: Shape,
    truth: &[u64],
    measured: &[u64],
    recovered: &[i64],
    trim: usize,
    boundary: BoundaryPolicy,
) -> Result<EvaluationReport, CliError> {
    let f = |a: &[u64]| a.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let rec: Vec<f64> = recovered.iter().map(|&x| x as f64).collect();
    let (rmse_noisy, rmse_recovered, improvement_factor) =
        metrics_from_arrays(shape, &f(truth), &f(measured), &rec, trim)?;
    let used: i128 = measured
        .iter()
        .zip(recovered)
        .map(|(&m, &r)| m as i128 - r as i128)
        .sum();
    let budget_used = u64::try_from(used)
        .map_err(|_| CliError::usage("recovered signal exceeds the measurement in total"))?;
    Ok(EvaluationReport {
        version: FORMAT_VERSION,
        shape,
        metrics: RecoveryMetrics {
            rmse_noisy,
            rmse_recovered,
            improvement_factor,
            residual_cost: recovered_residual(shape, measured, recovered, boundary)?,
            budget_used,
            edge_trim: trim,
        },
    })
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let (shape, truth) = files::read_counts(&args.truth)?;
    let (mshape, measured) = files::read_counts(&args.measured)?;
    let (rshape, recovered) = files::read_signed(&args.recovered)?;
    if mshape != shape || rshape != shape {
        return Err(CliError::usage(format!(
            "shape mismatch: truth {shape:?}, measured {mshape:?}, recovered {rshape:?}"
        )));
    }
    let report = evaluation(shape, &truth, &measured, &recovered, args.trim, args.boundary)?;
    match &args.output {
        Some(path) => files::write_json(path, &report),
        None => {
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::usage(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

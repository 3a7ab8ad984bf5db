//! Recovery quality metrics.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pipeline::{DenoiseResult, Shape};

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    Ok((sq / a.len() as f64).sqrt())
}

/// Indices kept after trimming `k` pixels from every border.
pub fn trimmed_indices(shape: Shape, k: usize) -> Vec<usize> {
    match shape {
        Shape::Line { len } => (k..len.saturating_sub(k)).collect(),
        Shape::Grid { rows, cols } => (k..rows.saturating_sub(k))
            .flat_map(|r| (k..cols.saturating_sub(k)).map(move |c| r * cols + c))
            .collect(),
    }
}

/// Ratio of noisy to recovered RMSE; `+∞` when recovery is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementFactor(pub f64);

impl ImprovementFactor {
    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }
}

impl Serialize for ImprovementFactor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ImprovementFactor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ImprovementFactor(x)),
            Raw::Text(t) if t == "inf" => Ok(ImprovementFactor(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad factor '{t}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub rmse_noisy: f64,
    pub rmse_recovered: f64,
    pub improvement_factor: ImprovementFactor,
    pub residual_cost: f64,
    pub budget_used: u64,
    /// Border pixels excluded from both RMSEs.
    pub edge_trim: usize,
}

pub fn improvement(rmse_noisy: f64, rmse_recovered: f64) -> ImprovementFactor {
    if rmse_recovered == 0.0 {
        ImprovementFactor(f64::INFINITY)
    } else {
        ImprovementFactor(rmse_noisy / rmse_recovered)
    }
}

/// Metrics from raw arrays, for callers that hold no [`DenoiseResult`].
pub fn metrics_from_arrays(
    shape: Shape,
    truth: &[f64],
    measured: &[f64],
    recovered: &[f64],
    edge_trim: usize,
) -> Result<(f64, f64, ImprovementFactor)> {
    let n = shape.len();
    for arr in [truth, measured, recovered] {
        if arr.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: arr.len(),
            });
        }
    }
    let keep = trimmed_indices(shape, edge_trim);
    let pick = |a: &[f64]| keep.iter().map(|&i| a[i]).collect::<Vec<f64>>();
    let t = pick(truth);
    let rmse_noisy = rmse(&pick(measured), &t)?;
    let rmse_recovered = rmse(&pick(recovered), &t)?;
    Ok((rmse_noisy, rmse_recovered, improvement(rmse_noisy, rmse_recovered)))
}

pub fn compute_metrics(
    truth: &[u64],
    measured: &[u64],
    result: &DenoiseResult,
    edge_trim: usize,
) -> Result<RecoveryMetrics> {
    let f = |a: &[u64]| a.iter().map(|&x| x as f64).collect::<Vec<f64>>();
    let recovered: Vec<f64> = result.recovered.iter().map(|&x| x as f64).collect();
    let (rmse_noisy, rmse_recovered, improvement_factor) =
        metrics_from_arrays(result.shape, &f(truth), &f(measured), &recovered, edge_trim)?;
    Ok(RecoveryMetrics {
        rmse_noisy,
        rmse_recovered,
        improvement_factor,
        residual_cost: result.final_cost,
        budget_used: result.noise_total(),
        edge_trim,
    })
}

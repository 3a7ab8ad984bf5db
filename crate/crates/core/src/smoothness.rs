//! Nearest-neighbor smoothness cost in the noise variables.
//!
//! The residual at pixel `i` is
//!
//! ```text
//! r_i = (M_i - N_i) - ((M_{i-1} - N_{i-1}) + (M_{i+1} - N_{i+1})) / 2
//! ```
//!
//! and the cost is `Σ r_i²`. [`build_cost_form`] expands each square term by
//! term, so the resulting polynomial equals the cost everywhere, edges included.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{PolynomialBuilder, SumConstrainedPolynomial};

/// Smallest frame with at least one complete residual term.
pub const MIN_FRAME_LEN: usize = 3;

/// Photon counts `M_i` for a 1D row of pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredFrame {
    counts: Vec<u64>,
}

impl MeasuredFrame {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < MIN_FRAME_LEN {
            return Err(Error::InvalidInput(format!(
                "frame needs at least {MIN_FRAME_LEN} pixels, got {}",
                counts.len()
            )));
        }
        Ok(MeasuredFrame { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn m(&self, i: usize) -> f64 {
        self.counts[i] as f64
    }
}

/// Edge treatment of the residual sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// Indices wrap around; every pixel contributes a residual.
    Periodic,
    /// Only pixels with both neighbors contribute.
    #[default]
    Interior,
}

impl std::str::FromStr for BoundaryPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(BoundaryPolicy::Periodic),
            "interior" => Ok(BoundaryPolicy::Interior),
            _ => Err(Error::InvalidInput(format!("unknown boundary policy '{s}'"))),
        }
    }
}

/// Neighbor-column estimates for the cross-column variance term.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossColumnContext {
    pub left: Option<Vec<f64>>,
    pub right: Option<Vec<f64>>,
    pub weight: f64,
}

impl CrossColumnContext {
    pub fn new(left: Option<Vec<f64>>, right: Option<Vec<f64>>) -> Self {
        CrossColumnContext {
            left,
            right,
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// Per-row reference `A_i`: the mean of whichever neighbors are present.
    pub fn reference(&self, len: usize) -> Result<Vec<f64>> {
        for side in [&self.left, &self.right].into_iter().flatten() {
            if side.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    actual: side.len(),
                });
            }
        }
        match (&self.left, &self.right) {
            (Some(l), Some(r)) => Ok(l.iter().zip(r).map(|(a, b)| 0.5 * (a + b)).collect()),
            (Some(l), None) => Ok(l.clone()),
            (None, Some(r)) => Ok(r.clone()),
            (None, None) => Err(Error::InvalidInput(
                "cross-column context needs at least one neighbor".into(),
            )),
        }
    }
}

/// `(center, left, right)` index triples of every residual term.
fn residual_stencils(len: usize, boundary: BoundaryPolicy) -> Vec<(usize, usize, usize)> {
    match boundary {
        BoundaryPolicy::Periodic => (0..len)
            .map(|i| (i, (i + len - 1) % len, (i + 1) % len))
            .collect(),
        BoundaryPolicy::Interior => (1..len - 1).map(|i| (i, i - 1, i + 1)).collect(),
    }
}

/// Expands `Σ r_i²` into a polynomial in the noise variables with budget `noise_total`.
pub fn build_cost_form(
    frame: &MeasuredFrame,
    boundary: BoundaryPolicy,
    noise_total: u64,
) -> Result<SumConstrainedPolynomial> {
    let p = frame.len();
    let mut b = PolynomialBuilder::new(p, noise_total);
    let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(3);
    for (i, l, r) in residual_stencils(p, boundary) {
        // r_i = a + Σ_k c_k N_k
        let a = frame.m(i) - 0.5 * (frame.m(l) + frame.m(r));
        coeffs.clear();
        for (k, c) in [(i, -1.0), (l, 0.5), (r, 0.5)] {
            match coeffs.iter_mut().find(|(idx, _)| *idx == k) {
                Some(entry) => entry.1 += c,
                None => coeffs.push((k, c)),
            }
        }
        add_squared_residual(&mut b, a, &coeffs)?;
    }
    Ok(b.build())
}

/// Adds `(a + Σ c_k N_k)²` to `b`. Indices in `coeffs` must be distinct.
pub(crate) fn add_squared_residual(
    b: &mut PolynomialBuilder,
    a: f64,
    coeffs: &[(usize, f64)],
) -> Result<()> {
    b.add_constant(a * a);
    for (x, &(k, ck)) in coeffs.iter().enumerate() {
        b.add_linear(k, 2.0 * a * ck)?;
        b.add_quadratic(k, k, ck * ck)?;
        for &(l, cl) in &coeffs[x + 1..] {
            b.add_quadratic(k, l, 2.0 * ck * cl)?;
        }
    }
    Ok(())
}

/// Direct evaluation of `Σ r_i²` for a real-valued noise field.
pub fn residual_cost(frame: &MeasuredFrame, boundary: BoundaryPolicy, noise: &[f64]) -> Result<f64> {
    if noise.len() != frame.len() {
        return Err(Error::DimensionMismatch {
            expected: frame.len(),
            actual: noise.len(),
        });
    }
    let s = |k: usize| frame.m(k) - noise[k];
    Ok(residual_stencils(frame.len(), boundary)
        .into_iter()
        .map(|(i, l, r)| {
            let res = s(i) - 0.5 * (s(l) + s(r));
            res * res
        })
        .sum())
}

/// [`residual_cost`] for an integer noise field.
pub fn residual_cost_counts(
    frame: &MeasuredFrame,
    boundary: BoundaryPolicy,
    noise: &[u64],
) -> Result<f64> {
    let n: Vec<f64> = noise.iter().map(|&x| x as f64).collect();
    residual_cost(frame, boundary, &n)
}

/// Closed-form stencil coefficients of the expanded cost.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorCoefficients {
    /// `D_i = 3M_i − 2M_{i+1} − 2M_{i−1} + M_{i+2}/2 + M_{i−2}/2`, indices wrapped.
    /// Entries outside `2..P-2` only match the periodic expansion.
    pub d: Vec<f64>,
    /// Symmetric-pair value for `(i, i)`.
    pub diag: f64,
    /// Symmetric-pair value for `(i, i±1)`.
    pub off1: f64,
    /// Symmetric-pair value for `(i, i±2)`.
    pub off2: f64,
}

impl InteriorCoefficients {
    pub fn interior_range(&self) -> std::ops::Range<usize> {
        2..self.d.len() - 2
    }
}

pub fn interior_coefficients(frame: &MeasuredFrame) -> Result<InteriorCoefficients> {
    let p = frame.len();
    if p < 5 {
        return Err(Error::InvalidInput(format!(
            "closed-form coefficients need at least 5 pixels, got {p}"
        )));
    }
    let m = |k: isize| frame.m(k.rem_euclid(p as isize) as usize);
    let d = (0..p as isize)
        .map(|i| {
            3.0 * m(i) - 2.0 * m(i + 1) - 2.0 * m(i - 1) + m(i + 2) / 2.0 + m(i - 2) / 2.0
        })
        .collect();
    Ok(InteriorCoefficients {
        d,
        diag: 1.5,
        off1: -1.0,
        off2: 0.25,
    })
}

/// Adds `weight · Σ_i (M_i − N_i − A_i)²` to `poly`.
pub fn augment_cross_column(
    poly: &SumConstrainedPolynomial,
    frame: &MeasuredFrame,
    ctx: &CrossColumnContext,
) -> Result<SumConstrainedPolynomial> {
    let p = frame.len();
    if poly.num_vars != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: poly.num_vars,
        });
    }
    if !(ctx.weight.is_finite() && ctx.weight >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "cross-column weight must be finite and nonnegative, got {}",
            ctx.weight
        )));
    }
    let reference = ctx.reference(p)?;
    if ctx.weight == 0.0 {
        return Ok(poly.clone());
    }
    let w = ctx.weight;
    let mut b = poly.to_builder();
    for (i, a) in reference.iter().enumerate() {
        let delta = frame.m(i) - a;
        b.add_constant(w * delta * delta);
        b.add_linear(i, -2.0 * w * delta)?;
        b.add_quadratic(i, i, w)?;
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::QuadraticTerm;

    fn frame(v: &[u64]) -> MeasuredFrame {
        MeasuredFrame::new(v.to_vec()).unwrap()
    }

    #[test]
    fn flat_frame_uniform_noise_costs_nothing() {
        let f = frame(&[2, 2, 2, 2, 2]);
        let poly = build_cost_form(&f, BoundaryPolicy::Periodic, 5).unwrap();
        assert_eq!(poly.evaluate(&[1.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn center_spike_linear_coefficient() {
        let f = frame(&[0, 0, 4, 0, 0]);
        let poly = build_cost_form(&f, BoundaryPolicy::Periodic, 0).unwrap();
        assert_eq!(poly.linear[2], -12.0);
        let ic = interior_coefficients(&f).unwrap();
        assert_eq!(ic.d[2], 12.0);
    }

    #[test]
    fn three_pixel_interior_hand_values() {
        let f = frame(&[0, 2, 0]);
        let b = BoundaryPolicy::Interior;
        assert_eq!(residual_cost(&f, b, &[0.0, 2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(residual_cost(&f, b, &[1.0, 0.0, 1.0]).unwrap(), 9.0);
        let poly = build_cost_form(&f, b, 2).unwrap();
        assert_eq!(poly.evaluate(&[1.0, 0.0, 1.0]).unwrap(), 9.0);
    }

    #[test]
    fn zero_noise_matches_residual() {
        let f = frame(&[3, 9, 1, 0, 7, 4, 4]);
        for b in [BoundaryPolicy::Periodic, BoundaryPolicy::Interior] {
            let poly = build_cost_form(&f, b, 0).unwrap();
            let zeros = vec![0.0; f.len()];
            assert_eq!(
                poly.evaluate(&zeros).unwrap(),
                residual_cost(&f, b, &zeros).unwrap()
            );
        }
    }

    #[test]
    fn flat_frame_has_zero_d() {
        let ic = interior_coefficients(&frame(&[5; 9])).unwrap();
        assert!(ic.d.iter().all(|&d| d == 0.0));
        assert!(interior_coefficients(&frame(&[1, 2, 3, 4])).is_err());
    }

    #[test]
    fn small_frames_rejected() {
        assert!(MeasuredFrame::new(vec![1, 2]).is_err());
        let f = frame(&[1, 2, 3]);
        assert!(matches!(
            residual_cost(&f, BoundaryPolicy::Interior, &[0.0; 2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cross_column_zero_weight_is_identity() {
        let f = frame(&[4, 1, 3, 3, 8]);
        let poly = build_cost_form(&f, BoundaryPolicy::Interior, 3).unwrap();
        let ctx = CrossColumnContext::new(Some(vec![1.0; 5]), None).with_weight(0.0);
        assert_eq!(augment_cross_column(&poly, &f, &ctx).unwrap(), poly);
    }

    #[test]
    fn cross_column_equal_neighbors_adds_only_diagonal() {
        let f = frame(&[4, 1, 3, 3, 8]);
        let poly = build_cost_form(&f, BoundaryPolicy::Interior, 3).unwrap();
        let m: Vec<f64> = f.counts().iter().map(|&x| x as f64).collect();
        let ctx = CrossColumnContext::new(Some(m.clone()), Some(m)).with_weight(2.0);
        let aug = augment_cross_column(&poly, &f, &ctx).unwrap();
        assert_eq!(aug.linear, poly.linear);
        assert_eq!(aug.constant, poly.constant);
        for i in 0..5 {
            let w = |p: &SumConstrainedPolynomial| {
                p.quadratic
                    .iter()
                    .find(|QuadraticTerm(a, b, _)| *a == i && *b == i)
                    .map_or(0.0, |t| t.2)
            };
            assert_eq!(w(&aug) - w(&poly), 2.0);
        }
    }

    #[test]
    fn cross_column_errors() {
        let f = frame(&[4, 1, 3, 3, 8]);
        let poly = build_cost_form(&f, BoundaryPolicy::Interior, 3).unwrap();
        let none = CrossColumnContext::new(None, None);
        assert!(augment_cross_column(&poly, &f, &none).is_err());
        let short = CrossColumnContext::new(Some(vec![0.0; 4]), None);
        assert!(matches!(
            augment_cross_column(&poly, &f, &short),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

//! Synthetic ground truths and Poissonian corruption.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Poisson mean accepted before counts risk leaving the integer range.
pub const MAX_LAMBDA: f64 = 1e12;

/// Switch-over between Knuth's product method and transformed rejection.
const KNUTH_LIMIT: f64 = 30.0;

/// Self-describing record of how a signal was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub generator: String,
    pub formula: String,
    pub parameters: BTreeMap<String, f64>,
}

/// `e^{−γ i} (1 + sin ω i) / 2` for `i` in `0..len`.
pub fn decaying_sinusoid_profile(len: usize, omega: f64, gamma: f64) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let x = i as f64;
            (-gamma * x).exp() * (1.0 + (omega * x).sin()) / 2.0
        })
        .collect()
}

fn quantize(x: f64) -> u64 {
    x.max(0.0).round() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid1d {
    pub len: usize,
    pub amplitude: f64,
    pub omega: f64,
    pub gamma: f64,
    pub floor: f64,
}

impl Sinusoid1d {
    pub fn generate(&self) -> Result<(Vec<u64>, GeneratorMeta)> {
        if self.len < 5 {
            return Err(Error::InvalidInput(format!("length {} < 5", self.len)));
        }
        if !(0.0..).contains(&self.amplitude) || !(0.0..).contains(&self.gamma) || !self.omega.is_finite() || !self.floor.is_finite() {
            return Err(Error::InvalidInput(
                "amplitude and decay must be nonnegative and finite".into(),
            ));
        }
        let counts = decaying_sinusoid_profile(self.len, self.omega, self.gamma)
            .into_iter()
            .map(|f| quantize(self.floor + self.amplitude * f))
            .collect();
        let meta = GeneratorMeta {
            generator: "sin1d".into(),
            formula: "round(max(0, floor + A*exp(-gamma*i)*(1+sin(omega*i))/2))".into(),
            parameters: BTreeMap::from([
                ("len".into(), self.len as f64),
                ("amplitude".into(), self.amplitude),
                ("omega".into(), self.omega),
                ("gamma".into(), self.gamma),
                ("floor".into(), self.floor),
            ]),
        };
        Ok((counts, meta))
    }
}

/// Separable 2D decaying sinusoid; the image is row-major `rows × cols`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid2d {
    pub rows: usize,
    pub cols: usize,
    pub amplitude: f64,
    pub omega_row: f64,
    pub omega_col: f64,
    pub gamma_row: f64,
    pub gamma_col: f64,
    pub floor: f64,
}

impl Sinusoid2d {
    pub fn generate(&self) -> Result<(Vec<u64>, GeneratorMeta)> {
        if self.rows < 5 || self.cols == 0 {
            return Err(Error::InvalidInput(format!(
                "image {}x{} needs at least 5 rows and 1 column",
                self.rows, self.cols
            )));
        }
        if !(0.0..).contains(&self.amplitude) || !(0.0..).contains(&self.gamma_row) || !(0.0..).contains(&self.gamma_col) {
            return Err(Error::InvalidInput(
                "amplitude and decay rates must be nonnegative".into(),
            ));
        }
        let fr = decaying_sinusoid_profile(self.rows, self.omega_row, self.gamma_row);
        let fc = decaying_sinusoid_profile(self.cols, self.omega_col, self.gamma_col);
        let mut counts = Vec::with_capacity(self.rows * self.cols);
        for r in &fr {
            for c in &fc {
                counts.push(quantize(self.floor + self.amplitude * r * c));
            }
        }
        let meta = GeneratorMeta {
            generator: "sin2d".into(),
            formula: "round(max(0, floor + A*exp(-gr*r-gc*c)*(1+sin(wr*r))*(1+sin(wc*c))/4))".into(),
            parameters: BTreeMap::from([
                ("rows".into(), self.rows as f64),
                ("cols".into(), self.cols as f64),
                ("amplitude".into(), self.amplitude),
                ("omega_row".into(), self.omega_row),
                ("omega_col".into(), self.omega_col),
                ("gamma_row".into(), self.gamma_row),
                ("gamma_col".into(), self.gamma_col),
                ("floor".into(), self.floor),
            ]),
        };
        Ok((counts, meta))
    }
}

/// What the noise fraction multiplies to obtain the Poisson mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelativeTo {
    #[default]
    Peak,
    Mean,
}

impl std::str::FromStr for RelativeTo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peak" => Ok(RelativeTo::Peak),
            "mean" => Ok(RelativeTo::Mean),
            _ => Err(Error::InvalidInput(format!("unknown reference '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub noise_mean_fraction: f64,
    pub relative_to: RelativeTo,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(noise_mean_fraction: f64, seed: u64) -> Self {
        CorruptionSpec {
            noise_mean_fraction,
            relative_to: RelativeTo::Peak,
            seed,
        }
    }

    /// Per-pixel Poisson mean for a given ground truth.
    pub fn lambda_for(&self, truth: &[u64]) -> Result<f64> {
        if !(self.noise_mean_fraction >= 0.0 && self.noise_mean_fraction.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise fraction must be finite and nonnegative, got {}",
                self.noise_mean_fraction
            )));
        }
        let reference = match self.relative_to {
            RelativeTo::Peak => truth.iter().copied().max().unwrap_or(0) as f64,
            RelativeTo::Mean => {
                truth.iter().map(|&x| x as f64).sum::<f64>() / truth.len().max(1) as f64
            }
        };
        let lambda = self.noise_mean_fraction * reference;
        if !(..=MAX_LAMBDA).contains(&lambda) {
            return Err(Error::InvalidInput(format!(
                "Poisson mean {lambda} exceeds the supported maximum {MAX_LAMBDA}"
            )));
        }
        Ok(lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub measured: Vec<u64>,
    pub true_noise: Vec<u64>,
    pub true_total: u64,
    pub lambda_used: f64,
}

/// `ln k!` via a table for small `k` and the Stirling series beyond.
fn ln_factorial(k: u64) -> f64 {
    const TABLE: [f64; 10] = [
        0.0,
        0.0,
        std::f64::consts::LN_2,
        1.791_759_469_228_055,
        3.178_053_830_347_146,
        4.787_491_742_782_046,
        6.579_251_212_010_101,
        8.525_161_361_065_415,
        10.604_602_902_745_25,
        12.801_827_480_081_469,
    ];
    if (k as usize) < TABLE.len() {
        return TABLE[k as usize];
    }
    let n = k as f64 + 1.0;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    (n - 0.5) * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Draws one Poisson(λ) variate.
///
/// Knuth's product method below λ = 30, Hörmann's transformed rejection with
/// squeeze (PTRS) above.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < KNUTH_LIMIT {
        let limit = (-lambda).exp();
        let mut k = 0u64;
        let mut prod: f64 = rng.gen();
        while prod > limit {
            k += 1;
            prod *= rng.gen::<f64>();
        }
        return k;
    }
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Stream reserved for pixel `i` of a corruption draw.
fn pixel_rng(seed: u64, pixel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pixel as u64);
    rng
}

/// Stream reserved for off-period sample `k`; disjoint from every pixel stream.
fn off_period_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - sample as u64);
    rng
}

/// Adds i.i.d. Poisson noise to every pixel.
///
/// Each pixel draws from its own ChaCha stream, so the result does not depend
/// on iteration order.
pub fn poisson_corrupt(truth: &[u64], spec: &CorruptionSpec) -> Result<CorruptionRecord> {
    let lambda = spec.lambda_for(truth)?;
    let true_noise: Vec<u64> = (0..truth.len())
        .map(|i| sample_poisson(lambda, &mut pixel_rng(spec.seed, i)))
        .collect();
    let measured = truth
        .iter()
        .zip(&true_noise)
        .map(|(&t, &n)| {
            t.checked_add(n)
                .ok_or_else(|| Error::InvalidInput("count overflow".into()))
        })
        .collect::<Result<Vec<u64>>>()?;
    let true_total = true_noise.iter().sum();
    Ok(CorruptionRecord {
        measured,
        true_noise,
        true_total,
        lambda_used: lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseTotalEstimate<'a> {
    /// The sampled total of a known corruption.
    Exact(&'a CorruptionRecord),
    /// `round(P · mean)` of `samples` background-only draws at `lambda`.
    OffPeriod {
        pixels: usize,
        lambda: f64,
        samples: usize,
        seed: u64,
    },
}

pub fn estimate_noise_total(mode: NoiseTotalEstimate<'_>) -> Result<u64> {
    match mode {
        NoiseTotalEstimate::Exact(record) => Ok(record.true_total),
        NoiseTotalEstimate::OffPeriod {
            pixels,
            lambda,
            samples,
            seed,
        } => {
            if samples == 0 {
                return Err(Error::InvalidInput(
                    "off-period estimate needs at least one sample".into(),
                ));
            }
            let draws = off_period_samples(lambda, samples, seed);
            let mean = draws.iter().map(|&x| x as f64).sum::<f64>() / samples as f64;
            Ok((pixels as f64 * mean).round() as u64)
        }
    }
}

/// Background-only draws as they would be measured between pulses.
pub fn off_period_samples(lambda: f64, samples: usize, seed: u64) -> Vec<u64> {
    (0..samples)
        .map(|k| sample_poisson(lambda, &mut off_period_rng(seed, k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_floor() {
        let s = Sinusoid1d {
            len: 12,
            amplitude: 0.0,
            omega: 0.4,
            gamma: 0.1,
            floor: 3.0,
        };
        assert_eq!(s.generate().unwrap().0, vec![3; 12]);
    }

    #[test]
    fn degenerate_parameters_give_half_amplitude() {
        let s = Sinusoid1d {
            len: 6,
            amplitude: 9.0,
            omega: 0.0,
            gamma: 0.0,
            floor: 1.0,
        };
        // 1 + 4.5 rounds half away from zero
        assert_eq!(s.generate().unwrap().0, vec![6; 6]);
    }

    #[test]
    fn first_peak_matches_dense_argmax() {
        let s = Sinusoid1d {
            len: 200,
            amplitude: 100.0,
            omega: 0.4,
            gamma: 0.02,
            floor: 0.0,
        };
        let (counts, _) = s.generate().unwrap();
        assert!(*counts.iter().max().unwrap() <= 100);
        let period = 2.0 * std::f64::consts::PI / 0.4;
        let dense_argmax = (0..100_000)
            .map(|k| k as f64 * period / 100_000.0)
            .max_by(|a, b| {
                let f = |x: f64| (-0.02 * x).exp() * (1.0 + (0.4 * x).sin());
                f(*a).total_cmp(&f(*b))
            })
            .unwrap();
        let first = (0..16).max_by_key(|&i| counts[i]).unwrap();
        assert!((first as f64 - dense_argmax).abs() <= 1.0, "{first} vs {dense_argmax}");
        assert!((dense_argmax - 4.0).abs() < 0.5);
    }

    #[test]
    fn image_dimensions() {
        let s = Sinusoid2d {
            rows: 100,
            cols: 200,
            amplitude: 100.0,
            omega_row: 0.3,
            omega_col: 0.2,
            gamma_row: 0.02,
            gamma_col: 0.01,
            floor: 0.0,
        };
        let (img, meta) = s.generate().unwrap();
        assert_eq!(img.len(), 100 * 200);
        assert_eq!(meta.parameters["rows"], 100.0);
        let flat = Sinusoid2d { amplitude: 0.0, floor: 2.0, ..s };
        assert!(flat.generate().unwrap().0.iter().all(|&x| x == 2));
    }

    #[test]
    fn zero_fraction_leaves_truth() {
        let truth = vec![5, 0, 9, 3, 3];
        let r = poisson_corrupt(&truth, &CorruptionSpec::new(0.0, 1)).unwrap();
        assert_eq!(r.measured, truth);
        assert_eq!(r.true_total, 0);
    }

    #[test]
    fn lambda_reference() {
        let truth = vec![10, 0, 20, 10];
        let mut spec = CorruptionSpec::new(0.5, 0);
        assert_eq!(spec.lambda_for(&truth).unwrap(), 10.0);
        spec.relative_to = RelativeTo::Mean;
        assert_eq!(spec.lambda_for(&truth).unwrap(), 5.0);
        spec.noise_mean_fraction = 1e12;
        assert!(spec.lambda_for(&truth).is_err());
    }

    #[test]
    fn ln_factorial_matches_direct_sum() {
        for k in 0..200u64 {
            let direct: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
            assert!((ln_factorial(k) - direct).abs() < 1e-9 * direct.max(1.0), "{k}");
        }
    }

    #[test]
    fn large_lambda_moments() {
        for lambda in [30.0, 50.0, 400.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let xs: Vec<f64> = (0..20_000).map(|_| sample_poisson(lambda, &mut rng) as f64).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            assert!((mean - lambda).abs() < 5.0 * (lambda / 20_000.0).sqrt());
            assert!((var / mean - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn off_period_needs_samples() {
        let mode = NoiseTotalEstimate::OffPeriod {
            pixels: 10,
            lambda: 3.0,
            samples: 0,
            seed: 1,
        };
        assert!(estimate_noise_total(mode).is_err());
        let zero = NoiseTotalEstimate::OffPeriod {
            pixels: 10,
            lambda: 0.0,
            samples: 5,
            seed: 1,
        };
        assert_eq!(estimate_noise_total(zero).unwrap(), 0);
    }
}

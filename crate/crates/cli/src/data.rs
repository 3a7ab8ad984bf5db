use std::path::PathBuf;

use clap::{Args, ValueEnum};
use noise_reversal::datagen::{poisson_corrupt, CorruptionSpec, RelativeTo, Sinusoid1d, Sinusoid2d};
use noise_reversal::Shape;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::files::{self, NoisyMeta, TruthMeta, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthKind {
    Sin1d,
    Sin2d,
}

/// Ground-truth generator parameters.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthArgs {
    #[arg(long, value_enum, default_value = "sin1d")]
    pub kind: TruthKind,
    #[arg(long, default_value_t = 200)]
    #[serde(default = "default_len")]
    pub len: usize,
    #[arg(long, default_value_t = 50)]
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[arg(long, default_value_t = 100)]
    #[serde(default = "default_cols")]
    pub cols: usize,
    #[arg(long = "amp", default_value_t = 100.0)]
    #[serde(default = "default_amp")]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.4)]
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[arg(long, default_value_t = 0.02)]
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.4)]
    #[serde(default = "default_omega")]
    pub omega_row: f64,
    #[arg(long, default_value_t = 0.3)]
    #[serde(default = "default_omega_col")]
    pub omega_col: f64,
    #[arg(long, default_value_t = 0.03)]
    #[serde(default = "default_gamma_row")]
    pub gamma_row: f64,
    #[arg(long, default_value_t = 0.02)]
    #[serde(default = "default_gamma")]
    pub gamma_col: f64,
    /// Constant added before rounding
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub floor: f64,
}

fn default_len() -> usize {
    200
}
fn default_rows() -> usize {
    50
}
fn default_cols() -> usize {
    100
}
fn default_amp() -> f64 {
    100.0
}
fn default_omega() -> f64 {
    0.4
}
fn default_omega_col() -> f64 {
    0.3
}
fn default_gamma() -> f64 {
    0.02
}
fn default_gamma_row() -> f64 {
    0.03
}

impl TruthArgs {
    pub fn generate(&self, seed: u64) -> Result<(Shape, Vec<u64>, TruthMeta), CliError> {
        let (shape, (counts, generator)) = match self.kind {
            TruthKind::Sin1d => (
                Shape::Line { len: self.len },
                Sinusoid1d {
                    len: self.len,
                    amplitude: self.amplitude,
                    omega: self.omega,
                    gamma: self.gamma,
                    floor: self.floor,
                }
                .generate()?,
            ),
            TruthKind::Sin2d => (
                Shape::Grid {
                    rows: self.rows,
                    cols: self.cols,
                },
                Sinusoid2d {
                    rows: self.rows,
                    cols: self.cols,
                    amplitude: self.amplitude,
                    omega_row: self.omega_row,
                    omega_col: self.omega_col,
                    gamma_row: self.gamma_row,
                    gamma_col: self.gamma_col,
                    floor: self.floor,
                }
                .generate()?,
            ),
        };
        let meta = TruthMeta {
            version: FORMAT_VERSION.into(),
            shape,
            seed,
            generator,
        };
        Ok((shape, counts, meta))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub truth: TruthArgs,
    /// Recorded in the sidecar; the generators themselves are deterministic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let (shape, counts, meta) = args.truth.generate(args.seed)?;
    files::write_values(&args.output, shape, &counts)?;
    files::write_json(&files::meta_path(&args.output), &meta)?;
    eprintln!("wrote {} ({} pixels)", args.output.display(), counts.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Poisson mean as a fraction of the reference intensity
    #[arg(long)]
    pub noise_frac: f64,
    /// Reference intensity: peak or mean of the truth
    #[arg(long, default_value = "peak")]
    pub relative_to: RelativeTo,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn corrupt(args: &CorruptArgs) -> Result<(), CliError> {
    let (shape, truth) = files::read_counts(&args.input)?;
    let spec = CorruptionSpec {
        noise_mean_fraction: args.noise_frac,
        relative_to: args.relative_to,
        seed: args.seed,
    };
    let record = poisson_corrupt(&truth, &spec)?;
    let truth_meta_path = files::meta_path(&args.input);
    let truth_meta = if truth_meta_path.exists() {
        files::read_json::<TruthMeta>(&truth_meta_path).ok()
    } else {
        None
    };
    files::write_values(&args.output, shape, &record.measured)?;
    let meta = NoisyMeta {
        version: FORMAT_VERSION.into(),
        shape,
        source: args.input.display().to_string(),
        noise_frac: args.noise_frac,
        relative_to: args.relative_to,
        seed: args.seed,
        lambda: record.lambda_used,
        true_total: record.true_total,
        truth: truth_meta,
    };
    files::write_json(&files::meta_path(&args.output), &meta)?;
    eprintln!(
        "wrote {} (lambda {}, {} noise photons)",
        args.output.display(),
        record.lambda_used,
        record.true_total
    );
    Ok(())
}

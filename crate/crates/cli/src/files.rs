//! File helpers and the JSON sidecars written next to generated data.

use std::fs;
use std::path::{Path, PathBuf};

use noise_reversal::datagen::{GeneratorMeta, RelativeTo};
use noise_reversal::formats::{parse_counts_csv, parse_csv, to_csv};
use noise_reversal::Shape;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: &str = "1";

/// Sidecar of a generated ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthMeta {
    pub version: String,
    pub shape: Shape,
    pub seed: u64,
    #[serde(flatten)]
    pub generator: GeneratorMeta,
}

/// Sidecar of a corrupted measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoisyMeta {
    pub version: String,
    pub shape: Shape,
    pub source: String,
    pub noise_frac: f64,
    pub relative_to: RelativeTo,
    pub seed: u64,
    pub lambda: f64,
    pub true_total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthMeta>,
}

pub fn meta_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::usage(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_counts(path: &Path) -> Result<(Shape, Vec<u64>), CliError> {
    let text = read_text(path)?;
    parse_counts_csv(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn read_signed(path: &Path) -> Result<(Shape, Vec<i64>), CliError> {
    let text = read_text(path)?;
    parse_csv(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn write_values<T: std::fmt::Display>(
    path: &Path,
    shape: Shape,
    values: &[T],
) -> Result<(), CliError> {
    write_text(path, &to_csv(shape, values))
}

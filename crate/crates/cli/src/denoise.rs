use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use noise_reversal::datagen::{estimate_noise_total, NoiseTotalEstimate};
use noise_reversal::formats::to_pgm;
use noise_reversal::pipeline::{
    denoise_1d, denoise_1d_blocked, denoise_2d, BlockedOptions, HardwareProfile, SweepOptions,
    UnitDiagnostic,
};
use noise_reversal::smoothness::build_cost_form;
use noise_reversal::{
    BoundaryPolicy, DenoiseResult, Image2D, MeasuredFrame, Shape, SolveReport,
};
use serde::Serialize;

use crate::config::{BudgetMode, ExperimentConfig, PipelineArgs};
use crate::error::CliError;
use crate::files::{self, NoisyMeta, FORMAT_VERSION};

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Output directory for recovered.csv, noise.csv and report.json
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Total number of noise photons
    #[arg(long, conflicts_with = "from_meta")]
    pub noise_total: Option<u64>,
    /// Corruption sidecar; supplies the exact total, or λ with --estimate
    #[arg(long)]
    pub from_meta: Option<PathBuf>,
    /// Estimate the total instead, e.g. `off-period:200`
    #[arg(long, conflicts_with = "noise_total")]
    pub estimate: Option<String>,
    /// Background rate for --estimate when no sidecar is given
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the mapped cost polynomial as JSON (1D only)
    #[arg(long)]
    pub dump_energy: Option<PathBuf>,
    /// Also write the recovered image as plain PGM (2D only)
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

impl DenoiseArgs {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = self.pipeline.load()?;
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        if let Some(p) = &self.output {
            cfg.output = Some(p.clone());
        }
        if let Some(n) = self.noise_total {
            cfg.noise_total = Some(n);
            cfg.meta = None;
        }
        if let Some(p) = &self.from_meta {
            cfg.meta = Some(p.clone());
            cfg.noise_total = None;
        }
        if let Some(spec) = &self.estimate {
            let samples = spec
                .strip_prefix("off-period:")
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| {
                    CliError::usage(format!("--estimate expects off-period:K, got '{spec}'"))
                })?;
            cfg.budget_mode = BudgetMode::OffPeriod;
            cfg.off_period_samples = samples;
        }
        if let Some(l) = self.lambda {
            cfg.lambda = Some(l);
        }
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(p) = &self.dump_energy {
            cfg.dump_energy = Some(p.clone());
        }
        if let Some(p) = &self.pgm {
            cfg.pgm = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BudgetSource {
    Explicit,
    Meta { path: String },
    OffPeriod { samples: usize, lambda: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(rename = "1d")]
    Single,
    Blocked,
    #[serde(rename = "2d")]
    Grid,
}

pub fn resolve_budget(cfg: &ExperimentConfig, pixels: usize) -> Result<(u64, BudgetSource), CliError> {
    let meta = match &cfg.meta {
        Some(path) => Some((path, files::read_json::<NoisyMeta>(path)?)),
        None => None,
    };
    match cfg.budget_mode {
        BudgetMode::Exact => match (cfg.noise_total, meta) {
            (Some(n), _) => Ok((n, BudgetSource::Explicit)),
            (None, Some((path, m))) => Ok((
                m.true_total,
                BudgetSource::Meta {
                    path: path.display().to_string(),
                },
            )),
            (None, None) => Err(CliError::usage(
                "no noise total: pass --noise-total, --from-meta or --estimate",
            )),
        },
        BudgetMode::OffPeriod => {
            let lambda = cfg
                .lambda
                .or(meta.as_ref().map(|(_, m)| m.lambda))
                .ok_or_else(|| CliError::usage("off-period estimation needs --lambda or --from-meta"))?;
            let seed = cfg.solver_config().seed;
            let n = estimate_noise_total(NoiseTotalEstimate::OffPeriod {
                pixels,
                lambda,
                samples: cfg.off_period_samples,
                seed,
            })?;
            Ok((
                n,
                BudgetSource::OffPeriod {
                    samples: cfg.off_period_samples,
                    lambda,
                    seed,
                },
            ))
        }
    }
}

/// Picks 1D, blocked or 2D mode from the data shape and config, and runs it.
pub fn run_pipeline(
    shape: Shape,
    counts: &[u64],
    noise_total: u64,
    cfg: &ExperimentConfig,
) -> Result<(Mode, DenoiseResult), CliError> {
    let solver = cfg.solver_config();
    match shape {
        Shape::Line { .. } => {
            let frame = MeasuredFrame::new(counts.to_vec())?;
            match cfg.block_size {
                Some(block_size) => {
                    if cfg.boundary != BoundaryPolicy::Interior {
                        return Err(CliError::usage("blocked mode always uses the interior boundary"));
                    }
                    let opts = BlockedOptions {
                        budget_policy: cfg.budget_policy,
                        ..BlockedOptions::new(block_size, cfg.passes)
                    };
                    Ok((Mode::Blocked, denoise_1d_blocked(&frame, noise_total, &opts, &solver)?))
                }
                None => Ok((Mode::Single, denoise_1d(&frame, noise_total, cfg.boundary, &solver)?)),
            }
        }
        Shape::Grid { rows, cols } => {
            let image = Image2D::new(rows, cols, counts.to_vec())?;
            let opts = SweepOptions {
                sweeps: cfg.sweeps,
                budget_policy: cfg.budget_policy,
                cross_column_weight: cfg.cross_column_weight,
                boundary: cfg.boundary,
            };
            Ok((Mode::Grid, denoise_2d(&image, noise_total, &opts, &solver)?))
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DenoiseReport<'a> {
    pub version: &'static str,
    pub mode: Mode,
    pub shape: Shape,
    pub noise_total: u64,
    pub budget_source: BudgetSource,
    pub final_cost: f64,
    pub passes_completed: usize,
    pub objective_history: &'a [f64],
    pub diagnostics: &'a [UnitDiagnostic],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_report: Option<SolveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hardware_warnings: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pgm_clamped: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    pub config: &'a ExperimentConfig,
}

impl<'a> DenoiseReport<'a> {
    pub fn new(
        cfg: &'a ExperimentConfig,
        mode: Mode,
        noise_total: u64,
        budget_source: BudgetSource,
        result: &'a DenoiseResult,
    ) -> Self {
        let solve_report = result.solve_report.clone().map(|mut r| {
            if !cfg.record_timing {
                r.wall_time = 0.0;
            }
            r
        });
        DenoiseReport {
            version: FORMAT_VERSION,
            mode,
            shape: result.shape,
            noise_total,
            budget_source,
            final_cost: result.final_cost,
            passes_completed: result.passes_completed,
            objective_history: &result.objective_history,
            diagnostics: &result.diagnostics,
            solve_report,
            hardware_warnings: None,
            pgm_clamped: None,
            wall_time: None,
            config: cfg,
        }
    }
}

/// Writes recovered.csv, noise.csv and report.json into `dir`.
pub fn write_outputs(dir: &Path, result: &DenoiseResult, report: &DenoiseReport<'_>) -> Result<(), CliError> {
    files::write_values(&dir.join("recovered.csv"), result.shape, &result.recovered)?;
    files::write_values(&dir.join("noise.csv"), result.shape, &result.noise_field)?;
    files::write_json(&dir.join("report.json"), report)
}

pub fn denoise(args: &DenoiseArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = args.config()?;
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::usage("no input: pass -i/--input"))?;
    let output = cfg
        .output
        .clone()
        .ok_or_else(|| CliError::usage("no output directory: pass -o/--output"))?;
    let (shape, counts) = files::read_counts(&input)?;
    let (noise_total, source) = resolve_budget(&cfg, counts.len())?;

    if let Some(path) = &cfg.dump_energy {
        let Shape::Line { .. } = shape else {
            return Err(CliError::usage("--dump-energy needs a 1D frame"));
        };
        let frame = MeasuredFrame::new(counts.clone())?;
        let poly = build_cost_form(&frame, cfg.boundary, noise_total)?;
        files::write_text(path, &format!("{}\n", poly.to_json()))?;
    }
    if cfg.pgm.is_some() && !matches!(shape, Shape::Grid { .. }) {
        return Err(CliError::usage("--pgm needs a 2D image"));
    }

    let (mode, result) = run_pipeline(shape, &counts, noise_total, &cfg)?;
    let mut report = DenoiseReport::new(&cfg, mode, noise_total, source, &result);

    if cfg.hardware_profile_check {
        let warnings: Vec<String> = HardwareProfile::default()
            .check_result(&result)
            .iter()
            .map(ToString::to_string)
            .collect();
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        report.hardware_warnings = Some(warnings);
    }
    if let (Some(path), Shape::Grid { rows, cols }) = (&cfg.pgm, shape) {
        let (text, clamped) = to_pgm(rows, cols, &result.recovered);
        files::write_text(path, &text)?;
        report.pgm_clamped = Some(clamped);
    }
    if cfg.record_timing {
        report.wall_time = Some(started.elapsed().as_secs_f64());
    }
    write_outputs(&output, &result, &report)?;
    eprintln!(
        "denoised {} with {} noise photons, final cost {}",
        input.display(),
        noise_total,
        result.final_cost
    );
    Ok(())
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use noise_reversal::datagen::{poisson_corrupt, CorruptionSpec, RelativeTo};
use noise_reversal::metrics::ImprovementFactor;
use noise_reversal::Shape;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BudgetMode, ExperimentConfig, PipelineArgs};
use crate::data::{TruthArgs, TruthKind};
use crate::denoise::{resolve_budget, run_pipeline, write_outputs, DenoiseReport};
use crate::error::CliError;
use crate::evaluate::{evaluation, EvaluationReport};
use crate::files::{self, NoisyMeta, FORMAT_VERSION};

/// Full description of a sweep, loadable with `--plan`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub relative_to: RelativeTo,
    pub truth: TruthArgs,
    #[serde(default)]
    pub denoise: ExperimentConfig,
    #[serde(default)]
    pub edge_trim: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep plan (fractions, seeds, truth, denoise options)
    #[arg(long, conflicts_with_all = ["fractions", "seeds", "num_seeds", "kind", "trim", "relative_to"])]
    pub plan: Option<PathBuf>,
    /// Comma-separated noise fractions
    #[arg(long, value_delimiter = ',')]
    pub fractions: Vec<f64>,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',', conflicts_with = "num_seeds")]
    pub seeds: Vec<u64>,
    /// Use seeds 0..N
    #[arg(long)]
    pub num_seeds: Option<u64>,
    #[arg(long, default_value = "peak")]
    pub relative_to: RelativeTo,
    #[arg(long, default_value_t = 0)]
    pub trim: usize,
    #[command(flatten)]
    pub truth: TruthArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

impl SweepArgs {
    fn plan(&self) -> Result<SweepPlan, CliError> {
        let mut plan = match &self.plan {
            Some(path) => files::read_json::<SweepPlan>(path)?,
            None => SweepPlan {
                fractions: self.fractions.clone(),
                seeds: match self.num_seeds {
                    Some(n) => (0..n).collect(),
                    None => self.seeds.clone(),
                },
                relative_to: self.relative_to,
                truth: self.truth.clone(),
                denoise: ExperimentConfig::default(),
                edge_trim: self.trim,
            },
        };
        if let Some(path) = &self.pipeline.config {
            plan.denoise = files::read_json(path)?;
        }
        self.pipeline.apply(&mut plan.denoise);
        if plan.fractions.is_empty() {
            return Err(CliError::usage("the sweep needs at least one noise fraction"));
        }
        if plan.seeds.is_empty() {
            return Err(CliError::usage("the sweep needs at least one seed"));
        }
        if let Some(f) = plan.fractions.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
            return Err(CliError::usage(format!("invalid noise fraction {f}")));
        }
        plan.denoise.validate()?;
        Ok(plan)
    }
}

struct RunRow {
    fraction: f64,
    seed: u64,
    outcome: Result<(EvaluationReport, f64), String>,
}

fn run_dir(root: &Path, fraction: f64, seed: u64) -> PathBuf {
    root.join(format!("f{fraction}-s{seed}"))
}

fn run_one(
    plan: &SweepPlan,
    shape: Shape,
    truth: &[u64],
    root: &Path,
    fraction: f64,
    seed: u64,
) -> Result<(EvaluationReport, f64), CliError> {
    let started = Instant::now();
    let dir = run_dir(root, fraction, seed);
    let spec = CorruptionSpec {
        noise_mean_fraction: fraction,
        relative_to: plan.relative_to,
        seed,
    };
    let record = poisson_corrupt(truth, &spec)?;
    let noisy = dir.join("noisy.csv");
    files::write_values(&noisy, shape, &record.measured)?;
    let meta_path = files::meta_path(&noisy);
    files::write_json(
        &meta_path,
        &NoisyMeta {
            version: FORMAT_VERSION.into(),
            shape,
            source: "truth.csv".into(),
            noise_frac: fraction,
            relative_to: plan.relative_to,
            seed,
            lambda: record.lambda_used,
            true_total: record.true_total,
            truth: None,
        },
    )?;

    let mut cfg = plan.denoise.clone();
    cfg.seed = Some(seed);
    cfg.input = None;
    cfg.output = None;
    cfg.pgm = None;
    cfg.dump_energy = None;
    match cfg.budget_mode {
        BudgetMode::Exact => {
            cfg.noise_total = Some(record.true_total);
            cfg.meta = None;
        }
        BudgetMode::OffPeriod => {
            cfg.noise_total = None;
            cfg.meta = None;
            cfg.lambda = Some(record.lambda_used);
        }
    }
    let (noise_total, source) = resolve_budget(&cfg, truth.len())?;
    let (mode, result) = run_pipeline(shape, &record.measured, noise_total, &cfg)?;
    let report = DenoiseReport::new(&cfg, mode, noise_total, source, &result);
    write_outputs(&dir, &result, &report)?;
    let eval = evaluation(
        shape,
        truth,
        &record.measured,
        &result.recovered,
        plan.edge_trim,
        cfg.boundary,
    )?;
    files::write_json(&dir.join("metrics.json"), &eval)?;
    Ok((eval, started.elapsed().as_secs_f64()))
}

fn factor_text(f: ImprovementFactor) -> String {
    if f.is_infinite() {
        "inf".into()
    } else {
        f.0.to_string()
    }
}

fn aggregate_csv(rows: &[RunRow], record_timing: bool) -> String {
    let mut out =
        String::from("fraction,seed,status,rmse_noisy,rmse_recovered,improvement_factor,wall_time\n");
    for row in rows {
        match &row.outcome {
            Ok((eval, wall)) => {
                let m = &eval.metrics;
                let wall = if record_timing { format!("{wall:.3}") } else { String::new() };
                let _ = writeln!(
                    out,
                    "{},{},ok,{},{},{},{}",
                    row.fraction,
                    row.seed,
                    m.rmse_noisy,
                    m.rmse_recovered,
                    factor_text(m.improvement_factor),
                    wall
                );
            }
            Err(msg) => {
                let clean: String = msg
                    .chars()
                    .map(|c| if c == ',' || c == '\n' { ';' } else { c })
                    .collect();
                let _ = writeln!(out, "{},{},error: {clean},,,,", row.fraction, row.seed);
            }
        }
    }
    out
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    })
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let plan = sweep_plan_checked(args)?;
    let root = &args.output;
    let (shape, truth, meta) = plan.truth.generate(0)?;
    files::write_values(&root.join("truth.csv"), shape, &truth)?;
    files::write_json(&files::meta_path(&root.join("truth.csv")), &meta)?;
    files::write_json(&root.join("plan.json"), &plan)?;

    let jobs: Vec<(f64, u64)> = plan
        .fractions
        .iter()
        .flat_map(|&f| plan.seeds.iter().map(move |&s| (f, s)))
        .collect();
    let rows: Vec<RunRow> = jobs
        .par_iter()
        .map(|&(fraction, seed)| RunRow {
            fraction,
            seed,
            outcome: run_one(&plan, shape, &truth, root, fraction, seed).map_err(|e| e.to_string()),
        })
        .collect();

    files::write_text(
        &root.join("aggregate.csv"),
        &aggregate_csv(&rows, plan.denoise.record_timing),
    )?;
    for &f in &plan.fractions {
        let factors: Vec<f64> = rows
            .iter()
            .filter(|r| r.fraction == f)
            .filter_map(|r| r.outcome.as_ref().ok())
            .map(|(e, _)| e.metrics.improvement_factor.0)
            .collect();
        if let Some(m) = median(factors) {
            eprintln!("fraction {f}: median improvement {m:.3}");
        }
    }
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        for row in rows.iter().filter(|r| r.outcome.is_err()) {
            if let Err(msg) = &row.outcome {
                eprintln!("run f{} s{} failed: {msg}", row.fraction, row.seed);
            }
        }
        return Err(CliError::Partial {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

fn sweep_plan_checked(args: &SweepArgs) -> Result<SweepPlan, CliError> {
    let plan = args.plan()?;
    if plan.truth.kind == TruthKind::Sin2d && plan.denoise.block_size.is_some() {
        return Err(CliError::usage("block size applies to 1D truths only"));
    }
    Ok(plan)
}

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polynomial::{CubicTerm, QuadraticTerm, SumConstrainedPolynomial};

use super::{integer_local_search, largest_remainder, RestartStats, SolveReport, SolverConfig};

struct RestartOutcome {
    best: Option<(Vec<u64>, f64)>,
    trace: Vec<f64>,
    stats: RestartStats,
}

/// Random point on the scaled simplex, Dirichlet(α) distributed.
fn dirichlet_start(p: usize, total: f64, alpha: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive concentration");
    let mut v: Vec<f64> = (0..p).map(|_| gamma.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x *= total / s);
    } else {
        v.iter_mut().for_each(|x| *x = total / p as f64);
    }
    v
}

/// Gershgorin bound on the Hessian row sums at `v`, times the largest entry of `v`.
///
/// Dividing the gradient by this scale keeps the linearized multiplicative map
/// `δv ≈ −η diag(v) H δv` contracting for any instance scale, without moving its
/// fixed points (the scale is shared by every coordinate).
fn curvature_scale(poly: &SumConstrainedPolynomial, v: &[f64], rows: &mut [f64]) -> f64 {
    rows.iter_mut().for_each(|r| *r = 0.0);
    for &QuadraticTerm(i, j, w) in &poly.quadratic {
        if i == j {
            rows[i] += 2.0 * w.abs();
        } else {
            rows[i] += w.abs();
            rows[j] += w.abs();
        }
    }
    for &CubicTerm(i, j, k, w) in &poly.cubic {
        let w = w.abs();
        rows[i] += w * (v[j] + v[k]);
        rows[j] += w * (v[i] + v[k]);
        rows[k] += w * (v[i] + v[j]);
    }
    let lipschitz = rows.iter().copied().fold(0.0, f64::max);
    let vmax = v.iter().copied().fold(0.0, f64::max);
    (lipschitz * vmax).max(1.0)
}

/// One multiplicative update `v_i ← v_i · exp(−η g_i + σ ξ_i)`, renormalized to `total`.
/// `grad` is expected pre-scaled. Returns false if the update degenerated.
fn step(
    v: &mut [f64],
    grad: &[f64],
    eta: f64,
    sigma: f64,
    total: f64,
    rng: &mut ChaCha8Rng,
    exponent: &mut [f64],
) -> bool {
    let mut top = f64::NEG_INFINITY;
    for i in 0..v.len() {
        let xi: f64 = if sigma > 0.0 {
            StandardNormal.sample(rng)
        } else {
            0.0
        };
        let a = -eta * grad[i] + sigma * xi;
        exponent[i] = a;
        if v[i] > 0.0 && a > top {
            top = a;
        }
    }
    if !top.is_finite() {
        return false;
    }
    let mut sum = 0.0;
    for (x, a) in v.iter_mut().zip(exponent.iter()) {
        *x *= (a - top).exp();
        sum += *x;
    }
    if !(sum > 0.0 && sum.is_finite()) {
        return false;
    }
    let scale = total / sum;
    v.iter_mut().for_each(|x| *x *= scale);
    true
}

fn run_restart(poly: &SumConstrainedPolynomial, config: &SolverConfig, restart: usize) -> RestartOutcome {
    let p = poly.num_vars;
    let total = poly.sum_budget as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);

    let mut v = dirichlet_start(p, total, config.dirichlet_concentration, &mut rng);
    let mut grad = vec![0.0; p];
    let mut scratch = vec![0.0; p];
    let mut trace = Vec::with_capacity(config.max_iterations + 1);
    let mut sigma = config.noise_initial;
    let mut converged = false;
    let mut iterations = 0;
    let aborted = |iterations, trace| RestartOutcome {
        best: None,
        trace,
        stats: RestartStats {
            final_energy: None,
            iterations_used: iterations,
            converged: false,
            aborted: true,
        },
    };

    let e0 = poly.energy_unchecked(&v);
    if !e0.is_finite() {
        return aborted(0, trace);
    }
    trace.push(e0);
    let mut rows = vec![0.0; p];
    while iterations < config.max_iterations {
        poly.gradient_into(&v, &mut grad);
        let scale = curvature_scale(poly, &v, &mut rows);
        grad.iter_mut().for_each(|g| *g /= scale);
        if !step(&mut v, &grad, config.step_size, sigma, total, &mut rng, &mut scratch) {
            return aborted(iterations, trace);
        }
        iterations += 1;
        sigma *= config.noise_decay;
        let e = poly.energy_unchecked(&v);
        if !e.is_finite() {
            return aborted(iterations, trace);
        }
        trace.push(e);
        let w = config.convergence_window;
        if trace.len() > w {
            let prev = trace[trace.len() - 1 - w];
            if (e - prev).abs() <= config.convergence_tol * e.abs().max(prev.abs()).max(1.0) {
                converged = true;
                break;
            }
        }
    }

    let rounded = largest_remainder(&v, poly.sum_budget);
    let polished = match integer_local_search(poly, &rounded, config.moves_for(p)) {
        Ok(x) => x,
        Err(_) => return aborted(iterations, trace),
    };
    match poly.evaluate_counts(&polished) {
        Ok(e) => RestartOutcome {
            best: Some((polished, e)),
            trace,
            stats: RestartStats {
                final_energy: Some(e),
                iterations_used: iterations,
                converged,
                aborted: false,
            },
        },
        Err(_) => aborted(iterations, trace),
    }
}

/// Restarted mean-field minimization over the integer simplex `{x ≥ 0, Σx = N}`.
///
/// Each restart draws a Dirichlet start, runs annealed multiplicative mirror
/// descent, then rounds by largest remainder and polishes with
/// [`integer_local_search`]. Restart `r` draws from ChaCha stream `r` of the
/// configured seed, so results do not depend on scheduling. The best restart
/// wins, lower index on ties.
pub fn mean_field_solve(poly: &SumConstrainedPolynomial, config: &SolverConfig) -> Result<SolveReport> {
    let started = Instant::now();
    poly.validated()?;
    config.validate()?;
    let p = poly.num_vars;

    if poly.sum_budget == 0 {
        let best = vec![0; p];
        let best_energy = poly.evaluate_counts(&best)?;
        return Ok(SolveReport {
            best,
            best_energy,
            per_restart: Vec::new(),
            energy_trace: vec![best_energy],
            wall_time: started.elapsed().as_secs_f64(),
            seed: config.seed,
        });
    }

    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(poly, config, r))
        .collect();

    let winner = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.best.as_ref().map(|(_, e)| (i, *e)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let Some(winner) = winner else {
        return Err(Error::AllRestartsAborted(config.restarts));
    };

    let per_restart = outcomes.iter().map(|o| o.stats.clone()).collect();
    let mut outcomes = outcomes;
    let won = outcomes.swap_remove(winner);
    let (best, best_energy) = won.best.expect("winner has a result");
    Ok(SolveReport {
        best,
        best_energy,
        per_restart,
        energy_trace: won.trace,
        wall_time: started.elapsed().as_secs_f64(),
        seed: config.seed,
    })
}

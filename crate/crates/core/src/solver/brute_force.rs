use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::SumConstrainedPolynomial;

pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 5_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub best: Vec<u64>,
    pub energy: f64,
    pub enumerated: u128,
}

/// Number of weak compositions of `total` into `parts` parts, `C(total+parts−1, parts−1)`,
/// saturating at `u128::MAX`.
pub fn composition_count(total: u64, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(total == 0);
    }
    let k = (parts - 1) as u128;
    let n = total as u128 + k;
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Advances `x` to its lexicographic successor among compositions with the same sum.
/// Returns false when `x` was the last one.
fn next_composition(x: &mut [u64]) -> bool {
    let p = x.len();
    let Some(t) = (1..p).rev().find(|&t| x[t] > 0) else {
        return false;
    };
    let rest = x[t];
    x[t] = 0;
    x[t - 1] += 1;
    x[p - 1] = rest - 1;
    true
}

/// Minimum over compositions with fixed head `x[0] = head`, in lexicographic order.
fn scan_with_head(poly: &SumConstrainedPolynomial, head: u64) -> (Vec<u64>, f64, u128) {
    let p = poly.num_vars;
    let mut x = vec![0u64; p];
    x[0] = head;
    if p > 1 {
        x[p - 1] = poly.sum_budget - head;
    }
    let mut v: Vec<f64> = x.iter().map(|&c| c as f64).collect();
    let mut best = x.clone();
    let mut best_e = poly.energy_unchecked(&v);
    let mut count = 1u128;
    if p < 2 {
        return (best, best_e, count);
    }
    let tail = &mut x[1..];
    while next_composition(tail) {
        for (dst, &src) in v[1..].iter_mut().zip(tail.iter()) {
            *dst = src as f64;
        }
        let e = poly.energy_unchecked(&v);
        count += 1;
        if e < best_e {
            best_e = e;
            best[1..].copy_from_slice(tail);
        }
    }
    (best, best_e, count)
}

/// Exact minimum by enumerating every weak composition of the budget.
///
/// Ties go to the lexicographically smallest assignment. Refuses instances
/// with more than `cap` compositions.
pub fn brute_force(poly: &SumConstrainedPolynomial, cap: u128) -> Result<BruteForceResult> {
    poly.validated()?;
    let count = composition_count(poly.sum_budget, poly.num_vars);
    if count > cap {
        return Err(Error::TooManyCompositions { count, cap });
    }
    let n = poly.sum_budget;
    let parts: Vec<(Vec<u64>, f64, u128)> = (0..=n)
        .into_par_iter()
        .map(|head| scan_with_head(poly, head))
        .collect();
    let mut enumerated = 0;
    let mut best: Option<(Vec<u64>, f64)> = None;
    for (x, e, c) in parts {
        enumerated += c;
        if best.as_ref().is_none_or(|(_, be)| e < *be) {
            best = Some((x, e));
        }
    }
    let (best, energy) = best.expect("at least one composition");
    if !energy.is_finite() {
        return Err(Error::NumericOverflow(format!("optimum energy is {energy}")));
    }
    Ok(BruteForceResult {
        best,
        energy,
        enumerated,
    })
}

use crate::error::Result;
use crate::polynomial::{Couplings, CubicTerm, SumConstrainedPolynomial};

use super::check_feasible;

/// Integer state with the linear+quadratic gradient kept current, so a unit
/// move `i → j` can be priced without re-evaluating the energy.
struct MoveState<'a> {
    poly: &'a SumConstrainedPolynomial,
    couplings: Couplings,
    counts: Vec<u64>,
    grad: Vec<f64>,
}

impl<'a> MoveState<'a> {
    fn new(poly: &'a SumConstrainedPolynomial, counts: Vec<u64>) -> Self {
        let couplings = Couplings::new(poly);
        let mut state = MoveState {
            poly,
            couplings,
            counts,
            grad: vec![0.0; poly.num_vars],
        };
        state.refresh_gradient();
        state
    }

    fn refresh_gradient(&mut self) {
        let p = self.poly;
        for i in 0..p.num_vars {
            let mut g = p.linear[i] + 2.0 * self.couplings.diag[i] * self.counts[i] as f64;
            for &(k, w) in &self.couplings.neighbors[i] {
                g += w * self.counts[k] as f64;
            }
            self.grad[i] = g;
        }
    }

    fn value(&self, k: usize, from: usize, to: usize) -> f64 {
        let mut v = self.counts[k] as f64;
        if k == from {
            v -= 1.0;
        }
        if k == to {
            v += 1.0;
        }
        v
    }

    /// Energy change of moving one unit from `from` to `to`.
    fn delta(&self, from: usize, to: usize) -> f64 {
        let c = &self.couplings;
        let mut d = self.grad[to] - self.grad[from] + c.diag[from] + c.diag[to]
            - c.pair_weight(from, to);
        if !self.poly.cubic.is_empty() {
            let touched = c.cubic_by_var[from]
                .iter()
                .chain(c.cubic_by_var[to].iter().filter(|t| !c.cubic_by_var[from].contains(t)));
            for &t in touched {
                let CubicTerm(i, j, k, w) = self.poly.cubic[t];
                let old = self.counts[i] as f64 * self.counts[j] as f64 * self.counts[k] as f64;
                let new = self.value(i, from, to) * self.value(j, from, to) * self.value(k, from, to);
                d += w * (new - old);
            }
        }
        d
    }

    fn apply(&mut self, from: usize, to: usize) {
        self.counts[from] -= 1;
        self.counts[to] += 1;
        let c = &self.couplings;
        self.grad[from] -= 2.0 * c.diag[from];
        self.grad[to] += 2.0 * c.diag[to];
        for &(k, w) in &c.neighbors[from] {
            self.grad[k] -= w;
        }
        for &(k, w) in &c.neighbors[to] {
            self.grad[k] += w;
        }
    }
}

fn improvement_threshold(poly: &SumConstrainedPolynomial, counts: &[u64]) -> f64 {
    let e = poly.evaluate_counts(counts).unwrap_or(0.0);
    -1e-12 * (1.0 + e.abs())
}

/// First-improvement hill climbing over single-unit moves.
///
/// Pairs `(i, j)`, `i ≠ j`, are visited cyclically in row-major order; after an
/// accepted move the scan resumes at the next pair. The search stops after a
/// full cycle without improvement or after `max_moves` accepted moves.
pub fn integer_local_search(
    poly: &SumConstrainedPolynomial,
    start: &[u64],
    max_moves: usize,
) -> Result<Vec<u64>> {
    poly.validated()?;
    check_feasible(poly, start)?;
    let p = poly.num_vars;
    if p < 2 || poly.sum_budget == 0 || max_moves == 0 {
        return Ok(start.to_vec());
    }
    let mut state = MoveState::new(poly, start.to_vec());
    let threshold = improvement_threshold(poly, start);
    let cycle = p * (p - 1);
    let mut moves = 0;
    let mut since_improvement = 0;
    let (mut i, mut j) = (0usize, 1usize);
    while moves < max_moves && since_improvement < cycle {
        if state.counts[i] > 0 && state.delta(i, j) < threshold {
            state.apply(i, j);
            moves += 1;
            since_improvement = 0;
            if moves % 256 == 0 {
                state.refresh_gradient();
            }
        } else {
            since_improvement += 1;
        }
        // next ordered pair, skipping the diagonal
        j += 1;
        if j == i {
            j += 1;
        }
        if j >= p {
            i = (i + 1) % p;
            j = if i == 0 { 1 } else { 0 };
        }
    }
    Ok(state.counts)
}

/// True when no single-unit move lowers the energy by more than `tol`.
pub fn is_locally_optimal(poly: &SumConstrainedPolynomial, x: &[u64], tol: f64) -> Result<bool> {
    check_feasible(poly, x)?;
    let base = poly.evaluate_counts(x)?;
    let mut y = x.to_vec();
    for i in 0..x.len() {
        if x[i] == 0 {
            continue;
        }
        for j in 0..x.len() {
            if i == j {
                continue;
            }
            y[i] -= 1;
            y[j] += 1;
            let e = poly.evaluate_counts(&y)?;
            y[i] += 1;
            y[j] -= 1;
            if e < base - tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

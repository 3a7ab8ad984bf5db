//! Sum-constrained cubic energies over nonnegative variables.
//!
//! An energy has the form
//!
//! ```text
//! H(v) = c0 + Σ_i C_i v_i + Σ_{i≤j} J_ij v_i v_j + Σ_{i≤j≤k} T_ijk v_i v_j v_k
//! ```
//!
//! with the feasible set `{ v ≥ 0 : Σ v_i = sum_budget }`. Every sparse entry is
//! the full coefficient of its monomial: the pair `(i, j)` with `i < j` is stored
//! once, and its weight multiplies `v_i v_j` exactly once.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadratic entry `[i, j, weight]` with `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTerm(pub usize, pub usize, pub f64);

/// Cubic entry `[i, j, k, weight]` with `i <= j <= k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicTerm(pub usize, pub usize, pub usize, pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumConstrainedPolynomial {
    pub num_vars: usize,
    pub sum_budget: u64,
    pub constant: f64,
    pub linear: Vec<f64>,
    pub quadratic: Vec<QuadraticTerm>,
    #[serde(default)]
    pub cubic: Vec<CubicTerm>,
}

/// One broken invariant reported by [`SumConstrainedPolynomial::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoVariables,
    LinearLength { expected: usize, actual: usize },
    IndexOutOfRange { term: String },
    NonFiniteCoefficient { term: String },
    NonCanonicalOrder { term: String },
    DuplicateEntry { term: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVariables => write!(f, "num_vars must be at least 1"),
            Violation::LinearLength { expected, actual } => {
                write!(f, "linear has length {actual}, expected {expected}")
            }
            Violation::IndexOutOfRange { term } => write!(f, "index out of range in {term}"),
            Violation::NonFiniteCoefficient { term } => {
                write!(f, "non-finite coefficient in {term}")
            }
            Violation::NonCanonicalOrder { term } => {
                write!(f, "non-canonical index order in {term}")
            }
            Violation::DuplicateEntry { term } => write!(f, "duplicate entry {term}"),
        }
    }
}

impl SumConstrainedPolynomial {
    /// The zero energy over `num_vars` variables.
    pub fn zero(num_vars: usize, sum_budget: u64) -> Self {
        SumConstrainedPolynomial {
            num_vars,
            sum_budget,
            constant: 0.0,
            linear: vec![0.0; num_vars],
            quadratic: Vec::new(),
            cubic: Vec::new(),
        }
    }

    /// Checks every structural invariant. Never mutates.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let p = self.num_vars;
        if p == 0 {
            out.push(Violation::NoVariables);
        }
        if self.linear.len() != p {
            out.push(Violation::LinearLength {
                expected: p,
                actual: self.linear.len(),
            });
        }
        if !self.constant.is_finite() {
            out.push(Violation::NonFiniteCoefficient {
                term: "constant".into(),
            });
        }
        for (i, c) in self.linear.iter().enumerate() {
            if !c.is_finite() {
                out.push(Violation::NonFiniteCoefficient {
                    term: format!("linear[{i}]"),
                });
            }
        }
        let mut seen2 = std::collections::HashSet::new();
        for t in &self.quadratic {
            let QuadraticTerm(i, j, w) = *t;
            let term = format!("quadratic ({i}, {j})");
            if i >= p || j >= p {
                out.push(Violation::IndexOutOfRange { term: term.clone() });
            }
            if !w.is_finite() {
                out.push(Violation::NonFiniteCoefficient { term: term.clone() });
            }
            if i > j {
                out.push(Violation::NonCanonicalOrder { term: term.clone() });
            }
            if !seen2.insert((i.min(j), i.max(j))) {
                out.push(Violation::DuplicateEntry { term });
            }
        }
        let mut seen3 = std::collections::HashSet::new();
        for t in &self.cubic {
            let CubicTerm(i, j, k, w) = *t;
            let term = format!("cubic ({i}, {j}, {k})");
            if i >= p || j >= p || k >= p {
                out.push(Violation::IndexOutOfRange { term: term.clone() });
            }
            if !w.is_finite() {
                out.push(Violation::NonFiniteCoefficient { term: term.clone() });
            }
            if !(i <= j && j <= k) {
                out.push(Violation::NonCanonicalOrder { term: term.clone() });
            }
            let mut key = [i, j, k];
            key.sort_unstable();
            if !seen3.insert(key) {
                out.push(Violation::DuplicateEntry { term });
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub(crate) fn validated(&self) -> Result<()> {
        self.validate().map_err(|v| {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            Error::Contract(msgs.join("; "))
        })
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                actual: point.len(),
            });
        }
        if let Some(i) = point.iter().position(|&x| !(0.0..).contains(&x)) {
            return Err(Error::Contract(format!(
                "entry {i} is negative or NaN ({})",
                point[i]
            )));
        }
        Ok(())
    }

    /// Energy at a real-valued point.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        let e = self.energy_unchecked(point);
        if e.is_finite() {
            Ok(e)
        } else {
            Err(Error::NumericOverflow(format!("energy evaluated to {e}")))
        }
    }

    /// Energy at an integer assignment.
    pub fn evaluate_counts(&self, counts: &[u64]) -> Result<f64> {
        let point: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        self.evaluate(&point)
    }

    pub(crate) fn energy_unchecked(&self, v: &[f64]) -> f64 {
        let mut e = self.constant;
        for (c, x) in self.linear.iter().zip(v) {
            e += c * x;
        }
        for &QuadraticTerm(i, j, w) in &self.quadratic {
            e += w * v[i] * v[j];
        }
        for &CubicTerm(i, j, k, w) in &self.cubic {
            e += w * v[i] * v[j] * v[k];
        }
        e
    }

    /// Partial derivatives `∂H/∂v_i` at a real-valued point.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_point(point)?;
        let mut g = vec![0.0; self.num_vars];
        self.gradient_into(point, &mut g);
        if let Some(i) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::NumericOverflow(format!("gradient component {i} is {}", g[i])));
        }
        Ok(g)
    }

    pub(crate) fn gradient_into(&self, v: &[f64], g: &mut [f64]) {
        g.copy_from_slice(&self.linear);
        for &QuadraticTerm(i, j, w) in &self.quadratic {
            if i == j {
                g[i] += 2.0 * w * v[i];
            } else {
                g[i] += w * v[j];
                g[j] += w * v[i];
            }
        }
        for &CubicTerm(i, j, k, w) in &self.cubic {
            g[i] += w * v[j] * v[k];
            g[j] += w * v[i] * v[k];
            g[k] += w * v[i] * v[j];
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polynomial serializes")
    }

    /// Parses the JSON form and validates it.
    pub fn from_json(s: &str) -> Result<Self> {
        let poly: Self =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        poly.validated()?;
        Ok(poly)
    }

    pub fn to_builder(&self) -> PolynomialBuilder {
        let mut b = PolynomialBuilder::new(self.num_vars, self.sum_budget);
        b.add_polynomial(1.0, self);
        b
    }
}

/// Accumulates terms into canonical single-storage form.
///
/// Pairs and triples are keyed by their sorted indices, so adding `(j, i)` after
/// `(i, j)` sums into one monomial weight.
#[derive(Debug, Clone)]
pub struct PolynomialBuilder {
    num_vars: usize,
    sum_budget: u64,
    constant: f64,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    cubic: BTreeMap<(usize, usize, usize), f64>,
}

impl PolynomialBuilder {
    pub fn new(num_vars: usize, sum_budget: u64) -> Self {
        PolynomialBuilder {
            num_vars,
            sum_budget,
            constant: 0.0,
            linear: vec![0.0; num_vars],
            quadratic: BTreeMap::new(),
            cubic: BTreeMap::new(),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.num_vars {
            Err(Error::InvalidInput(format!(
                "index {i} out of range for {} variables",
                self.num_vars
            )))
        } else {
            Ok(())
        }
    }

    pub fn add_constant(&mut self, w: f64) -> &mut Self {
        self.constant += w;
        self
    }

    pub fn add_linear(&mut self, i: usize, w: f64) -> Result<&mut Self> {
        self.check_index(i)?;
        self.linear[i] += w;
        Ok(self)
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, w: f64) -> Result<&mut Self> {
        self.check_index(i)?;
        self.check_index(j)?;
        *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        Ok(self)
    }

    pub fn add_cubic(&mut self, i: usize, j: usize, k: usize, w: f64) -> Result<&mut Self> {
        self.check_index(i)?;
        self.check_index(j)?;
        self.check_index(k)?;
        let mut key = [i, j, k];
        key.sort_unstable();
        *self.cubic.entry((key[0], key[1], key[2])).or_insert(0.0) += w;
        Ok(self)
    }

    /// Adds `scale · other` coefficient-wise. Panics if the variable counts differ.
    pub fn add_polynomial(&mut self, scale: f64, other: &SumConstrainedPolynomial) -> &mut Self {
        assert_eq!(self.num_vars, other.num_vars, "variable count mismatch");
        self.constant += scale * other.constant;
        for (a, b) in self.linear.iter_mut().zip(&other.linear) {
            *a += scale * b;
        }
        for &QuadraticTerm(i, j, w) in &other.quadratic {
            *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += scale * w;
        }
        for &CubicTerm(i, j, k, w) in &other.cubic {
            let mut key = [i, j, k];
            key.sort_unstable();
            *self.cubic.entry((key[0], key[1], key[2])).or_insert(0.0) += scale * w;
        }
        self
    }

    /// Finishes the polynomial. Entries whose weight cancelled to exactly zero are dropped.
    pub fn build(&self) -> SumConstrainedPolynomial {
        SumConstrainedPolynomial {
            num_vars: self.num_vars,
            sum_budget: self.sum_budget,
            constant: self.constant,
            linear: self.linear.clone(),
            quadratic: self
                .quadratic
                .iter()
                .filter(|(_, &w)| w != 0.0)
                .map(|(&(i, j), &w)| QuadraticTerm(i, j, w))
                .collect(),
            cubic: self
                .cubic
                .iter()
                .filter(|(_, &w)| w != 0.0)
                .map(|(&(i, j, k), &w)| CubicTerm(i, j, k, w))
                .collect(),
        }
    }
}

/// Per-variable view of the couplings used by the solvers.
///
/// Quadratic weights are split into the diagonal and symmetric off-diagonal
/// neighbor lists; cubic entries are indexed by every variable they touch.
#[derive(Debug, Clone)]
pub(crate) struct Couplings {
    pub diag: Vec<f64>,
    pub neighbors: Vec<Vec<(usize, f64)>>,
    pub cubic_by_var: Vec<Vec<usize>>,
}

impl Couplings {
    pub fn new(poly: &SumConstrainedPolynomial) -> Self {
        let p = poly.num_vars;
        let mut diag = vec![0.0; p];
        let mut neighbors = vec![Vec::new(); p];
        for &QuadraticTerm(i, j, w) in &poly.quadratic {
            if i == j {
                diag[i] += w;
            } else {
                neighbors[i].push((j, w));
                neighbors[j].push((i, w));
            }
        }
        let mut cubic_by_var = vec![Vec::new(); p];
        for (t, &CubicTerm(i, j, k, _)) in poly.cubic.iter().enumerate() {
            for v in [i, j, k] {
                if cubic_by_var[v].last() != Some(&t) {
                    cubic_by_var[v].push(t);
                }
            }
        }
        Couplings {
            diag,
            neighbors,
            cubic_by_var,
        }
    }

    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        self.neighbors[i]
            .iter()
            .filter(|(k, _)| *k == j)
            .map(|(_, w)| w)
            .sum()
    }
}

//! Problem abstractions: SPD quadratics and general differentiable objectives.
//!
//! Evaluation counters live with the problem rather than the solver, so every
//! probe made by a line search is counted exactly once. A problem that is
//! shared between concurrent runs is cloned per run; cloning resets nothing,
//! call [`EvalCounter::reset`] explicitly when needed.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{dot, norm2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("diagonal entry {index} is not strictly positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("entry ({row}, {col}) lies outside a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("operator dimension must be positive")]
    Empty,
    #[error("stated solution has residual {residual:e} > 1e-8 * |b|")]
    InconsistentSolution { residual: f64 },
}

/// Storage behind an [`SpdOperator`].
#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major `n x n`, symmetric.
    Dense(Vec<f64>),
    Diagonal(Vec<f64>),
    /// Lower triangle (row >= col) in compressed-row form.
    Sparse {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// A symmetric positive definite linear map.
///
/// Positive definiteness is not certified at construction; the quadratic solver
/// reports a diagnostic the first time it observes `s'y <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdOperator {
    n: usize,
    storage: Storage,
}

impl SpdOperator {
    /// Dense symmetric matrix from row-major data. Entries whose transpose
    /// differs by more than `1e-12 * max|a_ij|` are rejected; the rest are
    /// symmetrized by averaging.
    pub fn dense(n: usize, data: Vec<f64>) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::Empty);
        }
        if data.len() != n * n {
            return Err(ProblemError::DimensionMismatch { expected: n * n, found: data.len() });
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut data = data;
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(ProblemError::Asymmetric { row: i, col: j });
                }
                let avg = 0.5 * (a + b);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(Self { n, storage: Storage::Dense(data) })
    }

    pub fn diagonal(diag: Vec<f64>) -> Result<Self, ProblemError> {
        if diag.is_empty() {
            return Err(ProblemError::Empty);
        }
        if let Some((index, &value)) = diag.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(ProblemError::NonPositiveDiagonal { index, value });
        }
        Ok(Self { n: diag.len(), storage: Storage::Diagonal(diag) })
    }

    /// Sparse symmetric matrix from 0-based `(row, col, value)` triplets
    /// covering one triangle. Entries from either triangle are folded onto
    /// the lower one and duplicates are summed.
    pub fn sparse_from_triangle(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::Empty);
        }
        let mut entries = Vec::new();
        for (r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(ProblemError::IndexOutOfRange { row: r, col: c, n });
            }
            entries.push((r.max(c), r.min(c), v));
        }
        entries.sort_by_key(|a| (a.0, a.1));

        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *vals.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, storage: Storage::Sparse { row_ptr, cols, vals } })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn storage_kind(&self) -> &'static str {
        match self.storage {
            Storage::Dense(_) => "dense",
            Storage::Diagonal(_) => "diagonal",
            Storage::Sparse { .. } => "sparse",
        }
    }

    /// Diagonal entries when the operator is stored as a diagonal.
    pub fn as_diagonal(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    /// Computes `A v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.check_dim(v.len())?;
        let mut out = vec![0.0; self.n];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// Computes `out = A v`. Lengths must equal [`dim`](Self::dim).
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        match &self.storage {
            Storage::Dense(a) => {
                for (row, o) in a.chunks_exact(self.n).zip(out.iter_mut()) {
                    *o = dot(row, v);
                }
            }
            Storage::Diagonal(d) => {
                for ((o, di), vi) in out.iter_mut().zip(d).zip(v) {
                    *o = di * vi;
                }
            }
            Storage::Sparse { row_ptr, cols, vals } => {
                out.fill(0.0);
                for i in 0..self.n {
                    let mut acc = 0.0;
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        let j = cols[k];
                        acc += vals[k] * v[j];
                        if j != i {
                            out[j] += vals[k] * v[i];
                        }
                    }
                    out[i] += acc;
                }
            }
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        match &self.storage {
            Storage::Dense(a) => a.clone(),
            Storage::Diagonal(d) => {
                let mut a = vec![0.0; n * n];
                for (i, di) in d.iter().enumerate() {
                    a[i * n + i] = *di;
                }
                a
            }
            Storage::Sparse { .. } => {
                let mut a = vec![0.0; n * n];
                for (i, j, v) in self.lower_triplets() {
                    a[i * n + j] += v;
                    if i != j {
                        a[j * n + i] += v;
                    }
                }
                a
            }
        }
    }

    /// Nonzero entries of the lower triangle as 0-based `(row, col, value)`.
    pub fn lower_triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        match &self.storage {
            Storage::Dense(a) => (0..n)
                .flat_map(|i| (0..=i).map(move |j| (i, j)))
                .filter_map(|(i, j)| {
                    let v = a[i * n + j];
                    (v != 0.0).then_some((i, j, v))
                })
                .collect(),
            Storage::Diagonal(d) => d.iter().enumerate().map(|(i, v)| (i, i, *v)).collect(),
            Storage::Sparse { row_ptr, cols, vals } => (0..n)
                .flat_map(|i| (row_ptr[i]..row_ptr[i + 1]).map(move |k| (i, k)))
                .map(|(i, k)| (i, cols[k], vals[k]))
                .collect(),
        }
    }

    /// `A + shift * I`, keeping the storage kind.
    pub fn shifted(&self, shift: f64) -> Result<Self, ProblemError> {
        match &self.storage {
            Storage::Dense(a) => {
                let mut a = a.clone();
                for i in 0..self.n {
                    a[i * self.n + i] += shift;
                }
                Ok(Self { n: self.n, storage: Storage::Dense(a) })
            }
            Storage::Diagonal(d) => Self::diagonal(d.iter().map(|v| v + shift).collect()),
            Storage::Sparse { .. } => {
                let diag = (0..self.n).map(|i| (i, i, shift));
                Self::sparse_from_triangle(self.n, self.lower_triplets().into_iter().chain(diag))
            }
        }
    }

    /// `factor * A` for `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(a) => Storage::Dense(a.iter().map(|v| v * factor).collect()),
            Storage::Diagonal(d) => Storage::Diagonal(d.iter().map(|v| v * factor).collect()),
            Storage::Sparse { row_ptr, cols, vals } => Storage::Sparse {
                row_ptr: row_ptr.clone(),
                cols: cols.clone(),
                vals: vals.iter().map(|v| v * factor).collect(),
            },
        };
        Self { n: self.n, storage }
    }

    /// Smallest and largest eigenvalue, available for diagonal storage only.
    pub fn diagonal_extremes(&self) -> Option<(f64, f64)> {
        let d = self.as_diagonal()?;
        let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    fn check_dim(&self, found: usize) -> Result<(), ProblemError> {
        if found != self.n {
            return Err(ProblemError::DimensionMismatch { expected: self.n, found });
        }
        Ok(())
    }
}

/// Objective and gradient evaluation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounter {
    pub n_f: u64,
    pub n_g: u64,
}

impl EvalCounter {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// `min 1/2 x'Ax - b'x` with SPD `A`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub name: String,
    a: SpdOperator,
    b: Vec<f64>,
    x0: Vec<f64>,
    x_star: Option<Vec<f64>>,
    counter: EvalCounter,
}

impl QuadraticProblem {
    /// Builds a problem starting at the origin.
    pub fn new(name: impl Into<String>, a: SpdOperator, b: Vec<f64>) -> Result<Self, ProblemError> {
        if b.len() != a.dim() {
            return Err(ProblemError::DimensionMismatch { expected: a.dim(), found: b.len() });
        }
        let x0 = vec![0.0; a.dim()];
        Ok(Self { name: name.into(), a, b, x0, x_star: None, counter: EvalCounter::default() })
    }

    /// Attaches a known solution; rejected when `|A x* - b| > 1e-8 |b|`.
    pub fn with_solution(mut self, x_star: Vec<f64>) -> Result<Self, ProblemError> {
        let ax = self.a.apply(&x_star)?;
        let residual = ax.iter().zip(&self.b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        if residual > 1e-8 * norm2(&self.b) {
            return Err(ProblemError::InconsistentSolution { residual });
        }
        self.x_star = Some(x_star);
        Ok(self)
    }

    pub fn with_start(mut self, x0: Vec<f64>) -> Result<Self, ProblemError> {
        self.a.check_dim(x0.len())?;
        self.x0 = x0;
        Ok(self)
    }

    /// Divides `A` and `b` by the norm of the gradient at the starting point,
    /// which scales the objective by the same factor.
    pub fn scaled_by_initial_gradient(mut self) -> Self {
        let mut g = vec![0.0; self.dim()];
        self.a.apply_into(&self.x0, &mut g);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        let g0 = norm2(&g);
        if g0 > 0.0 && g0.is_finite() {
            self.a = self.a.scaled(1.0 / g0);
            self.b.iter_mut().for_each(|v| *v /= g0);
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn operator(&self) -> &SpdOperator {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn start(&self) -> &[f64] {
        &self.x0
    }

    pub fn solution(&self) -> Option<&[f64]> {
        self.x_star.as_deref()
    }

    pub fn counter(&self) -> EvalCounter {
        self.counter
    }

    pub fn reset_counter(&mut self) {
        self.counter.reset();
    }

    /// Returns `(1/2 x'Ax - b'x, Ax - b)`; counts one value and one gradient.
    pub fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>), ProblemError> {
        self.a.check_dim(x.len())?;
        let mut g = vec![0.0; self.dim()];
        let f = self.value_and_gradient_into(x, &mut g);
        Ok((f, g))
    }

    /// Unchecked variant of [`value_and_gradient`](Self::value_and_gradient)
    /// writing the gradient into `g`.
    pub fn value_and_gradient_into(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        self.a.apply_into(x, g);
        // f = 1/2 x'(Ax) - b'x, evaluated before subtracting b
        let f = 0.5 * dot(x, g) - dot(&self.b, x);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        self.counter.n_f += 1;
        self.counter.n_g += 1;
        f
    }
}

/// A differentiable objective with a hand-coded gradient.
pub trait Objective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
}

/// The quadratic `1/2 x'Ax - b'x` seen as a general objective.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    pub a: SpdOperator,
    pub b: Vec<f64>,
}

impl Objective for QuadraticObjective {
    fn value(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.a.apply_into(x, &mut ax);
        0.5 * dot(x, &ax) - dot(&self.b, x)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        self.a.apply_into(x, g);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
    }
}

/// General unconstrained problem: objective, starting point, counters.
#[derive(Clone)]
pub struct NonlinearProblem {
    pub name: String,
    objective: Arc<dyn Objective>,
    x0: Vec<f64>,
    scale: f64,
    scale_by_g0: bool,
    counter: EvalCounter,
}

impl fmt::Debug for NonlinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearProblem")
            .field("name", &self.name)
            .field("n", &self.x0.len())
            .field("scale", &self.scale)
            .field("counter", &self.counter)
            .finish()
    }
}

impl NonlinearProblem {
    pub fn new(name: impl Into<String>, objective: Arc<dyn Objective>, x0: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            objective,
            x0,
            scale: 1.0,
            scale_by_g0: false,
            counter: EvalCounter::default(),
        }
    }

    /// Enables or disables dividing `f` and its gradient by `|grad f(x0)|`.
    /// The factor is computed once here and is not counted as an evaluation.
    pub fn scaled_by_initial_gradient(mut self, enabled: bool) -> Self {
        self.scale_by_g0 = enabled;
        self.scale = 1.0;
        if enabled {
            let mut g = vec![0.0; self.x0.len()];
            self.objective.gradient(&self.x0, &mut g);
            let g0 = norm2(&g);
            if g0 > 0.0 && g0.is_finite() {
                self.scale = 1.0 / g0;
            }
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn start(&self) -> &[f64] {
        &self.x0
    }

    pub fn is_scaled(&self) -> bool {
        self.scale_by_g0
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    pub fn counter(&self) -> EvalCounter {
        self.counter
    }

    pub fn reset_counter(&mut self) {
        self.counter.reset();
    }

    pub fn value(&mut self, x: &[f64]) -> f64 {
        self.counter.n_f += 1;
        self.scale * self.objective.value(x)
    }

    pub fn gradient_into(&mut self, x: &[f64], g: &mut [f64]) {
        self.counter.n_g += 1;
        self.objective.gradient(x, g);
        if self.scale != 1.0 {
            g.iter_mut().for_each(|v| *v *= self.scale);
        }
    }

    pub fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        g
    }

    /// Uncounted access to the underlying objective, for diagnostics.
    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }
}

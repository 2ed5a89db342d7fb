//! Diagonal quadratic test problems with prescribed spectra.
//!
//! Every generated problem has `b = A e`, so `x* = e`, and starts from
//! `x0 = -10 e`. Random kinds are reproducible from their seed and pin the
//! smallest and largest eigenvalue to the requested endpoints, so the
//! condition number is exactly `lambda_n / lambda_1`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::problems::{ProblemError, QuadraticProblem, SpdOperator};

/// Starting point multiple: `x0 = QP_START_SCALE * e`.
pub const QP_START_SCALE: f64 = -10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator spec: {0}")]
    Invalid(String),
    #[error("generator '{0}' draws random eigenvalues and needs a seed")]
    MissingSeed(&'static str),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpGeneratorKind {
    /// Constant ratio between consecutive eigenvalues.
    Geometric,
    /// Two groups of eigenvalues around `centers`, holding `fractions` of the
    /// spectrum each. Each eigenvalue is `c * exp(jitter * u)` with `u`
    /// uniform in `[-1, 1]`.
    TwoCluster { centers: (f64, f64), fractions: (f64, f64), jitter: f64 },
    /// Marchenko-Pastur draws with aspect ratio `ratio`, mapped affinely onto
    /// `[lambda_1, lambda_n]`. A stand-in for a covariance-matrix spectrum.
    CovarianceLike { ratio: f64 },
    /// `lambda_1 (lambda_n / lambda_1)^u` with `u` uniform in `[0, 1]`.
    LogUniform,
}

impl QpGeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Geometric => "geometric",
            Self::TwoCluster { .. } => "two_cluster",
            Self::CovarianceLike { .. } => "covariance_like",
            Self::LogUniform => "log_uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpGeneratorSpec {
    pub kind: QpGeneratorKind,
    pub n: usize,
    pub lambda1: f64,
    pub lambda_n: f64,
    pub seed: Option<u64>,
}

impl QpGeneratorSpec {
    pub fn geometric(n: usize, lambda1: f64, lambda_n: f64) -> Self {
        Self { kind: QpGeneratorKind::Geometric, n, lambda1, lambda_n, seed: None }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::Invalid(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.lambda1 > 0.0 && self.lambda1 <= self.lambda_n && self.lambda_n.is_finite()) {
            return bad(format!("need 0 < l1 <= ln, got l1={} ln={}", self.lambda1, self.lambda_n));
        }
        match self.kind {
            QpGeneratorKind::Geometric => {}
            QpGeneratorKind::TwoCluster { centers, fractions, jitter } => {
                let (f1, f2) = fractions;
                if !(f1 > 0.0 && f2 > 0.0 && ((f1 + f2) - 1.0).abs() <= 1e-12) {
                    return bad(format!("cluster fractions must be positive and sum to 1, got ({f1}, {f2})"));
                }
                for c in [centers.0, centers.1] {
                    if !(self.lambda1..=self.lambda_n).contains(&c) {
                        return bad(format!("cluster center {c} lies outside [l1, ln]"));
                    }
                }
                if !(jitter >= 0.0 && jitter.is_finite()) {
                    return bad(format!("jitter must be nonnegative, got {jitter}"));
                }
            }
            QpGeneratorKind::CovarianceLike { ratio } => {
                if !(ratio > 0.0 && ratio <= 1.0) {
                    return bad(format!("covariance ratio must lie in (0, 1], got {ratio}"));
                }
            }
            QpGeneratorKind::LogUniform => {}
        }
        if !matches!(self.kind, QpGeneratorKind::Geometric) && self.seed.is_none() {
            return Err(GeneratorError::MissingSeed(self.kind.name()));
        }
        Ok(())
    }

    /// Sorted eigenvalues of the generated matrix.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, GeneratorError> {
        self.validate()?;
        let (n, l1, ln) = (self.n, self.lambda1, self.lambda_n);
        if n == 1 {
            return Ok(vec![l1]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
        let mut eig: Vec<f64> = match self.kind {
            QpGeneratorKind::Geometric => {
                let mut e: Vec<f64> = (0..n).map(|i| l1 * (ln / l1).powf(i as f64 / (n - 1) as f64)).collect();
                e[n - 1] = ln;
                return Ok(e);
            }
            QpGeneratorKind::TwoCluster { centers, fractions, jitter } => {
                let n1 = ((fractions.0 * n as f64).round() as usize).clamp(1, n - 1);
                (0..n)
                    .map(|i| {
                        let c = if i < n1 { centers.0 } else { centers.1 };
                        let u: f64 = rng.random_range(-1.0..=1.0);
                        (c * (jitter * u).exp()).clamp(l1, ln)
                    })
                    .collect()
            }
            QpGeneratorKind::CovarianceLike { ratio } => marchenko_pastur(&mut rng, n, ratio),
            QpGeneratorKind::LogUniform => {
                (0..n).map(|_| l1 * (ln / l1).powf(rng.random::<f64>())).collect()
            }
        };
        eig.sort_by(f64::total_cmp);
        if matches!(self.kind, QpGeneratorKind::CovarianceLike { .. }) {
            let (lo, hi) = (eig[0], eig[n - 1]);
            let span = hi - lo;
            for e in &mut eig {
                *e = if span > 0.0 { l1 + (*e - lo) / span * (ln - l1) } else { l1 };
            }
        }
        eig[0] = l1;
        eig[n - 1] = ln;
        Ok(eig)
    }

    pub fn label(&self) -> String {
        let mut s = format!("{}-n{}-l{}-{}", self.kind.name(), self.n, self.lambda1, self.lambda_n);
        if let Some(seed) = self.seed {
            if !matches!(self.kind, QpGeneratorKind::Geometric) {
                s.push_str(&format!("-s{seed}"));
            }
        }
        s
    }
}

/// Rejection sampling from the Marchenko-Pastur density with ratio `c`.
fn marchenko_pastur(rng: &mut ChaCha8Rng, n: usize, c: f64) -> Vec<f64> {
    let a = (1.0 - c.sqrt()).powi(2);
    let b = (1.0 + c.sqrt()).powi(2);
    let density = |x: f64| ((b - x) * (x - a)).max(0.0).sqrt() / (2.0 * std::f64::consts::PI * c * x);
    let peak = (0..=1000).map(|i| density(a + (b - a) * i as f64 / 1000.0)).fold(0.0, f64::max) * 1.05;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = rng.random_range(a..b);
        if x > 0.0 && rng.random::<f64>() * peak <= density(x) {
            out.push(x);
        }
    }
    out
}

impl fmt::Display for QpGeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:n={},l1={},ln={}", self.kind.name(), self.n, self.lambda1, self.lambda_n)?;
        match self.kind {
            QpGeneratorKind::TwoCluster { centers, fractions, jitter } => write!(
                f,
                ",c1={},c2={},f1={},f2={},jitter={}",
                centers.0, centers.1, fractions.0, fractions.1, jitter
            )?,
            QpGeneratorKind::CovarianceLike { ratio } => write!(f, ",ratio={ratio}")?,
            _ => {}
        }
        if let Some(seed) = self.seed {
            write!(f, ",seed={seed}")?;
        }
        Ok(())
    }
}

/// Parses `kind:key=value,...`, e.g. `geometric:n=100,l1=1,ln=1e4` or
/// `two_cluster:n=50,l1=1,ln=1e3,c1=1,c2=1e3,f1=0.3,jitter=0.05,seed=7`.
/// Unknown keys are rejected.
impl FromStr for QpGeneratorSpec {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| GeneratorError::Invalid(m);
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let kind = kind.trim().to_ascii_lowercase().replace('-', "_");
        let mut n = None;
        let (mut l1, mut ln) = (None, None);
        let mut seed = None;
        let (mut c1, mut c2, mut f1, mut f2, mut jitter, mut ratio) = (None, None, None, None, None, None);
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| bad(format!("expected key=value, got '{item}'")))?;
            let num = || value.trim().parse::<f64>().map_err(|_| bad(format!("bad number '{value}' for '{key}'")));
            match key.trim() {
                "n" => n = Some(value.trim().parse::<usize>().map_err(|_| bad(format!("bad dimension '{value}'")))?),
                "l1" => l1 = Some(num()?),
                "ln" => ln = Some(num()?),
                "seed" => seed = Some(value.trim().parse::<u64>().map_err(|_| bad(format!("bad seed '{value}'")))?),
                "c1" => c1 = Some(num()?),
                "c2" => c2 = Some(num()?),
                "f1" => f1 = Some(num()?),
                "f2" => f2 = Some(num()?),
                "jitter" => jitter = Some(num()?),
                "ratio" => ratio = Some(num()?),
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        let n = n.ok_or_else(|| bad("missing n".into()))?;
        let lambda1 = l1.unwrap_or(1.0);
        let lambda_n = ln.ok_or_else(|| bad("missing ln".into()))?;
        let only_for = |name: &str, present: bool| {
            if present {
                Err(bad(format!("key not valid for generator '{name}'")))
            } else {
                Ok(())
            }
        };
        let cluster_keys = c1.is_some() || c2.is_some() || f1.is_some() || f2.is_some() || jitter.is_some();
        let kind = match kind.as_str() {
            "geometric" => {
                only_for("geometric", cluster_keys || ratio.is_some())?;
                QpGeneratorKind::Geometric
            }
            "two_cluster" => {
                only_for("two_cluster", ratio.is_some())?;
                let f1 = f1.unwrap_or(0.5);
                QpGeneratorKind::TwoCluster {
                    centers: (c1.unwrap_or(lambda1), c2.unwrap_or(lambda_n)),
                    fractions: (f1, f2.unwrap_or(1.0 - f1)),
                    jitter: jitter.unwrap_or(0.05),
                }
            }
            "covariance_like" => {
                only_for("covariance_like", cluster_keys)?;
                QpGeneratorKind::CovarianceLike { ratio: ratio.unwrap_or(0.5) }
            }
            "log_uniform" => {
                only_for("log_uniform", cluster_keys || ratio.is_some())?;
                QpGeneratorKind::LogUniform
            }
            other => return Err(bad(format!("unknown generator '{other}'"))),
        };
        Ok(Self { kind, n, lambda1, lambda_n, seed })
    }
}

/// Builds the diagonal problem for `spec`.
pub fn generate_qp(spec: &QpGeneratorSpec) -> Result<QuadraticProblem, GeneratorError> {
    let a = SpdOperator::diagonal(spec.eigenvalues()?)?;
    quadratic_from_operator(spec.label(), a)
}

/// Wraps any operator as a benchmark problem with `x* = e`, `b = A e` and
/// `x0 = -10 e`.
pub fn quadratic_from_operator(name: impl Into<String>, a: SpdOperator) -> Result<QuadraticProblem, GeneratorError> {
    let n = a.dim();
    let e = vec![1.0; n];
    let mut b = vec![0.0; n];
    a.apply_into(&e, &mut b);
    let p = QuadraticProblem::new(name, a, b)?.with_solution(e)?.with_start(vec![QP_START_SCALE; n])?;
    Ok(p)
}

/// Dense SPD matrix `Q diag(eigenvalues) Q'` where `Q` is a product of three
/// seeded Householder reflections.
pub fn random_spd_dense(eigenvalues: &[f64], seed: u64) -> Result<SpdOperator, ProblemError> {
    let n = eigenvalues.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = vec![0.0; n * n];
    for (i, l) in eigenvalues.iter().enumerate() {
        m[i * n + i] = *l;
    }
    let mut mv = vec![0.0; n];
    for _ in 0..3 {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        // M <- H M H with H = I - 2 v v' / v'v, using M symmetric
        for i in 0..n {
            mv[i] = (0..n).map(|j| m[i * n + j] * v[j]).sum();
        }
        let vmv: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let c = 2.0 / vv;
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] += -c * (v[i] * mv[j] + mv[i] * v[j]) + c * c * vmv * v[i] * v[j];
            }
        }
    }
    SpdOperator::dense(n, m)
}

//! Gradient method with TBB steps for strictly convex quadratics.
//!
//! No line search and no clamping: `x_{k+1} = x_k - beta_k g_k`, stopping when
//! `|g_{k+1}| <= tol |g_0|`. The gradient difference is taken as
//! `y_k = g_{k+1} - g_k`, which equals `A s_k` without an extra product.

use log::warn;
use thiserror::Error;

use crate::linalg::{dot, norm2};
use crate::problems::QuadraticProblem;
use crate::stepsize::{next_step, StepContext, StepSource, Target, TargetStrategy};
use crate::trace::{IterRecord, RunStatus, RunTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolverConfig {
    pub beta0: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: TargetStrategy,
    pub record_trace: bool,
    /// Keep every gradient vector (needed by [`verify_gradient_recursion`]).
    pub store_gradients: bool,
}

impl QpSolverConfig {
    pub fn new(strategy: TargetStrategy) -> Self {
        Self { beta0: 1.0, tol: 1e-6, max_iter: 50_000, strategy, record_trace: true, store_gradients: false }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(ConfigError::Invalid("beta0 must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError::Invalid("tol must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(ConfigError::Invalid("max_iter must be at least 1".into()));
        }
        self.strategy.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid solver configuration: {0}")]
    Invalid(String),
}

/// Runs the method from the problem's starting point. Counters of `p` are
/// reset first, so trace totals describe this run only.
pub fn solve_quadratic(p: &mut QuadraticProblem, cfg: &QpSolverConfig) -> Result<(Vec<f64>, RunTrace), ConfigError> {
    cfg.validate()?;
    p.reset_counter();
    let n = p.dim();
    let mut trace = RunTrace::empty();
    if let TargetStrategy::Ibb2 { rho } = cfg.strategy {
        if rho <= 2.0 {
            let msg = format!("IBB2 with rho = {rho} <= 2 has no convergence guarantee on quadratics");
            warn!("{}: {msg}", p.name);
            trace.warnings.push(msg);
        }
    }

    let mut x = p.start().to_vec();
    let mut g = vec![0.0; n];
    let mut f = p.value_and_gradient_into(&x, &mut g);
    let g0_norm = norm2(&g);
    trace.g0_norm = g0_norm;
    let mut grads = cfg.store_gradients.then(Vec::new);

    let mut ctx = StepContext::new(&cfg.strategy);
    let mut beta = cfg.beta0;
    let mut tau: Option<Target> = None;
    let mut source = StepSource::Initial;
    let mut curvature: Option<f64> = None;
    let mut g_norm = g0_norm;
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    let status = if !g0_norm.is_finite() || !f.is_finite() {
        RunStatus::Error("non-finite objective or gradient at the starting point".into())
    } else if g0_norm == 0.0 {
        RunStatus::Converged
    } else {
        let mut status = RunStatus::MaxIter;
        for k in 0..cfg.max_iter {
            if cfg.record_trace {
                trace.records.push(IterRecord {
                    k,
                    beta: Some(beta),
                    tau,
                    source: Some(source),
                    g_norm,
                    f_value: f,
                    curvature,
                    nu: None,
                    backtracks: 0,
                    replaced: false,
                });
            }
            if let Some(gs) = grads.as_mut() {
                gs.push(g.clone());
            }
            for ((si, xi), gi) in s.iter_mut().zip(x.iter_mut()).zip(&g) {
                *si = -beta * gi;
                *xi += *si;
            }
            f = p.value_and_gradient_into(&x, &mut g_new);
            trace.iterations = k + 1;
            g_norm = norm2(&g_new);
            for ((yi, a), b) in y.iter_mut().zip(&g_new).zip(&g) {
                *yi = a - b;
            }
            std::mem::swap(&mut g, &mut g_new);
            if !g_norm.is_finite() {
                status = RunStatus::Error(format!("non-finite gradient at iteration {}", k + 1));
                break;
            }
            if g_norm <= cfg.tol * g0_norm {
                status = RunStatus::Converged;
                break;
            }
            let sty = dot(&s, &y);
            if !(sty > 0.0) {
                status = RunStatus::Error(format!(
                    "s'y = {sty:e} <= 0 at iteration {}: the matrix is not positive definite",
                    k + 1
                ));
                break;
            }
            if let Err(e) = ctx.observe(&s, &y, g_norm) {
                status = RunStatus::Error(format!("iteration {}: {e}", k + 1));
                break;
            }
            ctx.set_beta_prev(beta);
            match next_step(&cfg.strategy, &mut ctx) {
                Ok(d) if d.beta > 0.0 && d.beta.is_finite() => {
                    beta = d.beta;
                    tau = d.tau;
                    source = d.source;
                    curvature = Some(sty);
                }
                Ok(d) => {
                    status = RunStatus::Error(format!(
                        "stepsize {} from {} is not positive at iteration {}",
                        d.beta,
                        cfg.strategy,
                        k + 1
                    ));
                    break;
                }
                Err(e) => {
                    status = RunStatus::Error(format!("iteration {}: {e}", k + 1));
                    break;
                }
            }
        }
        status
    };

    if cfg.record_trace {
        trace.records.push(IterRecord {
            k: trace.iterations,
            beta: None,
            tau: None,
            source: None,
            g_norm,
            f_value: f,
            curvature: None,
            nu: None,
            backtracks: 0,
            replaced: false,
        });
    }
    if let Some(gs) = grads.as_mut() {
        gs.push(g.clone());
    }
    trace.gradients = grads;
    trace.status = status;
    trace.final_g_norm = g_norm;
    trace.final_f = f;
    let counter = p.counter();
    trace.n_f = counter.n_f;
    trace.n_g = counter.n_g;
    Ok((x, trace))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceCheckError {
    #[error("trace has no stored gradients; rerun with store_gradients")]
    MissingGradients,
    #[error("trace has {records} step records but {gradients} gradients")]
    Inconsistent { records: usize, gradients: usize },
}

/// Checks `|g_{k+1} - (I - beta_k A) g_k| <= 1e-10 |g_k|` at every step of a
/// debug-mode trace.
pub fn verify_gradient_recursion(trace: &RunTrace, p: &QuadraticProblem) -> Result<bool, TraceCheckError> {
    let grads = trace.gradients.as_ref().ok_or(TraceCheckError::MissingGradients)?;
    let steps: Vec<f64> = trace.records.iter().filter_map(|r| r.beta).collect();
    if grads.len() != steps.len() + 1 {
        return Err(TraceCheckError::Inconsistent { records: steps.len(), gradients: grads.len() });
    }
    let a = p.operator();
    let mut ag = vec![0.0; p.dim()];
    for (k, beta) in steps.iter().enumerate() {
        let (gk, gk1) = (&grads[k], &grads[k + 1]);
        a.apply_into(gk, &mut ag);
        let err = gk1
            .iter()
            .zip(gk)
            .zip(&ag)
            .map(|((n, o), a)| {
                let d = n - (o - beta * a);
                d * d
            })
            .sum::<f64>()
            .sqrt();
        if err > 1e-10 * norm2(gk) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Relative slack for floating-point rounding in the bound checks of
/// [`spectral_bound_check`].
pub const BOUND_ROUNDING_SLACK: f64 = 1e-9;

/// Compliance of the inverse stepsizes with `xi_low l1 <= alpha_k <= xi_up ln`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBoundReport {
    pub checked: usize,
    pub within: usize,
    /// Share of checked iterations inside the bounds (1.0 when none checked).
    pub fraction: f64,
    pub min_alpha_over_l1: f64,
    pub max_alpha_over_ln: f64,
}

/// Checks every step with `k >= 1` (the first step is the user's `beta0`).
pub fn spectral_bound_check(trace: &RunTrace, lambda1: f64, lambda_n: f64, xi_low: f64, xi_up: f64) -> SpectralBoundReport {
    let lo = xi_low * lambda1 * (1.0 - BOUND_ROUNDING_SLACK);
    let hi = xi_up * lambda_n * (1.0 + BOUND_ROUNDING_SLACK);
    let mut report = SpectralBoundReport {
        checked: 0,
        within: 0,
        fraction: 1.0,
        min_alpha_over_l1: f64::INFINITY,
        max_alpha_over_ln: f64::NEG_INFINITY,
    };
    for alpha in trace.records.iter().filter(|r| r.k >= 1).filter_map(IterRecord::alpha) {
        report.checked += 1;
        if (lo..=hi).contains(&alpha) {
            report.within += 1;
        }
        report.min_alpha_over_l1 = report.min_alpha_over_l1.min(alpha / lambda1);
        report.max_alpha_over_ln = report.max_alpha_over_ln.max(alpha / lambda_n);
    }
    if report.checked > 0 {
        report.fraction = report.within as f64 / report.checked as f64;
    }
    report
}

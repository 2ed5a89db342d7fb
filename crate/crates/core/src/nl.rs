//! Gradient method with TBB steps for general differentiable functions.
//!
//! Each iteration backtracks from the proposed stepsize until the GLL
//! nonmonotone sufficient-decrease condition holds against the largest of
//! the last `M` objective values. Uphill pairs (`s'y <= 0`) take a
//! replacement stepsize, and every proposed stepsize is clamped into
//! `[beta_min, beta_max]`.

use std::collections::VecDeque;

use thiserror::Error;

use crate::linalg::{dot, norm2, norm_inf};
use crate::problems::NonlinearProblem;
use crate::qp::ConfigError;
use crate::stepsize::{next_step, replacement_step, safeguard, ReplacementRule, StepContext, StepSource, TargetStrategy};
use crate::trace::{IterRecord, RunStatus, RunTrace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialStep {
    Fixed(f64),
    /// `1 / |g_0|`
    InverseGradientNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlSolverConfig {
    pub initial_step: InitialStep,
    pub tol: f64,
    pub max_iter: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub c_ls: f64,
    pub sigma_ls: f64,
    /// Nonmonotone memory `M`.
    pub memory: usize,
    pub replacement: ReplacementRule,
    pub strategy: TargetStrategy,
    pub max_backtracks: usize,
    pub record_trace: bool,
}

impl NlSolverConfig {
    pub fn new(strategy: TargetStrategy) -> Self {
        Self {
            initial_step: InitialStep::Fixed(1.0),
            tol: 1e-6,
            max_iter: 50_000,
            beta_min: 1e-30,
            beta_max: 1e30,
            c_ls: 1e-4,
            sigma_ls: 0.5,
            memory: 10,
            replacement: ReplacementRule::Raydan,
            strategy,
            max_backtracks: 100,
            record_trace: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if let InitialStep::Fixed(b) = self.initial_step {
            if !(b > 0.0 && b.is_finite()) {
                return bad("beta0 must be positive");
            }
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1");
        }
        if !(self.beta_min > 0.0 && self.beta_min < self.beta_max) {
            return bad("need 0 < beta_min < beta_max");
        }
        if !(self.c_ls > 0.0 && self.c_ls < 1.0 && self.sigma_ls > 0.0 && self.sigma_ls < 1.0) {
            return bad("c_ls and sigma_ls must lie in (0, 1)");
        }
        if self.memory < 1 {
            return bad("memory M must be at least 1");
        }
        self.strategy.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub nu: f64,
    pub n_backtracks: usize,
    pub f_new: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LineSearchError {
    #[error("no sufficient decrease after {0} backtracks")]
    TooManyBacktracks(usize),
    #[error("line search needs a nonzero gradient, a positive stepsize and a nonempty history")]
    BadInput,
}

/// Backtracks `nu = beta, sigma beta, sigma^2 beta, ...` until
/// `f(x - nu g) <= max(f_history) - c_ls nu |g|^2`. Non-finite trial values
/// count as rejections. Returns the result and the accepted point.
pub fn gll_line_search(
    p: &mut NonlinearProblem,
    x: &[f64],
    g: &[f64],
    beta: f64,
    f_history: &[f64],
    cfg: &NlSolverConfig,
) -> Result<(LineSearchResult, Vec<f64>), LineSearchError> {
    let gg = dot(g, g);
    if !(gg > 0.0) || !(beta > 0.0) || f_history.is_empty() {
        return Err(LineSearchError::BadInput);
    }
    let f_ref = f_history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut trial = vec![0.0; x.len()];
    let mut nu = beta;
    let mut n_backtracks = 0;
    loop {
        for ((t, xi), gi) in trial.iter_mut().zip(x).zip(g) {
            *t = xi - nu * gi;
        }
        let f_new = p.value(&trial);
        if f_new <= f_ref - cfg.c_ls * nu * gg {
            return Ok((LineSearchResult { nu, n_backtracks, f_new }, trial));
        }
        if n_backtracks == cfg.max_backtracks {
            return Err(LineSearchError::TooManyBacktracks(n_backtracks));
        }
        nu *= cfg.sigma_ls;
        n_backtracks += 1;
    }
}

/// Runs the method from the problem's starting point. Counters of `p` are
/// reset first.
pub fn solve_nonlinear(p: &mut NonlinearProblem, cfg: &NlSolverConfig) -> Result<(Vec<f64>, RunTrace), ConfigError> {
    cfg.validate()?;
    p.reset_counter();
    let n = p.dim();
    let mut trace = RunTrace::empty();

    let mut x = p.start().to_vec();
    let mut f = p.value(&x);
    let mut g = p.gradient(&x);
    let g0_norm = norm2(&g);
    trace.g0_norm = g0_norm;
    let mut g_norm = g0_norm;

    let mut ctx = StepContext::new(&cfg.strategy);
    let mut f_hist: VecDeque<f64> = VecDeque::with_capacity(cfg.memory);
    f_hist.push_back(f);
    let mut beta = match cfg.initial_step {
        InitialStep::Fixed(b) => b,
        InitialStep::InverseGradientNorm => 1.0 / g0_norm,
    };
    let mut tau = None;
    let mut source = StepSource::Initial;
    let mut curvature = None;
    let mut replaced = false;
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];

    let status = if !f.is_finite() || !g0_norm.is_finite() {
        RunStatus::Error(format!("non-finite objective or gradient at the starting point (|x|_inf = {})", norm_inf(&x)))
    } else if g0_norm == 0.0 {
        RunStatus::Converged
    } else {
        let mut status = RunStatus::MaxIter;
        for k in 0..cfg.max_iter {
            let search = gll_line_search(p, &x, &g, beta, f_hist.make_contiguous(), cfg);
            let (ls, x_new) = match search {
                Ok(r) => r,
                Err(e) => {
                    status = RunStatus::Error(format!("line search failed at iteration {k}: {e}"));
                    break;
                }
            };
            if cfg.record_trace {
                trace.records.push(IterRecord {
                    k,
                    beta: Some(beta),
                    tau,
                    source: Some(source),
                    g_norm,
                    f_value: f,
                    curvature,
                    nu: Some(ls.nu),
                    backtracks: ls.n_backtracks,
                    replaced,
                });
            }
            for ((si, a), b) in s.iter_mut().zip(&x_new).zip(&x) {
                *si = a - b;
            }
            x = x_new;
            f = ls.f_new;
            let g_new = p.gradient(&x);
            trace.iterations = k + 1;
            g_norm = norm2(&g_new);
            for ((yi, a), b) in y.iter_mut().zip(&g_new).zip(&g) {
                *yi = a - b;
            }
            g = g_new;
            if !g_norm.is_finite() {
                status = RunStatus::Error(format!(
                    "non-finite gradient at iteration {} (|x|_inf = {})",
                    k + 1,
                    norm_inf(&x)
                ));
                break;
            }
            if g_norm <= cfg.tol * g0_norm {
                status = RunStatus::Converged;
                break;
            }
            if f_hist.len() == cfg.memory {
                f_hist.pop_front();
            }
            f_hist.push_back(f);

            if let Err(e) = ctx.observe(&s, &y, g_norm) {
                status = RunStatus::Error(format!("iteration {}: {e}", k + 1));
                break;
            }
            ctx.set_beta_prev(beta);
            let sty = ctx.sty();
            curvature = Some(sty);
            let proposal = if sty > 0.0 {
                replaced = false;
                next_step(&cfg.strategy, &mut ctx).map(|d| (d.beta, d.tau, d.source))
            } else {
                replaced = true;
                replacement_step(cfg.replacement, &ctx, cfg.beta_max).map(|b| (b, None, StepSource::Replacement))
            };
            let clamped = proposal.and_then(|(b, t, src)| {
                safeguard(b, cfg.beta_min, cfg.beta_max).map(|(b, hit)| (b, t, if hit { StepSource::SafeguardClamped } else { src }))
            });
            match clamped {
                Ok((b, t, src)) => {
                    beta = b;
                    tau = t;
                    source = src;
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
    trace.status = status;
    trace.final_g_norm = g_norm;
    trace.final_f = f;
    let counter = p.counter();
    trace.n_f = counter.n_f;
    trace.n_g = counter.n_g;
    Ok((x, trace))
}

/// Re-checks from a recorded trace that every accepted step satisfied
/// `f_{k+1} <= max_{0<=j<=min(k,M-1)} f_{k-j} - c_ls nu_k |g_k|^2`, allowing
/// `slack` of absolute rounding.
pub fn verify_sufficient_decrease(trace: &RunTrace, cfg: &NlSolverConfig, slack: f64) -> bool {
    let recs = &trace.records;
    recs.windows(2).enumerate().all(|(k, pair)| {
        let Some(nu) = pair[0].nu else { return true };
        let lo = k.saturating_sub(k.min(cfg.memory - 1));
        let f_ref = recs[lo..=k].iter().map(|r| r.f_value).fold(f64::NEG_INFINITY, f64::max);
        pair[1].f_value <= f_ref - cfg.c_ls * nu * pair[0].g_norm * pair[0].g_norm + slack
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problems::{Objective, QuadraticObjective, SpdOperator};

    struct HalfSquare;

    impl Objective for HalfSquare {
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * dot(x, x)
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            g.copy_from_slice(x);
        }
    }

    struct Quartic;

    impl Objective for Quartic {
        fn value(&self, x: &[f64]) -> f64 {
            dot(x, x).powi(2)
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            let r = 4.0 * dot(x, x);
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi = r * xi;
            }
        }
    }

    fn half_square() -> NonlinearProblem {
        NonlinearProblem::new("half-square", Arc::new(HalfSquare), vec![1.0])
    }

    #[test]
    fn line_search_backtracks_once() {
        let mut p = half_square();
        let cfg = NlSolverConfig::new(TargetStrategy::Bb2);
        let (ls, x) = gll_line_search(&mut p, &[1.0], &[1.0], 3.0, &[0.5], &cfg).unwrap();
        assert_eq!((ls.nu, ls.n_backtracks, ls.f_new), (1.5, 1, 0.125));
        assert_eq!(x, vec![-0.5]);
        assert_eq!(p.counter().n_f, 2);
    }

    #[test]
    fn line_search_accepts_immediately() {
        let mut p = half_square();
        let cfg = NlSolverConfig::new(TargetStrategy::Bb2);
        let (ls, _) = gll_line_search(&mut p, &[1.0], &[1.0], 0.5, &[0.5], &cfg).unwrap();
        assert_eq!((ls.nu, ls.n_backtracks, ls.f_new), (0.5, 0, 0.125));
    }

    #[test]
    fn line_search_is_nonmonotone() {
        let mut p = half_square();
        let cfg = NlSolverConfig::new(TargetStrategy::Bb2);
        let (ls, _) = gll_line_search(&mut p, &[1.0], &[1.0], 3.0, &[10.0, 0.5], &cfg).unwrap();
        assert_eq!((ls.nu, ls.n_backtracks, ls.f_new), (3.0, 0, 2.0));
    }

    #[test]
    fn line_search_failure_is_bounded() {
        struct Ascent;
        impl Objective for Ascent {
            fn value(&self, x: &[f64]) -> f64 {
                -x[0]
            }
            fn gradient(&self, _: &[f64], g: &mut [f64]) {
                g[0] = 1.0;
            }
        }
        let mut p = NonlinearProblem::new("bad", Arc::new(Ascent), vec![0.0]);
        let mut cfg = NlSolverConfig::new(TargetStrategy::Bb2);
        cfg.max_backtracks = 5;
        let r = gll_line_search(&mut p, &[0.0], &[1.0], 1.0, &[0.0], &cfg);
        // with the wrong-sign gradient no trial point decreases enough
        assert_eq!(r.unwrap_err(), LineSearchError::TooManyBacktracks(5));
        assert_eq!(p.counter().n_f, 6);
        assert_eq!(gll_line_search(&mut p, &[0.0], &[0.0], 1.0, &[0.0], &cfg).unwrap_err(), LineSearchError::BadInput);

        let (_, trace) = solve_nonlinear(&mut p, &cfg).unwrap();
        assert!(matches!(trace.status, RunStatus::Error(ref m) if m.contains("line search")));
    }

    #[test]
    fn strictly_convex_one_from_tenths() {
        struct Sc1;
        impl Objective for Sc1 {
            fn value(&self, x: &[f64]) -> f64 {
                x.iter().map(|v| v.exp() - v).sum()
            }
            fn gradient(&self, x: &[f64], g: &mut [f64]) {
                for (gi, v) in g.iter_mut().zip(x) {
                    *gi = v.exp() - 1.0;
                }
            }
        }
        let mut p = NonlinearProblem::new("sc1", Arc::new(Sc1), vec![0.1; 10]);
        let (x, trace) = solve_nonlinear(&mut p, &NlSolverConfig::new(TargetStrategy::Bb2)).unwrap();
        assert!(trace.status.is_converged());
        assert!(trace.final_g_norm <= 1e-6 * trace.g0_norm);
        assert!(x.iter().all(|v| v.abs() < 1e-6));
        assert!((trace.final_f - 10.0).abs() < 1e-10);
        assert_eq!(trace.n_g, trace.iterations as u64 + 1);
    }

    #[test]
    fn stationary_start() {
        let mut p = NonlinearProblem::new("quartic", Arc::new(Quartic), vec![0.0; 3]);
        let (_, trace) = solve_nonlinear(&mut p, &NlSolverConfig::new(TargetStrategy::Bb1)).unwrap();
        assert!(trace.status.is_converged());
        assert_eq!(trace.iterations, 0);
    }

    #[test]
    fn quartic_from_offset_converges_with_safeguards() {
        let mut p = NonlinearProblem::new("quartic", Arc::new(Quartic), vec![1.0, -2.0, 0.5]);
        for strategy in TargetStrategy::catalog() {
            let cfg = NlSolverConfig::new(strategy);
            let (_, trace) = solve_nonlinear(&mut p, &cfg).unwrap();
            assert!(trace.status.is_converged(), "{strategy}: {}", trace.status);
            assert!(verify_sufficient_decrease(&trace, &cfg, 1e-12));
            for r in &trace.records {
                if let Some(b) = r.beta {
                    assert!((cfg.beta_min..=cfg.beta_max).contains(&b));
                }
            }
        }
    }

    #[test]
    fn replacement_fires_on_uphill_pairs() {
        // Concave along one axis: the gradient difference opposes the step
        struct Saddle;
        impl Objective for Saddle {
            fn value(&self, x: &[f64]) -> f64 {
                x[0].powi(4) - x[0] * x[0] + x[1] * x[1]
            }
            fn gradient(&self, x: &[f64], g: &mut [f64]) {
                g[0] = 4.0 * x[0].powi(3) - 2.0 * x[0];
                g[1] = 2.0 * x[1];
            }
        }
        let mut p = NonlinearProblem::new("saddle", Arc::new(Saddle), vec![0.1, 1.0]);
        let mut cfg = NlSolverConfig::new(TargetStrategy::Bb2);
        cfg.initial_step = InitialStep::Fixed(0.01);
        let (_, trace) = solve_nonlinear(&mut p, &cfg).unwrap();
        assert!(trace.status.is_converged(), "{}", trace.status);
        let mut fired = 0;
        for r in &trace.records {
            if let Some(c) = r.curvature {
                assert_eq!(r.replaced, c <= 0.0);
                if r.replaced {
                    fired += 1;
                    let b = r.beta.unwrap();
                    assert!((1.0..=1e5).contains(&b));
                    assert_eq!(r.source, Some(StepSource::Replacement));
                }
            }
        }
        assert!(fired > 0);
    }

    #[test]
    fn inverse_gradient_norm_initial_step() {
        let q = QuadraticObjective { a: SpdOperator::diagonal(vec![1.0, 4.0]).unwrap(), b: vec![0.0, 0.0] };
        let mut p = NonlinearProblem::new("q", Arc::new(q), vec![3.0, 1.0]);
        let mut cfg = NlSolverConfig::new(TargetStrategy::Bb1);
        cfg.initial_step = InitialStep::InverseGradientNorm;
        let (_, trace) = solve_nonlinear(&mut p, &cfg).unwrap();
        assert_eq!(trace.records[0].beta, Some(1.0 / 5.0));
        assert!(trace.status.is_converged());
    }

    #[test]
    fn non_finite_start_is_an_error() {
        struct Blowup;
        impl Objective for Blowup {
            fn value(&self, _: &[f64]) -> f64 {
                f64::NAN
            }
            fn gradient(&self, _: &[f64], g: &mut [f64]) {
                g.fill(1.0);
            }
        }
        let mut p = NonlinearProblem::new("nan", Arc::new(Blowup), vec![1.0]);
        let (_, trace) = solve_nonlinear(&mut p, &NlSolverConfig::new(TargetStrategy::Bb1)).unwrap();
        assert!(matches!(trace.status, RunStatus::Error(_)));
    }

    #[test]
    fn invalid_config() {
        let mut p = half_square();
        let mut cfg = NlSolverConfig::new(TargetStrategy::Bb1);
        cfg.beta_min = 2.0;
        cfg.beta_max = 1.0;
        assert!(solve_nonlinear(&mut p, &cfg).is_err());
        let mut cfg = NlSolverConfig::new(TargetStrategy::Bb1);
        cfg.memory = 0;
        assert!(solve_nonlinear(&mut p, &cfg).is_err());
    }
}

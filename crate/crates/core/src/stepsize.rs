//! Targeted Barzilai-Borwein (TBB) stepsizes.
//!
//! The stepsize with target `tau` is the inverse harmonic Rayleigh quotient
//!
//! ```text
//! beta(tau) = s'(y - tau s) / y'(y - tau s)
//! ```
//!
//! which gives BB2 at `tau = 0` and BB1 in the limit `tau -> +-inf`. Each
//! [`TargetStrategy`] either picks a target per iteration or, for the ABB
//! family, picks between the BB steps directly.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::{dot, norm2};
use crate::problems::SpdOperator;

/// Relative distance to the pole `alpha_bb2` below which a target is rejected
/// and the step falls back to BB2.
pub const POLE_FALLBACK_RTOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("gradient difference y is zero")]
    DegenerateY,
    #[error("step s is zero")]
    ZeroStep,
    #[error("non-finite inner products in step context")]
    NonFinite,
    #[error("curvature s'y = {0:e} is not positive")]
    NonPositiveCurvature(f64),
    #[error("target {tau} hits the pole of the harmonic quotient")]
    Pole { tau: f64 },
    #[error("gradient norm is zero; the run should already have stopped")]
    ZeroGradient,
    #[error("stepsize {0} is not finite")]
    NonFiniteStep(f64),
    #[error("alpha equals the target {0}")]
    AlphaEqualsTarget(f64),
    #[error("weight matrix is not positive definite along s (s'Ws = {0:e})")]
    NonSpdWeight(f64),
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("strategy {0} does not pick steps directly")]
    NotAbbFamily(String),
}

/// A target on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl Target {
    pub fn as_f64(self) -> f64 {
        match self {
            Target::Finite(t) => t,
            Target::PlusInfinity => f64::INFINITY,
            Target::MinusInfinity => f64::NEG_INFINITY,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Finite(t) => write!(f, "{t}"),
            Target::PlusInfinity => f.write_str("+inf"),
            Target::MinusInfinity => f.write_str("-inf"),
        }
    }
}

/// Renders an optional target the way traces do: `na` when absent.
pub fn target_label(tau: Option<Target>) -> String {
    tau.map_or_else(|| "na".to_string(), |t| t.to_string())
}

pub const DEFAULT_ABB_ETA: f64 = 0.8;
pub const DEFAULT_ABB_MEMORY: usize = 4;
pub const DEFAULT_ABBBON_ETA0: f64 = 0.5;

/// Stepsize policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetStrategy {
    Bb1,
    Bb2,
    Abb { eta: f64 },
    AbbMin { eta: f64, m: usize },
    AbbBon { eta0: f64, m: usize },
    Ibb2 { rho: f64 },
    Iter,
    Cot { q: f64, r: f64 },
    Con { zeta: f64 },
}

impl TargetStrategy {
    /// The thirteen strategies compared in the benchmarks, with their default
    /// parameters.
    pub fn catalog() -> Vec<TargetStrategy> {
        use TargetStrategy::*;
        vec![
            Bb1,
            Bb2,
            Abb { eta: DEFAULT_ABB_ETA },
            AbbMin { eta: DEFAULT_ABB_ETA, m: DEFAULT_ABB_MEMORY },
            AbbBon { eta0: DEFAULT_ABBBON_ETA0, m: DEFAULT_ABB_MEMORY },
            Ibb2 { rho: 2.01 },
            Ibb2 { rho: 100.0 },
            Iter,
            Cot { q: 1.0, r: 1.0 },
            Cot { q: 0.5, r: 1.0 },
            Cot { q: 1.0, r: 0.5 },
            Cot { q: 2.0, r: 1.0 },
            Cot { q: 1.0, r: 2.0 },
        ]
    }

    pub fn validate(&self) -> Result<(), StrategyParseError> {
        let bad = |what: &str| Err(StrategyParseError::Invalid { strategy: self.to_string(), reason: what.into() });
        match *self {
            TargetStrategy::Abb { eta } if !(eta > 0.0 && eta < 1.0) => bad("eta must lie in (0, 1)"),
            TargetStrategy::AbbMin { eta, m } | TargetStrategy::AbbBon { eta0: eta, m } => {
                if !(eta > 0.0 && eta < 1.0) {
                    bad("eta must lie in (0, 1)")
                } else if m < 1 {
                    bad("memory m must be at least 1")
                } else {
                    Ok(())
                }
            }
            TargetStrategy::Ibb2 { rho } if !(rho > 1.0 && rho.is_finite()) => bad("rho must exceed 1"),
            TargetStrategy::Cot { q, r } if !(q > 0.0 && r > 0.0 && q.is_finite() && r.is_finite()) => {
                bad("q and r must be positive")
            }
            TargetStrategy::Con { zeta } if !(0.0..=1.0).contains(&zeta) => bad("zeta must lie in [0, 1]"),
            _ => Ok(()),
        }
    }

    pub fn is_abb_family(&self) -> bool {
        matches!(self, TargetStrategy::Abb { .. } | TargetStrategy::AbbMin { .. } | TargetStrategy::AbbBon { .. })
    }

    /// Number of BB2 steps a context must remember: `m + 1` for ABBmin and
    /// ABBbon, one otherwise.
    pub fn history_len(&self) -> usize {
        match *self {
            TargetStrategy::AbbMin { m, .. } | TargetStrategy::AbbBon { m, .. } => m + 1,
            _ => 1,
        }
    }

    /// Short human label, e.g. `ABBmin` or `COT H1`.
    pub fn label(&self) -> String {
        fn exp(v: f64) -> String {
            if v == 0.5 {
                "H".into()
            } else {
                format!("{v}")
            }
        }
        match *self {
            TargetStrategy::Bb1 => "BB1".into(),
            TargetStrategy::Bb2 => "BB2".into(),
            TargetStrategy::Abb { .. } => "ABB".into(),
            TargetStrategy::AbbMin { .. } => "ABBmin".into(),
            TargetStrategy::AbbBon { .. } => "ABBbon".into(),
            TargetStrategy::Ibb2 { rho } => format!("IBB2 {rho}"),
            TargetStrategy::Iter => "ITER".into(),
            TargetStrategy::Cot { q, r } => format!("COT {}{}", exp(q), exp(r)),
            TargetStrategy::Con { zeta } => format!("CON {zeta}"),
        }
    }
}

impl fmt::Display for TargetStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TargetStrategy::Bb1 => f.write_str("bb1"),
            TargetStrategy::Bb2 => f.write_str("bb2"),
            TargetStrategy::Abb { eta } => write!(f, "abb:{eta}"),
            TargetStrategy::AbbMin { eta, m } => write!(f, "abbmin:{eta}:{m}"),
            TargetStrategy::AbbBon { eta0, m } => write!(f, "abbbon:{eta0}:{m}"),
            TargetStrategy::Ibb2 { rho } => write!(f, "ibb2:{rho}"),
            TargetStrategy::Iter => f.write_str("iter"),
            TargetStrategy::Cot { q, r } => write!(f, "cot:{q}:{r}"),
            TargetStrategy::Con { zeta } => write!(f, "con:{zeta}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyParseError {
    #[error("unknown strategy '{0}'")]
    UnknownName(String),
    #[error("cannot parse parameter '{token}' in '{strategy}'")]
    BadParameter { strategy: String, token: String },
    #[error("'{strategy}' takes at most {max} parameters")]
    TooManyParameters { strategy: String, max: usize },
    #[error("invalid strategy '{strategy}': {reason}")]
    Invalid { strategy: String, reason: String },
}

impl FromStr for TargetStrategy {
    type Err = StrategyParseError;

    /// Grammar: `name(:param)*`. Trailing parameters may be omitted and take
    /// their default values.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let params: Vec<&str> = parts.collect();
        let num = |i: usize, default: f64| -> Result<f64, StrategyParseError> {
            match params.get(i) {
                None => Ok(default),
                Some(tok) => tok.trim().parse::<f64>().map_err(|_| StrategyParseError::BadParameter {
                    strategy: s.to_string(),
                    token: tok.to_string(),
                }),
            }
        };
        let int = |i: usize, default: usize| -> Result<usize, StrategyParseError> {
            match params.get(i) {
                None => Ok(default),
                Some(tok) => tok.trim().parse::<usize>().map_err(|_| StrategyParseError::BadParameter {
                    strategy: s.to_string(),
                    token: tok.to_string(),
                }),
            }
        };
        let arity = |max: usize| -> Result<(), StrategyParseError> {
            if params.len() > max {
                Err(StrategyParseError::TooManyParameters { strategy: s.to_string(), max })
            } else {
                Ok(())
            }
        };
        let strategy = match name.as_str() {
            "bb1" => {
                arity(0)?;
                TargetStrategy::Bb1
            }
            "bb2" => {
                arity(0)?;
                TargetStrategy::Bb2
            }
            "iter" => {
                arity(0)?;
                TargetStrategy::Iter
            }
            "abb" => {
                arity(1)?;
                TargetStrategy::Abb { eta: num(0, DEFAULT_ABB_ETA)? }
            }
            "abbmin" => {
                arity(2)?;
                TargetStrategy::AbbMin { eta: num(0, DEFAULT_ABB_ETA)?, m: int(1, DEFAULT_ABB_MEMORY)? }
            }
            "abbbon" => {
                arity(2)?;
                TargetStrategy::AbbBon { eta0: num(0, DEFAULT_ABBBON_ETA0)?, m: int(1, DEFAULT_ABB_MEMORY)? }
            }
            "ibb2" => {
                arity(1)?;
                TargetStrategy::Ibb2 { rho: num(0, 2.01)? }
            }
            "cot" => {
                arity(2)?;
                TargetStrategy::Cot { q: num(0, 1.0)?, r: num(1, 1.0)? }
            }
            "con" => {
                arity(1)?;
                TargetStrategy::Con { zeta: num(0, 0.5)? }
            }
            _ => return Err(StrategyParseError::UnknownName(s.to_string())),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

/// Where an accepted stepsize came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSource {
    /// The user-supplied first stepsize.
    Initial,
    Tbb,
    AbbPickBb1,
    AbbPickBb2,
    Replacement,
    SafeguardClamped,
    /// Target too close to the pole; BB2 used instead.
    PoleFallback,
}

impl StepSource {
    pub fn as_str(self) -> &'static str {
        match self {
            StepSource::Initial => "initial",
            StepSource::Tbb => "tbb",
            StepSource::AbbPickBb1 => "abb_pick_bb1",
            StepSource::AbbPickBb2 => "abb_pick_bb2",
            StepSource::Replacement => "replacement",
            StepSource::SafeguardClamped => "safeguard_clamped",
            StepSource::PoleFallback => "pole_fallback",
        }
    }
}

impl fmt::Display for StepSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecision {
    pub beta: f64,
    /// `None` for ABB-family picks and replacements.
    pub tau: Option<Target>,
    pub source: StepSource,
}

/// Per-run state consumed by the stepsize rules: the latest step and gradient
/// difference with their inner products, the iteration index, the BB2 history
/// of ABBmin/ABBbon and the adaptive ABBbon threshold.
#[derive(Debug, Clone)]
pub struct StepContext {
    s: Vec<f64>,
    y: Vec<f64>,
    sts: f64,
    sty: f64,
    yty: f64,
    k: usize,
    g_norm: f64,
    bb2_history: VecDeque<f64>,
    history_cap: usize,
    eta_state: Option<f64>,
    beta_prev: f64,
}

impl StepContext {
    pub fn new(strategy: &TargetStrategy) -> Self {
        let history_cap = strategy.history_len();
        let eta_state = match *strategy {
            TargetStrategy::AbbBon { eta0, .. } => Some(eta0),
            _ => None,
        };
        Self {
            s: Vec::new(),
            y: Vec::new(),
            sts: 0.0,
            sty: 0.0,
            yty: 0.0,
            k: 0,
            g_norm: 0.0,
            bb2_history: VecDeque::with_capacity(history_cap),
            history_cap,
            eta_state,
            beta_prev: f64::NAN,
        }
    }

    /// A context that has observed exactly one `(s, y)` pair, with unit
    /// gradient norm.
    pub fn from_pair(strategy: &TargetStrategy, s: &[f64], y: &[f64]) -> Result<Self, StepError> {
        let mut ctx = Self::new(strategy);
        ctx.observe(s, y, 1.0)?;
        Ok(ctx)
    }

    /// Records the pair `(s_k, y_k)` ending iteration `k`, advancing the
    /// iteration index. The BB2 step enters the history whenever `s'y > 0`.
    pub fn observe(&mut self, s: &[f64], y: &[f64], g_norm: f64) -> Result<(), StepError> {
        if s.len() != y.len() {
            return Err(StepError::LengthMismatch(s.len(), y.len()));
        }
        let (sts, sty, yty) = (dot(s, s), dot(s, y), dot(y, y));
        if !(sts.is_finite() && sty.is_finite() && yty.is_finite()) {
            return Err(StepError::NonFinite);
        }
        if sts <= 0.0 {
            return Err(StepError::ZeroStep);
        }
        self.s.clear();
        self.s.extend_from_slice(s);
        self.y.clear();
        self.y.extend_from_slice(y);
        self.sts = sts;
        self.sty = sty;
        self.yty = yty;
        self.g_norm = g_norm;
        self.k += 1;
        if sty > 0.0 && yty > 0.0 {
            self.push_bb2(sty / yty);
        }
        Ok(())
    }

    /// Appends a BB2 stepsize to the ring buffer, evicting the oldest.
    pub fn push_bb2(&mut self, beta_bb2: f64) {
        if self.bb2_history.len() == self.history_cap {
            self.bb2_history.pop_front();
        }
        self.bb2_history.push_back(beta_bb2);
    }

    pub fn set_beta_prev(&mut self, beta: f64) {
        self.beta_prev = beta;
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.eta_state = Some(eta);
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sts(&self) -> f64 {
        self.sts
    }

    pub fn sty(&self) -> f64 {
        self.sty
    }

    pub fn yty(&self) -> f64 {
        self.yty
    }

    /// Index of the stepsize about to be computed (1 after the first step).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn g_norm(&self) -> f64 {
        self.g_norm
    }

    pub fn bb2_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.bb2_history.iter().copied()
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta_state
    }

    pub fn beta_prev(&self) -> f64 {
        self.beta_prev
    }
}

/// The two BB quotients and the squared cosine of the angle between `s` and `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbQuotients {
    pub alpha_bb1: f64,
    /// NaN when `s'y = 0`.
    pub alpha_bb2: f64,
    pub beta_bb1: f64,
    pub beta_bb2: f64,
    pub cos2: f64,
}

impl BbQuotients {
    /// `s'y = 0`: the pair is orthogonal and BB2 has no defined sign.
    pub fn is_degenerate(&self) -> bool {
        self.alpha_bb1 == 0.0
    }
}

pub fn bb_quotients(ctx: &StepContext) -> Result<BbQuotients, StepError> {
    quotients_from_products(ctx.sts, ctx.sty, ctx.yty)
}

fn quotients_from_products(sts: f64, sty: f64, yty: f64) -> Result<BbQuotients, StepError> {
    if sts <= 0.0 {
        return Err(StepError::ZeroStep);
    }
    if yty == 0.0 {
        return Err(StepError::DegenerateY);
    }
    let cos2 = (sty * sty / (sts * yty)).clamp(0.0, 1.0);
    let (alpha_bb2, beta_bb1) = if sty == 0.0 { (f64::NAN, f64::INFINITY) } else { (yty / sty, sts / sty) };
    Ok(BbQuotients { alpha_bb1: sty / sts, alpha_bb2, beta_bb1, beta_bb2: sty / yty, cos2 })
}

/// `beta(tau) = (s'y - tau s's) / (y'y - tau s'y)`; the infinite targets give
/// BB1 exactly.
pub fn tbb_beta(ctx: &StepContext, tau: Target) -> Result<f64, StepError> {
    tbb_beta_from_products(ctx.sts, ctx.sty, ctx.yty, tau)
}

/// [`tbb_beta`] on raw inner products `s's`, `s'y`, `y'y`.
pub fn tbb_beta_from_products(sts: f64, sty: f64, yty: f64, tau: Target) -> Result<f64, StepError> {
    if !(sty > 0.0) {
        return Err(StepError::NonPositiveCurvature(sty));
    }
    match tau {
        Target::PlusInfinity | Target::MinusInfinity => Ok(sts / sty),
        Target::Finite(t) => {
            let den = yty - t * sty;
            if den.abs() <= 1e-14 * yty.abs().max((t * sty).abs()) {
                return Err(StepError::Pole { tau: t });
            }
            Ok((sty - t * sts) / den)
        }
    }
}

/// The target a strategy assigns to the current context; `None` for the ABB
/// family, which chooses its step without a target.
pub fn select_target(strategy: &TargetStrategy, ctx: &StepContext) -> Result<Option<Target>, StepError> {
    let q = bb_quotients(ctx)?;
    let tau = match *strategy {
        TargetStrategy::Bb1 => Target::MinusInfinity,
        TargetStrategy::Bb2 => Target::Finite(0.0),
        TargetStrategy::Abb { .. } | TargetStrategy::AbbMin { .. } | TargetStrategy::AbbBon { .. } => {
            return Ok(None)
        }
        TargetStrategy::Ibb2 { rho } => Target::Finite(rho * q.alpha_bb2),
        TargetStrategy::Iter => {
            if ctx.k <= 1 {
                Target::Finite(0.0)
            } else {
                Target::Finite(ctx.k as f64 * q.alpha_bb2)
            }
        }
        TargetStrategy::Cot { q: qe, r } => {
            let sin2 = 1.0 - q.cos2;
            if sin2 <= 0.0 {
                Target::MinusInfinity
            } else {
                let (cos, sin) = (q.cos2.sqrt(), sin2.sqrt());
                Target::Finite(-cos.powf(qe) / sin.powf(r))
            }
        }
        TargetStrategy::Con { zeta } => {
            if zeta >= 1.0 {
                Target::MinusInfinity
            } else {
                Target::Finite(-zeta / (1.0 - zeta) * q.alpha_bb2)
            }
        }
    };
    Ok(Some(tau))
}

/// ABB, ABBmin and ABBbon: BB2 (or the smallest remembered BB2) when
/// `beta_bb2 < eta * beta_bb1`, BB1 otherwise. ABBbon then multiplies its
/// threshold by 0.9 after a BB2 pick and by 1.1 after a BB1 pick.
pub fn abb_family_beta(strategy: &TargetStrategy, ctx: &mut StepContext) -> Result<StepDecision, StepError> {
    let q = bb_quotients(ctx)?;
    if !(ctx.sty > 0.0) {
        return Err(StepError::NonPositiveCurvature(ctx.sty));
    }
    let history_min = || ctx.bb2_history.iter().copied().fold(q.beta_bb2, f64::min);
    let (beta, picked_bb2) = match *strategy {
        TargetStrategy::Abb { eta } => {
            if q.beta_bb2 < eta * q.beta_bb1 {
                (q.beta_bb2, true)
            } else {
                (q.beta_bb1, false)
            }
        }
        TargetStrategy::AbbMin { eta, .. } => {
            if q.beta_bb2 < eta * q.beta_bb1 {
                (history_min(), true)
            } else {
                (q.beta_bb1, false)
            }
        }
        TargetStrategy::AbbBon { eta0, .. } => {
            let eta = ctx.eta_state.unwrap_or(eta0);
            let pick = if q.beta_bb2 < eta * q.beta_bb1 { (history_min(), true) } else { (q.beta_bb1, false) };
            ctx.eta_state = Some(if pick.1 { 0.9 * eta } else { 1.1 * eta });
            pick
        }
        _ => return Err(StepError::NotAbbFamily(strategy.to_string())),
    };
    let source = if picked_bb2 { StepSource::AbbPickBb2 } else { StepSource::AbbPickBb1 };
    Ok(StepDecision { beta, tau: None, source })
}

/// Computes the next stepsize for a context with positive curvature.
///
/// Targets within [`POLE_FALLBACK_RTOL`] of `alpha_bb2` fall back to BB2.
pub fn next_step(strategy: &TargetStrategy, ctx: &mut StepContext) -> Result<StepDecision, StepError> {
    if strategy.is_abb_family() {
        return abb_family_beta(strategy, ctx);
    }
    let tau = select_target(strategy, ctx)?.expect("non-ABB strategies always pick a target");
    let q = bb_quotients(ctx)?;
    let fallback = StepDecision { beta: q.beta_bb2, tau: Some(tau), source: StepSource::PoleFallback };
    if let Target::Finite(t) = tau {
        if (t - q.alpha_bb2).abs() <= POLE_FALLBACK_RTOL * q.alpha_bb2.abs() {
            return Ok(fallback);
        }
    }
    match tbb_beta(ctx, tau) {
        Ok(beta) => Ok(StepDecision { beta, tau: Some(tau), source: StepSource::Tbb }),
        Err(StepError::Pole { .. }) => Ok(fallback),
        Err(e) => Err(e),
    }
}

/// Stepsize used instead of the TBB step along uphill directions (`s'y < 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplacementRule {
    /// `max(min(1/|g|, 1e5), 1)`
    #[default]
    Raydan,
    BetaMax,
    InvGradNorm,
    /// Reuse the previous stepsize.
    Recycle,
}

impl FromStr for ReplacementRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raydan" => Ok(Self::Raydan),
            "beta_max" | "beta-max" => Ok(Self::BetaMax),
            "inv_gnorm" | "inv-gnorm" => Ok(Self::InvGradNorm),
            "recycle" => Ok(Self::Recycle),
            other => Err(format!("unknown replacement rule '{other}'")),
        }
    }
}

pub fn replacement_step(rule: ReplacementRule, ctx: &StepContext, beta_max: f64) -> Result<f64, StepError> {
    if !(ctx.g_norm > 0.0) {
        return Err(StepError::ZeroGradient);
    }
    Ok(match rule {
        ReplacementRule::Raydan => (1.0 / ctx.g_norm).clamp(1.0, 1e5),
        ReplacementRule::BetaMax => beta_max,
        ReplacementRule::InvGradNorm => 1.0 / ctx.g_norm,
        ReplacementRule::Recycle => ctx.beta_prev,
    })
}

/// Clamps `beta` into `[beta_min, beta_max]`; the flag reports whether the
/// value changed.
pub fn safeguard(beta: f64, beta_min: f64, beta_max: f64) -> Result<(f64, bool), StepError> {
    if !beta.is_finite() {
        return Err(StepError::NonFiniteStep(beta));
    }
    let clamped = beta.max(beta_min).min(beta_max);
    Ok((clamped, clamped != beta))
}

/// `|s - (alpha - tau)^{-1} (y - tau s)|`, the shifted secant residual that
/// the inverse TBB step minimizes over `alpha`.
pub fn secant_residual(ctx: &StepContext, alpha: f64, tau: f64) -> Result<f64, StepError> {
    if alpha == tau {
        return Err(StepError::AlphaEqualsTarget(tau));
    }
    let c = 1.0 / (alpha - tau);
    let r: f64 = ctx
        .s
        .iter()
        .zip(&ctx.y)
        .map(|(si, yi)| {
            let d = si - c * (yi - tau * si);
            d * d
        })
        .sum();
    Ok(r.sqrt())
}

/// Minimizer of `|y - alpha s|_W`: `y'Ws / s'Ws`.
pub fn weighted_secant_argmin(s: &[f64], y: &[f64], w: &SpdOperator) -> Result<f64, StepError> {
    if s.len() != y.len() {
        return Err(StepError::LengthMismatch(s.len(), y.len()));
    }
    let ws = w.apply(s).map_err(|_| StepError::LengthMismatch(s.len(), w.dim()))?;
    let sws = dot(s, &ws);
    if !(sws > 0.0) {
        return Err(StepError::NonSpdWeight(sws));
    }
    Ok(dot(y, &ws) / sws)
}

/// Cosine of the angle between `s` and `y`, clamped to `[-1, 1]`.
pub fn cosine(s: &[f64], y: &[f64]) -> f64 {
    (dot(s, y) / (norm2(s) * norm2(y))).clamp(-1.0, 1.0)
}

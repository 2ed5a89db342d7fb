//! Independent oracles shared by the integration tests and the acceptance
//! runner. Everything here recomputes quantities from inner products or
//! closed forms instead of trusting the solver code under test.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tbb::stepsize::{
    bb_quotients, next_step, secant_residual, tbb_beta, weighted_secant_argmin, Target, TargetStrategy,
};
use tbb::testbed::random_spd_dense;
use tbb::{SpdOperator, StepContext};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// A random SPD matrix with known spectrum and a step `s` with `y = A s`.
pub struct SpdCase {
    pub a: SpdOperator,
    pub eig: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

impl SpdCase {
    pub fn lambda1(&self) -> f64 {
        self.eig[0]
    }

    pub fn lambda_n(&self) -> f64 {
        *self.eig.last().unwrap()
    }

    pub fn context(&self) -> StepContext {
        StepContext::from_pair(&TargetStrategy::Bb2, &self.s, &self.y).unwrap()
    }

    pub fn products(&self) -> (f64, f64, f64) {
        let d = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        (d(&self.s, &self.s), d(&self.s, &self.y), d(&self.y, &self.y))
    }
}

/// Case `seed`: n in 2..=20, log-uniform spectrum with condition number up to
/// 1e4, diagonal or dense storage, Gaussian `s`. Draws that leave `s` close
/// to an eigenvector (sin^2 of the angle to `As` below 1e-3) are redrawn.
pub fn random_case(seed: u64) -> SpdCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(2..=20);
        let decades: f64 = rng.random_range(1.0..4.0);
        let base: f64 = 10f64.powf(rng.random_range(-1.0..1.0));
        let mut eig: Vec<f64> = (0..n).map(|_| base * 10f64.powf(decades * rng.random::<f64>())).collect();
        eig.sort_by(f64::total_cmp);
        let dense = rng.random::<bool>();
        let a = if dense {
            random_spd_dense(&eig, rng.random()).unwrap()
        } else {
            let mut d = eig.clone();
            // shuffle so the diagonal is not sorted
            for i in (1..n).rev() {
                d.swap(i, rng.random_range(0..=i));
            }
            SpdOperator::diagonal(d).unwrap()
        };
        let s: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y = a.apply(&s).unwrap();
        let case = SpdCase { a, eig, s, y };
        let (sts, sty, yty) = case.products();
        let sin2 = 1.0 - sty * sty / (sts * yty);
        if sin2 > 1e-3 && case.lambda_n() > case.lambda1() * 1.01 {
            return case;
        }
    }
}

fn beta(ctx: &StepContext, tau: f64) -> Result<f64, String> {
    tbb_beta(ctx, Target::Finite(tau)).map_err(|e| e.to_string())
}

/// Sorted sample of `count` targets `center + sign * center * 10^u`,
/// `u` uniform in `[lo, hi]`.
fn branch_sample(rng: &mut ChaCha8Rng, center: f64, sign: f64, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..count).map(|_| center + sign * center * 10f64.powf(rng.random_range(lo..hi))).collect();
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| ((*a - *b) / b.abs()).abs() < 1e-3);
    t
}

/// beta is strictly decreasing on each side of the pole `alpha_bb2`.
pub fn monotonicity(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let ctx = case.context();
    let q = bb_quotients(&ctx).unwrap();
    for sign in [-1.0, 1.0] {
        let taus = branch_sample(rng, q.alpha_bb2, sign, -4.0, 4.0, 20);
        let betas: Vec<f64> = taus.iter().map(|t| beta(&ctx, *t)).collect::<Result<_, _>>()?;
        for w in 0..betas.len() - 1 {
            ensure!(
                betas[w] > betas[w + 1],
                "beta({}) = {} not above beta({}) = {}",
                taus[w],
                betas[w],
                taus[w + 1],
                betas[w + 1]
            );
        }
    }
    Ok(())
}

/// `beta(tau) = beta_bb1 (tau - alpha_bb1) / (tau - alpha_bb2)` to 1e-12.
pub fn alternative_form(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let ctx = case.context();
    let q = bb_quotients(&ctx).unwrap();
    let mut done = 0;
    while done < 20 {
        let mag = case.lambda_n() * 10f64.powf(rng.random_range(-3.0..3.0));
        let tau = if rng.random::<bool>() { mag } else { -mag };
        let far = |c: f64| (tau - c).abs() > 1e-2 * tau.abs().max(c);
        if !(far(q.alpha_bb1) && far(q.alpha_bb2)) {
            continue;
        }
        let closed = q.beta_bb1 * (tau - q.alpha_bb1) / (tau - q.alpha_bb2);
        let b = beta(&ctx, tau)?;
        ensure!(rel_err(b, closed) <= 1e-12, "tau {tau}: {b} vs alternative form {closed}");
        done += 1;
    }
    Ok(())
}

/// Negative targets land between BB2 and BB1; targets beyond `lambda_n`
/// give steps above BB1 and below the bound at `tau = lambda_n`.
pub fn bracketing(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let ctx = case.context();
    let q = bb_quotients(&ctx).unwrap();
    let ln = case.lambda_n();
    let upper = (ln - q.alpha_bb1) / (ln - q.alpha_bb2) * q.beta_bb1;
    for _ in 0..20 {
        let tau = -q.alpha_bb2 * 10f64.powf(rng.random_range(-4.0..4.0));
        let b = beta(&ctx, tau)?;
        ensure!(q.beta_bb2 < b && b < q.beta_bb1, "tau {tau}: {b} outside ({}, {})", q.beta_bb2, q.beta_bb1);
        let tau = ln * (1.0 + 10f64.powf(rng.random_range(-4.0..4.0)));
        let b = beta(&ctx, tau)?;
        ensure!(q.beta_bb1 < b && b < upper, "tau {tau}: {b} outside ({}, {upper})", q.beta_bb1);
    }
    Ok(())
}

/// First-order behaviour for very large and very small targets.
pub fn limits(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let ctx = case.context();
    let q = bb_quotients(&ctx).unwrap();
    for _ in 0..10 {
        for sign in [-1.0, 1.0] {
            let tau = sign * case.lambda_n() * 10f64.powf(rng.random_range(4.0..8.0));
            let b = beta(&ctx, tau)?;
            let bound = 2.0 * (q.alpha_bb1 - q.alpha_bb2).abs() * q.beta_bb1 / tau.abs();
            ensure!((b - q.beta_bb1).abs() <= bound, "tau {tau}: |beta - bb1| = {} > {bound}", (b - q.beta_bb1).abs());
            let tau = sign * case.lambda1() * 10f64.powf(rng.random_range(-8.0..-4.0));
            let b = beta(&ctx, tau)?;
            let bound = 2.0 * tau.abs() * (q.beta_bb1 - q.beta_bb2) * q.beta_bb2;
            ensure!((b - q.beta_bb2).abs() <= bound, "tau {tau}: |beta - bb2| = {} > {bound}", (b - q.beta_bb2).abs());
        }
    }
    Ok(())
}

/// Every positive stepsize other than BB1 is reached by exactly one target,
/// recovered in closed form from the alternative form.
pub fn bijection(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let ctx = case.context();
    let q = bb_quotients(&ctx).unwrap();
    let mut done = 0;
    while done < 20 {
        let target = q.beta_bb1 * 10f64.powf(rng.random_range(-2.0..2.0));
        if rel_err(target, q.beta_bb1) < 1e-3 {
            continue;
        }
        let tau = (target * q.alpha_bb2 - 1.0) / (target - q.beta_bb1);
        let b = beta(&ctx, tau)?;
        ensure!(rel_err(b, target) <= 1e-10, "beta* {target}: tau {tau} gives {b}");
        done += 1;
    }
    Ok(())
}

/// With `y = lambda s` every target other than `lambda` gives `1/lambda`.
pub fn eigenvector_degeneracy(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let lambda = case.eig[rng.random_range(0..case.eig.len())];
    let y: Vec<f64> = case.s.iter().map(|v| lambda * v).collect();
    let ctx = StepContext::from_pair(&TargetStrategy::Bb2, &case.s, &y).unwrap();
    for _ in 0..20 {
        let tau = match rng.random_range(0..3) {
            0 => -lambda * 10f64.powf(rng.random_range(-4.0..4.0)),
            1 => lambda * (1.0 + 10f64.powf(rng.random_range(-2.0..4.0))),
            _ => lambda * (1.0 - 10f64.powf(rng.random_range(-2.0..-0.01))),
        };
        let b = beta(&ctx, tau)?;
        ensure!(rel_err(b, 1.0 / lambda) <= 1e-12, "lambda {lambda}, tau {tau}: {b}");
    }
    for tau in [Target::MinusInfinity, Target::PlusInfinity, Target::Finite(0.0)] {
        let b = tbb_beta(&ctx, tau).map_err(|e| e.to_string())?;
        ensure!(rel_err(b, 1.0 / lambda) <= 1e-12, "lambda {lambda}, tau {tau}: {b}");
    }
    Ok(())
}

/// A target outside `[lambda_1, lambda_n]`, half negative and half above.
fn outside_target(case: &SpdCase, rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        -case.lambda_n() * 10f64.powf(rng.random_range(-3.0..2.0))
    } else {
        case.lambda_n() * (1.0 + 10f64.powf(rng.random_range(-3.0..2.0)))
    }
}

/// The inverse TBB step beats its perturbations in the shifted secant
/// residual.
pub fn secant_local_optimality(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let ctx = case.context();
    for _ in 0..20 {
        let tau = outside_target(case, rng);
        let alpha = 1.0 / beta(&ctx, tau)?;
        let r = secant_residual(&ctx, alpha, tau).map_err(|e| e.to_string())?;
        for d in [1e-3, 1e-2, 1e-1] {
            for a in [alpha * (1.0 + d), alpha * (1.0 - d)] {
                if a == tau {
                    continue;
                }
                let ra = secant_residual(&ctx, a, tau).map_err(|e| e.to_string())?;
                ensure!(r <= ra * (1.0 + 1e-14), "tau {tau}: residual {r} at alpha {alpha} above {ra} at {a}");
            }
        }
    }
    Ok(())
}

/// Minimizes `f` over `alpha > 0` on a log grid around `guess`, zooming in
/// until the bracket is narrower than `rtol`. Points within 1e-9 relative of
/// `avoid` are skipped.
pub fn grid_argmin(f: impl Fn(f64) -> f64, guess: f64, avoid: f64, rtol: f64) -> f64 {
    let (mut lo, mut hi) = ((guess / 8.0).ln(), (guess * 8.0).ln());
    let points = 401;
    loop {
        let step = (hi - lo) / (points - 1) as f64;
        let mut best = (f64::INFINITY, lo);
        for i in 0..points {
            let t = lo + step * i as f64;
            let a = t.exp();
            if (a - avoid).abs() <= 1e-9 * avoid.abs() {
                continue;
            }
            let v = f(a);
            if v < best.0 {
                best = (v, t);
            }
        }
        lo = best.1 - step;
        hi = best.1 + step;
        if hi - lo < rtol {
            return best.1.exp();
        }
    }
}

/// Grid-search oracle: the closed-form inverse TBB step minimizes the
/// shifted secant residual to 1e-4 relative.
pub fn secant_grid_oracle(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let ctx = case.context();
    let tau = outside_target(case, rng);
    let alpha = 1.0 / beta(&ctx, tau)?;
    let found = grid_argmin(|a| secant_residual(&ctx, a, tau).unwrap_or(f64::INFINITY), alpha, tau, 1e-7);
    ensure!(rel_err(found, alpha) <= 1e-4, "tau {tau}: grid minimizer {found} vs closed form {alpha}");
    Ok(())
}

/// Weights `I`, `A` and `A - tau I` (tau below the spectrum) give BB1, BB2
/// and TBB.
pub fn weighted_secant(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let ctx = case.context();
    let q = bb_quotients(&ctx).unwrap();
    let n = case.s.len();
    let identity = SpdOperator::diagonal(vec![1.0; n]).unwrap();
    let w = |op: &SpdOperator| weighted_secant_argmin(&case.s, &case.y, op).map_err(|e| e.to_string());
    let a1 = w(&identity)?;
    ensure!(rel_err(a1, q.alpha_bb1) <= 1e-12, "W = I: {a1} vs {}", q.alpha_bb1);
    let a2 = w(&case.a)?;
    ensure!(rel_err(a2, q.alpha_bb2) <= 1e-12, "W = A: {a2} vs {}", q.alpha_bb2);
    let tau = case.lambda1() * (1.0 - 10f64.powf(rng.random_range(-2.0..3.0)));
    let shifted = case.a.shifted(-tau).unwrap();
    let at = w(&shifted)?;
    let expect = 1.0 / beta(&ctx, tau)?;
    ensure!(rel_err(at, expect) <= 1e-10, "W = A - {tau} I: {at} vs {expect}");
    Ok(())
}

/// IBB2: the inverse step lies in `[(rho-1)/rho alpha_bb1, alpha_bb1]`.
pub fn ibb2_bound(case: &SpdCase) -> Check {
    let mut ctx = case.context();
    let q = bb_quotients(&ctx).unwrap();
    for rho in [1.5, 2.01, 10.0, 100.0] {
        let d = next_step(&TargetStrategy::Ibb2 { rho }, &mut ctx).map_err(|e| e.to_string())?;
        let alpha = 1.0 / d.beta;
        let lo = (rho - 1.0) / rho * q.alpha_bb1;
        ensure!(
            alpha >= lo * (1.0 - 1e-12) && alpha <= q.alpha_bb1 * (1.0 + 1e-12),
            "rho {rho}: alpha {alpha} outside [{lo}, {}]",
            q.alpha_bb1
        );
        ensure!(alpha >= (rho - 1.0) / rho * case.lambda1() * (1.0 - 1e-12), "rho {rho}: below the spectral bound");
    }
    Ok(())
}

/// COT steps on unit `s`, `y` at angle `theta`.
fn cot_beta(q: f64, r: f64, theta_cos: f64) -> (f64, f64, f64) {
    let s = [1.0, 0.0];
    let y = [theta_cos, (1.0 - theta_cos * theta_cos).sqrt()];
    let strategy = TargetStrategy::Cot { q, r };
    let mut ctx = StepContext::from_pair(&strategy, &s, &y).unwrap();
    let bq = bb_quotients(&ctx).unwrap();
    let d = next_step(&strategy, &mut ctx).unwrap();
    (d.beta, bq.beta_bb1, bq.beta_bb2)
}

/// With the inner products of `case` held fixed, the COT target at angle
/// `theta` yields a step that shrinks as `theta` opens. On unit `s`, `y`
/// meeting at a tiny or a nearly right angle, COT meets BB1 or BB2.
pub fn cot_limits(case: &SpdCase) -> Check {
    let ctx = case.context();
    for (q, r) in [(1.0, 1.0), (0.5, 1.0), (1.0, 0.5), (2.0, 1.0), (1.0, 2.0)] {
        let mut prev = f64::INFINITY;
        for j in 1..=400 {
            let theta = std::f64::consts::FRAC_PI_2 * j as f64 / 400.0;
            let tau = -theta.cos().max(0.0).powf(q) / theta.sin().powf(r);
            let b = beta(&ctx, tau)?;
            ensure!(b <= prev, "COT({q},{r}) increases at angle {theta}: {b} > {prev}");
            prev = b;
        }
        let (b, b1, _) = cot_beta(q, r, (1e-7f64).cos());
        ensure!((b - b1).abs() <= 1e-6 * b1, "COT({q},{r}) near angle 0: {b} vs BB1 {b1}");
        let (b, _, b2) = cot_beta(q, r, 1e-14);
        ensure!((b - b2).abs() <= 1e-6, "COT({q},{r}) near a right angle: {b} vs BB2 {b2}");
    }
    Ok(())
}

/// CON(zeta) is the convex combination of the BB steps.
pub fn con_combination(case: &SpdCase) -> Check {
    let ctx = case.context();
    let q = bb_quotients(&ctx).unwrap();
    for zeta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut c = ctx.clone();
        let d = next_step(&TargetStrategy::Con { zeta }, &mut c).map_err(|e| e.to_string())?;
        let expect = zeta * q.beta_bb1 + (1.0 - zeta) * q.beta_bb2;
        ensure!(rel_err(d.beta, expect) <= 1e-12, "zeta {zeta}: {} vs {expect}", d.beta);
    }
    Ok(())
}

/// Negative shifts lower the condition number of a diagonal `A`; the
/// first-order change is `tau (ln - l1) / l1^2`.
pub fn regularization(case: &SpdCase, rng: &mut ChaCha8Rng) -> Check {
    let n = case.eig.len();
    let a = SpdOperator::diagonal(case.eig.clone()).unwrap();
    let kappa = |tau: f64| {
        let (lo, hi) = a.shifted(-tau).unwrap().diagonal_extremes().unwrap();
        hi / lo
    };
    let (l1, ln) = (case.lambda1(), case.lambda_n());
    let k0 = kappa(0.0);
    ensure!(rel_err(k0, ln / l1) <= 1e-12, "kappa of the {n}x{n} diagonal is {k0}");
    for _ in 0..10 {
        let tau = -l1 * 10f64.powf(rng.random_range(-3.0..3.0));
        ensure!(kappa(tau) < k0, "tau {tau}: kappa {} not below {k0}", kappa(tau));
    }
    let remainder = |tau: f64| (kappa(tau) - k0 - tau * (ln - l1) / (l1 * l1)).abs();
    for sign in [-1.0, 1.0] {
        let tau = sign * 1e-3 * l1;
        let c = [tau / 10.0, tau / 100.0].iter().map(|t| remainder(*t) / (t * t)).fold(0.0, f64::max);
        ensure!(remainder(tau) <= 1.5 * c * tau * tau, "tau {tau}: remainder {} above {}", remainder(tau), c * tau * tau);
    }
    Ok(())
}

/// BB relative errors for `s = e_1 + eps z` on `diag(1, ..., 10)`, with the
/// matching upper bounds: `(err_bb1, bound_bb1, err_bb2, bound_bb2)`.
pub fn sensitivity_errors(eps: f64, z: &[f64]) -> (f64, f64, f64, f64) {
    let eig: Vec<f64> = (1..=10).map(f64::from).collect();
    let lambda = eig[0];
    let s: Vec<f64> = (0..10).map(|i| if i == 0 { 1.0 } else { 0.0 } + eps * z[i]).collect();
    let y: Vec<f64> = s.iter().zip(&eig).map(|(v, l)| v * l).collect();
    let ctx = StepContext::from_pair(&TargetStrategy::Bb1, &s, &y).unwrap();
    let q = bb_quotients(&ctx).unwrap();
    let e1 = (q.beta_bb1 - 1.0 / lambda).abs() * lambda;
    let e2 = (q.beta_bb2 - 1.0 / lambda).abs() * lambda;
    let m1 = eig.iter().map(|l| (l - lambda).abs() / lambda).fold(0.0, f64::max);
    let m2 = eig.iter().map(|l| (l * (l - lambda)).abs() / (lambda * lambda)).fold(0.0, f64::max);
    (e1, 2.0 * m1 * eps * eps, e2, 2.0 * m2 * eps * eps)
}

/// Unit vector orthogonal to `e_1` in ten dimensions.
pub fn orthogonal_unit(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<f64> = (0..10).map(|i| if i == 0 { 0.0 } else { rng.sample(StandardNormal) }).collect();
    let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    z.iter_mut().for_each(|v| *v /= nz);
    z
}

/// BB errors scale with `eps^2` and stay within twice the first-order bound.
pub fn sensitivity(seed: u64) -> Check {
    let z = orthogonal_unit(seed);
    let big = sensitivity_errors(1e-3, &z);
    let small = sensitivity_errors(1e-4, &z);
    for (eps, (e1, b1, e2, b2)) in [(1e-3, big), (1e-4, small)] {
        ensure!(e1 <= b1, "eps {eps}: BB1 error {e1} above {b1}");
        ensure!(e2 <= b2, "eps {eps}: BB2 error {e2} above {b2}");
    }
    let r1 = big.0 / small.0;
    let r2 = big.2 / small.2;
    ensure!((50.0..=200.0).contains(&r1), "BB1 error ratio {r1}");
    ensure!((50.0..=200.0).contains(&r2), "BB2 error ratio {r2}");
    Ok(())
}

/// The six closed-form identities on one random context.
pub fn closed_form_identities(seed: u64) -> Check {
    let case = random_case(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let checks: [(&str, fn(&SpdCase, &mut ChaCha8Rng) -> Check); 6] = [
        ("monotonicity", monotonicity),
        ("alternative form", alternative_form),
        ("bracketing", bracketing),
        ("limits", limits),
        ("bijection", bijection),
        ("eigenvector degeneracy", eigenvector_degeneracy),
    ];
    for (name, check) in checks {
        check(&case, &mut rng).map_err(|e| format!("case {seed}, {name}: {e}"))?;
    }
    Ok(())
}

/// Diagonal quadratic `diag(d)` with `b = 0`, started from `x0`.
pub fn homogeneous_quadratic(d: Vec<f64>, x0: Vec<f64>) -> tbb::QuadraticProblem {
    let n = d.len();
    tbb::QuadraticProblem::new("homogeneous", SpdOperator::diagonal(d).unwrap(), vec![0.0; n])
        .unwrap()
        .with_start(x0)
        .unwrap()
}

/// Parses `toml`, sends outputs to `out` and runs the experiment.
pub fn run_manifest(toml: &str, out: &std::path::Path) -> tbb::experiment::Report {
    use tbb::experiment::{execute, plan, ExperimentConfig};
    let mut cfg = ExperimentConfig::from_toml_str(toml, std::path::Path::new("inline.toml")).unwrap();
    cfg.output_dir = Some(out.to_path_buf());
    let planned = plan(&cfg, out).unwrap();
    execute(&planned, &cfg).unwrap()
}

/// Every file below `dir`, keyed by relative path.
pub fn snapshot(dir: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut files = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

/// Path of a shipped Matrix Market fixture.
pub fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// A small manifest of each kind, for determinism checks.
pub fn small_manifests() -> Vec<(&'static str, String)> {
    vec![
        (
            "quad-bench",
            r#"
kind = "quad-bench"
seed = 5
replicates = 3
problems = ["log_uniform:n=30,l1=1,ln=1e4", "two_cluster:n=30,l1=1,ln=1e3"]
[solver]
tol = 1e-6
"#
            .to_string(),
        ),
        (
            "quad-bench fixtures",
            format!(
                "kind = \"quad-bench\"\nproblems = [\"mtx:{}\", \"mtx-scaled:{}\"]\n",
                fixture("lap1d.mtx"),
                fixture("lap2d.mtx")
            ),
        ),
        (
            "nl-bench",
            r#"
kind = "nl-bench"
problems = ["fn:ext_rosenbrock", "fn:diagonal1", "fn:broyden_tridiagonal"]
starts = ["x0", "5x0"]
dimension = 20
include_excluded = true
[solver]
tolerances = [1e-4, 1e-6]
"#
            .to_string(),
        ),
        (
            "sweep",
            r#"
kind = "sweep"
seed = 9
problems = ["covariance_like:n=40,l1=1,ln=1e3", "geometric:n=40,l1=1,ln=1e3"]
strategies = ["bb1", "bb2", "abbmin:0.8:4", "cot:1:1"]
"#
            .to_string(),
        ),
    ]
}

/// Runs both solvers for `m = 1, ..., 50` iterations and compares the
/// returned iterates, which must agree to 1e-10 relative while the line
/// search accepts full steps. Returns how many iterates were compared.
pub fn compare_solvers(p: &tbb::QuadraticProblem, strategy: TargetStrategy, beta0: f64, tol: f64) -> usize {
    use tbb::nl::{solve_nonlinear, InitialStep, NlSolverConfig};
    use tbb::qp::{solve_quadratic, QpSolverConfig};
    let obj = std::sync::Arc::new(tbb::problems::QuadraticObjective { a: p.operator().clone(), b: p.rhs().to_vec() });
    let mut compared = 0;
    for m in 1..=50 {
        let mut qcfg = QpSolverConfig::new(strategy);
        qcfg.tol = tol;
        qcfg.beta0 = beta0;
        qcfg.max_iter = m;
        let (xq, qt) = solve_quadratic(&mut p.clone(), &qcfg).unwrap();

        let mut np = tbb::NonlinearProblem::new("q", obj.clone(), p.start().to_vec());
        let mut ncfg = NlSolverConfig::new(strategy);
        ncfg.tol = tol;
        ncfg.initial_step = InitialStep::Fixed(beta0);
        ncfg.max_iter = m;
        let (xn, nt) = solve_nonlinear(&mut np, &ncfg).unwrap();
        if nt.records.iter().any(|r| r.backtracks > 0) {
            break;
        }
        assert_eq!(qt.iterations, nt.iterations, "{strategy} m={m}");
        let diff = xq.iter().zip(&xn).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = xq.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff <= 1e-10 * scale, "{strategy} m={m}: |xq - xn| = {diff:e}");
        compared = m;
        if qt.status.is_converged() {
            return 50;
        }
    }
    compared
}

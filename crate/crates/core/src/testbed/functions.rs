//! Unconstrained test functions with hand-coded gradients.
//!
//! Formulas follow the Andrei, More-Garbow-Hillstrom and Raydan collections.
//! Indices in the formulas are 1-based. Functions defined on pairs (or
//! quadruples) of variables use the first `2 floor(n/2)` (`4 floor(n/4)`)
//! coordinates; any leftover coordinate does not enter the objective.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::linalg::norm_inf;
use crate::problems::{NonlinearProblem, Objective};

pub const DEFAULT_DIMENSION: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestFunction {
    /// `sum_{i<=n/2} 100 (x_{2i} - x_{2i-1}^2)^2 + (1 - x_{2i-1})^2`, x0 = (-1.2, 1, ...)
    ExtendedRosenbrock,
    /// `sum_{i<n} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`, x0 = (-1.2, 1, ...)
    GeneralizedRosenbrock,
    /// Pairs `(1.5 - a(1-b))^2 + (2.25 - a(1-b^2))^2 + (2.625 - a(1-b^3))^2`, x0 = (1, 0.8, ...)
    ExtendedBeale,
    /// Pairs `(a^2 + b - 11)^2 + (a + b^2 - 7)^2`, x0 = (1, ..., 1)
    ExtendedHimmelblau,
    /// Pairs `100 (b - a^3)^2 + (1 - a)^2`, x0 = (-1.2, 1, ...)
    ExtendedWhiteHolst,
    /// `sum_{i<n} 100 (x_{i+1} - x_i^3)^2 + (1 - x_i)^2`, x0 = (-1.2, 1, ...)
    GeneralizedWhiteHolst,
    /// Quadruples `(p1 + 10 p2)^2 + 5 (p3 - p4)^2 + (p2 - 2 p3)^4 + 10 (p1 - p4)^4`, x0 = (3, -1, 0, 1, ...)
    ExtendedPowell,
    /// `sum e^{x_i} - i x_i`, x0 = (1/n, ..., 1/n)
    Diagonal1,
    /// `sum e^{x_i} - x_i / i`, x0 = (1, 1/2, ..., 1/n)
    Diagonal2,
    /// `sum e^{x_i} - i sin(x_i)`, x0 = (1, ..., 1)
    Diagonal3,
    /// Pairs `(a^2 + 100 b^2) / 2`, x0 = (1, ..., 1)
    Diagonal4,
    /// `sum e^{x_i} - x_i`, x0 = (1/n, 2/n, ..., 1)
    StrictlyConvex1,
    /// `sum (i/10) (e^{x_i} - x_i)`, x0 = (1, ..., 1)
    StrictlyConvex2,
    /// Pairs `(a + b - 3)^2 + (a - b + 1)^4`, x0 = (2, ..., 2)
    ExtendedTridiagonal1,
    /// `sum_{i<n} (x_i + x_{i+1} - 3)^2 + (x_i - x_{i+1} + 1)^4`, x0 = (2, ..., 2)
    GeneralizedTridiagonal1,
    /// `sum i x_i^2 + (sum x_i)^2 / 100`, x0 = (0.5, ..., 0.5)
    PerturbedQuadratic,
    /// `sum e^{x_i} - sqrt(i) x_i`, x0 = (1, ..., 1)
    Hager,
    /// Pairs `e^{a+3b-0.1} + e^{a-3b-0.1} + e^{-a-0.1}`, x0 = (0.1, ..., 0.1)
    ExtendedTet,
    /// Pairs `(a^2 + b^2 + ab)^2 + sin^2(a) + cos^2(b)`, x0 = (3, 0.1, ...)
    ExtendedPsc1,
    /// `sum ((3 - 2 x_i) x_i - x_{i-1} - 2 x_{i+1} + 1)^2`, `x_0 = x_{n+1} = 0`, x0 = (-1, ..., -1)
    BroydenTridiagonal,
    /// Pairs `(-13 + a + ((5 - b) b - 2) b)^2 + (-29 + a + ((b + 1) b - 14) b)^2`, x0 = (0.5, -2, ...)
    ExtendedFreudensteinRoth,
    /// `sum ((5 - 3 x_i - x_i^2) x_i - x_{i-1} - 3 x_{i+1} + 1)^2`, `x_0 = x_{n+1} = 0`, x0 = (-1, ..., -1)
    GeneralizedTridiagonal2,
    /// `1 + sum x_i^2 / 4000 - prod cos(x_i / sqrt(i))`, x0 = (1, ..., 1)
    Griewank,
    /// `sum (n - sum_j cos x_j + i (1 - cos x_i) - sin x_i)^2`, x0 = (1/n, ..., 1/n)
    Trigonometric,
}

use TestFunction::*;

impl TestFunction {
    pub const ALL: [TestFunction; 24] = [
        ExtendedRosenbrock,
        GeneralizedRosenbrock,
        ExtendedBeale,
        ExtendedHimmelblau,
        ExtendedWhiteHolst,
        GeneralizedWhiteHolst,
        ExtendedPowell,
        Diagonal1,
        Diagonal2,
        Diagonal3,
        Diagonal4,
        StrictlyConvex1,
        StrictlyConvex2,
        ExtendedTridiagonal1,
        GeneralizedTridiagonal1,
        PerturbedQuadratic,
        Hager,
        ExtendedTet,
        ExtendedPsc1,
        BroydenTridiagonal,
        ExtendedFreudensteinRoth,
        GeneralizedTridiagonal2,
        Griewank,
        Trigonometric,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExtendedRosenbrock => "ext_rosenbrock",
            GeneralizedRosenbrock => "gen_rosenbrock",
            ExtendedBeale => "ext_beale",
            ExtendedHimmelblau => "ext_himmelblau",
            ExtendedWhiteHolst => "ext_white_holst",
            GeneralizedWhiteHolst => "gen_white_holst",
            ExtendedPowell => "ext_powell",
            Diagonal1 => "diagonal1",
            Diagonal2 => "diagonal2",
            Diagonal3 => "diagonal3",
            Diagonal4 => "diagonal4",
            StrictlyConvex1 => "strictly_convex1",
            StrictlyConvex2 => "strictly_convex2",
            ExtendedTridiagonal1 => "ext_tridiagonal1",
            GeneralizedTridiagonal1 => "gen_tridiagonal1",
            PerturbedQuadratic => "perturbed_quadratic",
            Hager => "hager",
            ExtendedTet => "ext_tet",
            ExtendedPsc1 => "ext_psc1",
            BroydenTridiagonal => "broyden_tridiagonal",
            ExtendedFreudensteinRoth => "ext_freudenstein_roth",
            GeneralizedTridiagonal2 => "gen_tridiagonal2",
            Griewank => "griewank",
            Trigonometric => "trigonometric",
        }
    }

    /// Convex on all of `R^n`.
    pub fn is_convex(self) -> bool {
        matches!(
            self,
            ExtendedPowell
                | Diagonal1
                | Diagonal2
                | Diagonal4
                | StrictlyConvex1
                | StrictlyConvex2
                | ExtendedTridiagonal1
                | GeneralizedTridiagonal1
                | PerturbedQuadratic
                | Hager
                | ExtendedTet
        )
    }

    /// Nonconvex functions whose runs end at different stationary points
    /// depending on the stepsize; left out of profile comparisons.
    pub fn nonconvex_excluded(self) -> bool {
        matches!(
            self,
            BroydenTridiagonal | ExtendedFreudensteinRoth | GeneralizedTridiagonal2 | Griewank | Trigonometric
        )
    }

    /// Minimized after division by the norm of the first gradient.
    pub fn scale_by_g0(self) -> bool {
        matches!(self, GeneralizedRosenbrock | GeneralizedWhiteHolst | ExtendedPowell)
    }

    /// Literature starting point in dimension `n`.
    pub fn x0(self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        (0..n)
            .map(|i| {
                let odd = i % 2 == 0; // 1-based odd index
                let i1 = (i + 1) as f64;
                match self {
                    ExtendedRosenbrock | GeneralizedRosenbrock | ExtendedWhiteHolst | GeneralizedWhiteHolst => {
                        if odd {
                            -1.2
                        } else {
                            1.0
                        }
                    }
                    ExtendedBeale => {
                        if odd {
                            1.0
                        } else {
                            0.8
                        }
                    }
                    ExtendedPowell => [3.0, -1.0, 0.0, 1.0][i % 4],
                    Diagonal1 | Trigonometric => 1.0 / nf,
                    Diagonal2 => 1.0 / i1,
                    StrictlyConvex1 => i1 / nf,
                    ExtendedTridiagonal1 | GeneralizedTridiagonal1 => 2.0,
                    PerturbedQuadratic => 0.5,
                    ExtendedTet => 0.1,
                    ExtendedPsc1 => {
                        if odd {
                            3.0
                        } else {
                            0.1
                        }
                    }
                    BroydenTridiagonal | GeneralizedTridiagonal2 => -1.0,
                    ExtendedFreudensteinRoth => {
                        if odd {
                            0.5
                        } else {
                            -2.0
                        }
                    }
                    ExtendedHimmelblau | Diagonal3 | Diagonal4 | StrictlyConvex2 | Hager | Griewank => 1.0,
                }
            })
            .collect()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TestFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|f| f.id() == key).ok_or_else(|| format!("unknown test function '{s}'"))
    }
}

/// Applies `body(a, b, ga, gb)` to consecutive pairs, accumulating the value.
fn pairs(x: &[f64], g: Option<&mut [f64]>, body: impl Fn(f64, f64) -> (f64, f64, f64)) -> f64 {
    let mut f = 0.0;
    match g {
        Some(g) => {
            g.fill(0.0);
            for (xc, gc) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
                let (v, ga, gb) = body(xc[0], xc[1]);
                f += v;
                gc[0] = ga;
                gc[1] = gb;
            }
        }
        None => {
            for xc in x.chunks_exact(2) {
                f += body(xc[0], xc[1]).0;
            }
        }
    }
    f
}

/// Same as [`pairs`] for chained terms over `(x_i, x_{i+1})`.
fn chain(x: &[f64], g: Option<&mut [f64]>, body: impl Fn(f64, f64) -> (f64, f64, f64)) -> f64 {
    let mut f = 0.0;
    match g {
        Some(g) => {
            g.fill(0.0);
            for i in 0..x.len().saturating_sub(1) {
                let (v, ga, gb) = body(x[i], x[i + 1]);
                f += v;
                g[i] += ga;
                g[i + 1] += gb;
            }
        }
        None => {
            for w in x.windows(2) {
                f += body(w[0], w[1]).0;
            }
        }
    }
    f
}

/// Terms `r_i = phi(x_i) - x_{i-1} - c x_{i+1} + 1` squared, zero boundary.
fn banded(x: &[f64], g: Option<&mut [f64]>, c: f64, phi: impl Fn(f64) -> (f64, f64)) -> f64 {
    let n = x.len();
    let at = |i: isize| if i < 0 || i as usize >= n { 0.0 } else { x[i as usize] };
    let r: Vec<f64> = (0..n as isize).map(|i| phi(at(i)).0 - at(i - 1) - c * at(i + 1) + 1.0).collect();
    if let Some(g) = g {
        for j in 0..n {
            let mut v = 2.0 * r[j] * phi(x[j]).1;
            if j + 1 < n {
                v -= 2.0 * r[j + 1];
            }
            if j > 0 {
                v -= 2.0 * c * r[j - 1];
            }
            g[j] = v;
        }
    }
    r.iter().map(|v| v * v).sum()
}

fn evaluate(fun: TestFunction, x: &[f64], mut g: Option<&mut [f64]>) -> f64 {
    let n = x.len();
    let idx = |i: usize| (i + 1) as f64;
    // separable sum_i h(i, x_i) with derivative
    let mut separable = |h: &dyn Fn(f64, f64) -> (f64, f64)| -> f64 {
        let mut f = 0.0;
        for i in 0..n {
            let (v, d) = h(idx(i), x[i]);
            f += v;
            if let Some(g) = g.as_deref_mut() {
                g[i] = d;
            }
        }
        f
    };
    match fun {
        Diagonal1 => return separable(&|i, t| (t.exp() - i * t, t.exp() - i)),
        Diagonal2 => return separable(&|i, t| (t.exp() - t / i, t.exp() - 1.0 / i)),
        Diagonal3 => return separable(&|i, t| (t.exp() - i * t.sin(), t.exp() - i * t.cos())),
        StrictlyConvex1 => return separable(&|_, t| (t.exp() - t, t.exp() - 1.0)),
        StrictlyConvex2 => return separable(&|i, t| (i / 10.0 * (t.exp() - t), i / 10.0 * (t.exp() - 1.0))),
        Hager => return separable(&|i, t| (t.exp() - i.sqrt() * t, t.exp() - i.sqrt())),
        _ => {}
    }
    match fun {
        ExtendedRosenbrock => pairs(x, g, |a, b| {
            let (t, u) = (b - a * a, 1.0 - a);
            (100.0 * t * t + u * u, -400.0 * a * t - 2.0 * u, 200.0 * t)
        }),
        GeneralizedRosenbrock => chain(x, g, |a, b| {
            let (t, u) = (b - a * a, 1.0 - a);
            (100.0 * t * t + u * u, -400.0 * a * t - 2.0 * u, 200.0 * t)
        }),
        ExtendedWhiteHolst => pairs(x, g, |a, b| {
            let (t, u) = (b - a * a * a, 1.0 - a);
            (100.0 * t * t + u * u, -600.0 * a * a * t - 2.0 * u, 200.0 * t)
        }),
        GeneralizedWhiteHolst => chain(x, g, |a, b| {
            let (t, u) = (b - a * a * a, 1.0 - a);
            (100.0 * t * t + u * u, -600.0 * a * a * t - 2.0 * u, 200.0 * t)
        }),
        ExtendedBeale => pairs(x, g, |a, b| {
            let (b2, b3) = (b * b, b * b * b);
            let w1 = 1.5 - a * (1.0 - b);
            let w2 = 2.25 - a * (1.0 - b2);
            let w3 = 2.625 - a * (1.0 - b3);
            let ga = -2.0 * (w1 * (1.0 - b) + w2 * (1.0 - b2) + w3 * (1.0 - b3));
            let gb = 2.0 * a * (w1 + 2.0 * w2 * b + 3.0 * w3 * b2);
            (w1 * w1 + w2 * w2 + w3 * w3, ga, gb)
        }),
        ExtendedHimmelblau => pairs(x, g, |a, b| {
            let (p, q) = (a * a + b - 11.0, a + b * b - 7.0);
            (p * p + q * q, 4.0 * a * p + 2.0 * q, 2.0 * p + 4.0 * b * q)
        }),
        ExtendedPowell => {
            let mut f = 0.0;
            if let Some(g) = g.as_deref_mut() {
                g.fill(0.0);
            }
            for k in 0..n / 4 {
                let p = &x[4 * k..4 * k + 4];
                let t1 = p[0] + 10.0 * p[1];
                let t2 = p[2] - p[3];
                let t3 = p[1] - 2.0 * p[2];
                let t4 = p[0] - p[3];
                f += t1 * t1 + 5.0 * t2 * t2 + t3.powi(4) + 10.0 * t4.powi(4);
                if let Some(g) = g.as_deref_mut() {
                    let (c3, c4) = (4.0 * t3.powi(3), 40.0 * t4.powi(3));
                    g[4 * k] = 2.0 * t1 + c4;
                    g[4 * k + 1] = 20.0 * t1 + c3;
                    g[4 * k + 2] = 10.0 * t2 - 2.0 * c3;
                    g[4 * k + 3] = -10.0 * t2 - c4;
                }
            }
            f
        }
        Diagonal4 => pairs(x, g, |a, b| (0.5 * (a * a + 100.0 * b * b), a, 100.0 * b)),
        ExtendedTridiagonal1 => pairs(x, g, |a, b| {
            let (u, v) = (a + b - 3.0, a - b + 1.0);
            (u * u + v.powi(4), 2.0 * u + 4.0 * v.powi(3), 2.0 * u - 4.0 * v.powi(3))
        }),
        GeneralizedTridiagonal1 => chain(x, g, |a, b| {
            let (u, v) = (a + b - 3.0, a - b + 1.0);
            (u * u + v.powi(4), 2.0 * u + 4.0 * v.powi(3), 2.0 * u - 4.0 * v.powi(3))
        }),
        PerturbedQuadratic => {
            let sum: f64 = x.iter().sum();
            if let Some(g) = g {
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi = 2.0 * idx(i) * x[i] + sum / 50.0;
                }
            }
            x.iter().enumerate().map(|(i, v)| idx(i) * v * v).sum::<f64>() + sum * sum / 100.0
        }
        ExtendedTet => pairs(x, g, |a, b| {
            let e1 = (a + 3.0 * b - 0.1).exp();
            let e2 = (a - 3.0 * b - 0.1).exp();
            let e3 = (-a - 0.1).exp();
            (e1 + e2 + e3, e1 + e2 - e3, 3.0 * (e1 - e2))
        }),
        ExtendedPsc1 => pairs(x, g, |a, b| {
            let q = a * a + b * b + a * b;
            let f = q * q + a.sin().powi(2) + b.cos().powi(2);
            (f, 2.0 * q * (2.0 * a + b) + (2.0 * a).sin(), 2.0 * q * (2.0 * b + a) - (2.0 * b).sin())
        }),
        BroydenTridiagonal => banded(x, g, 2.0, |t| ((3.0 - 2.0 * t) * t, 3.0 - 4.0 * t)),
        GeneralizedTridiagonal2 => {
            banded(x, g, 3.0, |t| ((5.0 - 3.0 * t - t * t) * t, 5.0 - 6.0 * t - 3.0 * t * t))
        }
        ExtendedFreudensteinRoth => pairs(x, g, |a, b| {
            let r1 = -13.0 + a + ((5.0 - b) * b - 2.0) * b;
            let r2 = -29.0 + a + ((b + 1.0) * b - 14.0) * b;
            let d1 = 10.0 * b - 3.0 * b * b - 2.0;
            let d2 = 3.0 * b * b + 2.0 * b - 14.0;
            (r1 * r1 + r2 * r2, 2.0 * (r1 + r2), 2.0 * (r1 * d1 + r2 * d2))
        }),
        Griewank => {
            let c: Vec<f64> = (0..n).map(|i| (x[i] / idx(i).sqrt()).cos()).collect();
            let prod: f64 = c.iter().product();
            if let Some(g) = g {
                // product of all cosines but the j-th, without dividing by c_j
                let mut prefix = vec![1.0; n + 1];
                for i in 0..n {
                    prefix[i + 1] = prefix[i] * c[i];
                }
                let mut suffix = 1.0;
                for j in (0..n).rev() {
                    let others = prefix[j] * suffix;
                    let r = idx(j).sqrt();
                    g[j] = x[j] / 2000.0 + (x[j] / r).sin() / r * others;
                    suffix *= c[j];
                }
            }
            1.0 + x.iter().map(|v| v * v).sum::<f64>() / 4000.0 - prod
        }
        Trigonometric => {
            let nf = n as f64;
            let cos_sum: f64 = x.iter().map(|v| v.cos()).sum();
            let r: Vec<f64> =
                (0..n).map(|i| nf - cos_sum + idx(i) * (1.0 - x[i].cos()) - x[i].sin()).collect();
            if let Some(g) = g {
                let r_sum: f64 = r.iter().sum();
                for j in 0..n {
                    g[j] = 2.0 * (r_sum * x[j].sin() + r[j] * (idx(j) * x[j].sin() - x[j].cos()));
                }
            }
            r.iter().map(|v| v * v).sum()
        }
        Diagonal1 | Diagonal2 | Diagonal3 | StrictlyConvex1 | StrictlyConvex2 | Hager => unreachable!(),
    }
}

impl Objective for TestFunction {
    fn value(&self, x: &[f64]) -> f64 {
        evaluate(*self, x, None)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        evaluate(*self, x, Some(g));
    }
}

/// Multiple of the literature starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StartPoint {
    X0,
    X5,
    X10,
}

impl StartPoint {
    pub const ALL: [StartPoint; 3] = [StartPoint::X0, StartPoint::X5, StartPoint::X10];

    pub fn factor(self) -> f64 {
        match self {
            StartPoint::X0 => 1.0,
            StartPoint::X5 => 5.0,
            StartPoint::X10 => 10.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StartPoint::X0 => "x0",
            StartPoint::X5 => "5x0",
            StartPoint::X10 => "10x0",
        }
    }
}

impl FromStr for StartPoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.label() == s.trim()).ok_or_else(|| format!("unknown start point '{s}'"))
    }
}

/// One (function, starting point) entry of the collection.
#[derive(Debug, Clone)]
pub struct TestProblem {
    pub function: TestFunction,
    pub start: StartPoint,
    pub problem: NonlinearProblem,
}

impl TestProblem {
    pub fn new(function: TestFunction, start: StartPoint, n: usize) -> Self {
        let x0: Vec<f64> = function.x0(n).into_iter().map(|v| v * start.factor()).collect();
        let name = format!("{}@{}", function.id(), start.label());
        let problem = NonlinearProblem::new(name, Arc::new(function), x0).scaled_by_initial_gradient(function.scale_by_g0());
        Self { function, start, problem }
    }
}

/// Every function at `x0`, `5 x0` and `10 x0` in dimension `n`, ordered by
/// function then starting point.
pub fn nonlinear_collection(n: usize) -> Vec<TestProblem> {
    TestFunction::ALL
        .into_iter()
        .flat_map(|f| StartPoint::ALL.into_iter().map(move |s| TestProblem::new(f, s, n)))
        .collect()
}

/// Largest central-difference gradient error relative to `max(1, |g|_inf)`,
/// with step `1e-6 (1 + |x|_inf)`.
pub fn fd_gradient_error(obj: &dyn Objective, x: &[f64]) -> f64 {
    let h = 1e-6 * (1.0 + norm_inf(x));
    let mut g = vec![0.0; x.len()];
    obj.gradient(x, &mut g);
    let mut xp = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = obj.value(&xp);
        xp[i] = x[i] - h;
        let fm = obj.value(&xp);
        xp[i] = x[i];
        worst = worst.max(((fp - fm) / (2.0 * h) - g[i]).abs());
    }
    worst / norm_inf(&g).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(f: TestFunction, x: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; x.len()];
        f.gradient(x, &mut g);
        (f.value(x), g)
    }

    #[test]
    fn known_minimizers() {
        let n = 10;
        let (f, g) = eval(StrictlyConvex1, &vec![0.0; n]);
        assert_eq!(f, n as f64);
        assert!(g.iter().all(|v| *v == 0.0));
        let (f, g) = eval(ExtendedRosenbrock, &vec![1.0; n]);
        assert_eq!(f, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
        let (f, g) = eval(Diagonal4, &vec![0.0; n]);
        assert_eq!(f, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
        let x: Vec<f64> = (1..=n).map(|i| (i as f64).ln()).collect();
        assert!(eval(Diagonal1, &x).1.iter().all(|v| v.abs() < 1e-14));
        let (f, _) = eval(ExtendedPowell, &[0.0; 8]);
        assert_eq!(f, 0.0);
        let (f, _) = eval(Griewank, &[0.0; 5]);
        assert_eq!(f, 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for f in TestFunction::ALL {
            for n in [8, 10] {
                let x0 = f.x0(n);
                let err = fd_gradient_error(&f, &x0);
                assert!(err <= 1e-5, "{f} n={n}: {err:e}");
            }
        }
    }

    #[test]
    fn collection_layout() {
        let all = nonlinear_collection(DEFAULT_DIMENSION);
        assert_eq!(all.len(), 3 * TestFunction::ALL.len());
        let kept = TestFunction::ALL.iter().filter(|f| !f.nonconvex_excluded()).count();
        assert!(kept >= 12);
        let p = &all[5];
        assert_eq!(p.problem.name, "gen_rosenbrock@10x0");
        assert!(p.problem.is_scaled());
        assert_eq!(p.problem.start()[0], -12.0);
        for f in TestFunction::ALL {
            assert_eq!(f.id().parse::<TestFunction>().unwrap(), f);
        }
    }
}

//! Strategy x problem grids with performance profiles. Also holds summary tables and stepsize sweeps.
//!
//! Costs of failed runs are `None` and turn into an infinite performance
//! ratio. Grid cells run in parallel but results always come back in
//! (problem, strategy) order, so every output is independent of scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::nl::{solve_nonlinear, NlSolverConfig};
use crate::problems::{NonlinearProblem, QuadraticProblem};
use crate::qp::{solve_quadratic, ConfigError, QpSolverConfig};
use crate::stepsize::TargetStrategy;
use crate::trace::{fmt_num, RunStatus, RunTrace};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("every strategy failed on problem '{0}'")]
    AllFailed(String),
    #[error("cost matrix shape: {0}")]
    Shape(String),
    #[error("sweeps need a diagonal Hessian; '{0}' is not diagonal")]
    NotDiagonal(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostMetric {
    Iterations,
    FunctionEvals,
    GradientEvals,
}

impl CostMetric {
    pub fn name(self) -> &'static str {
        match self {
            CostMetric::Iterations => "iterations",
            CostMetric::FunctionEvals => "nfev",
            CostMetric::GradientEvals => "ngev",
        }
    }
}

impl fmt::Display for CostMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "iterations" | "iter" => Ok(Self::Iterations),
            "nfev" | "function_evals" => Ok(Self::FunctionEvals),
            "ngev" | "gradient_evals" => Ok(Self::GradientEvals),
            other => Err(format!("unknown cost metric '{other}'")),
        }
    }
}

/// Result of one (problem, strategy) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub problem: String,
    pub strategy: String,
    pub status: RunStatus,
    pub iterations: usize,
    pub n_f: u64,
    pub n_g: u64,
    pub g0_norm: f64,
    pub final_g_norm: f64,
    pub final_f: f64,
}

impl RunOutcome {
    pub fn from_trace(problem: &str, strategy: &TargetStrategy, trace: &RunTrace) -> Self {
        Self {
            problem: problem.to_string(),
            strategy: strategy.to_string(),
            status: trace.status.clone(),
            iterations: trace.iterations,
            n_f: trace.n_f,
            n_g: trace.n_g,
            g0_norm: trace.g0_norm,
            final_g_norm: trace.final_g_norm,
            final_f: trace.final_f,
        }
    }

    /// `None` unless the run converged. A run that starts at a stationary
    /// point is charged one unit so that ratios stay defined.
    pub fn cost(&self, metric: CostMetric) -> Option<f64> {
        if !self.status.is_converged() {
            return None;
        }
        let c = match metric {
            CostMetric::Iterations => self.iterations as u64,
            CostMetric::FunctionEvals => self.n_f,
            CostMetric::GradientEvals => self.n_g,
        };
        Some(c.max(1) as f64)
    }
}

/// Problems x strategies costs; `None` marks a failure.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub problems: Vec<String>,
    pub strategies: Vec<String>,
    pub costs: Vec<Vec<Option<f64>>>,
}

impl CostMatrix {
    pub fn new(problems: Vec<String>, strategies: Vec<String>, costs: Vec<Vec<Option<f64>>>) -> Result<Self, BenchError> {
        if costs.len() != problems.len() || costs.iter().any(|r| r.len() != strategies.len()) {
            return Err(BenchError::Shape(format!(
                "expected {} rows of {} entries",
                problems.len(),
                strategies.len()
            )));
        }
        if let Some(c) = costs.iter().flatten().flatten().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(BenchError::Shape(format!("costs must be positive and finite, found {c}")));
        }
        Ok(Self { problems, strategies, costs })
    }

    /// Collects outcomes in the given orders. Missing cells count as failures.
    pub fn from_outcomes(
        outcomes: &[RunOutcome],
        problems: &[String],
        strategies: &[String],
        metric: CostMetric,
    ) -> Result<Self, BenchError> {
        let index: BTreeMap<(&str, &str), &RunOutcome> =
            outcomes.iter().map(|o| ((o.problem.as_str(), o.strategy.as_str()), o)).collect();
        let costs = problems
            .iter()
            .map(|p| {
                strategies
                    .iter()
                    .map(|s| index.get(&(p.as_str(), s.as_str())).and_then(|o| o.cost(metric)))
                    .collect()
            })
            .collect();
        Self::new(problems.to_vec(), strategies.to_vec(), costs)
    }

    /// The same matrix without the named problems.
    pub fn without(&self, drop: &[String]) -> Self {
        let keep: Vec<usize> = (0..self.problems.len()).filter(|&i| !drop.contains(&self.problems[i])).collect();
        Self {
            problems: keep.iter().map(|&i| self.problems[i].clone()).collect(),
            strategies: self.strategies.clone(),
            costs: keep.iter().map(|&i| self.costs[i].clone()).collect(),
        }
    }

    /// Problems on which every strategy failed.
    pub fn all_failed_rows(&self) -> Vec<String> {
        self.problems
            .iter()
            .zip(&self.costs)
            .filter(|(_, row)| row.iter().all(Option::is_none))
            .map(|(p, _)| p.clone())
            .collect()
    }
}

/// `r[p][s] = cost[p][s] / min_s cost[p][s]`, with failures at `+inf`.
pub fn performance_ratios(costs: &CostMatrix) -> Result<Vec<Vec<f64>>, BenchError> {
    costs
        .costs
        .iter()
        .zip(&costs.problems)
        .map(|(row, name)| {
            let best = row.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            if !best.is_finite() {
                return Err(BenchError::AllFailed(name.clone()));
            }
            Ok(row.iter().map(|c| c.map_or(f64::INFINITY, |c| c / best)).collect())
        })
        .collect()
}

/// Cumulative share of problems solved within each ratio, as a step function.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub strategy: String,
    /// Sorted breakpoints, starting at 1.
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
}

impl ProfileCurve {
    /// `rho` at any `t >= 1`.
    pub fn at(&self, t: f64) -> f64 {
        match self.t.iter().rposition(|b| *b <= t) {
            Some(i) => self.rho[i],
            None => 0.0,
        }
    }
}

pub fn profile_curve(ratios: &[Vec<f64>], strategy: usize, name: &str) -> ProfileCurve {
    let column: Vec<f64> = ratios.iter().map(|r| r[strategy]).collect();
    let total = column.len().max(1) as f64;
    let mut t: Vec<f64> = column.iter().copied().filter(|r| r.is_finite()).collect();
    t.push(1.0);
    t.sort_by(f64::total_cmp);
    t.dedup();
    let rho = t.iter().map(|b| column.iter().filter(|r| **r <= *b).count() as f64 / total).collect();
    ProfileCurve { strategy: name.to_string(), t, rho }
}

pub fn profile_curves(costs: &CostMatrix) -> Result<Vec<ProfileCurve>, BenchError> {
    let ratios = performance_ratios(costs)?;
    Ok(costs.strategies.iter().enumerate().map(|(s, name)| profile_curve(&ratios, s, name)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: String,
    pub solved_pct: f64,
    pub pr1_pct: f64,
    /// Mean, sample standard deviation and range of the finite ratios.
    pub avg: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summary_table(costs: &CostMatrix) -> Result<Vec<SummaryRow>, BenchError> {
    let ratios = performance_ratios(costs)?;
    let total = ratios.len() as f64;
    Ok(costs
        .strategies
        .iter()
        .enumerate()
        .map(|(s, name)| {
            let finite: Vec<f64> = ratios.iter().map(|r| r[s]).filter(|r| r.is_finite()).collect();
            let m = finite.len() as f64;
            let avg = finite.iter().sum::<f64>() / m;
            let sd = if finite.len() > 1 {
                (finite.iter().map(|r| (r - avg).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
            } else if finite.len() == 1 {
                0.0
            } else {
                f64::NAN
            };
            SummaryRow {
                strategy: name.clone(),
                solved_pct: 100.0 * m / total,
                pr1_pct: 100.0 * finite.iter().filter(|r| **r == 1.0).count() as f64 / total,
                avg: if finite.is_empty() { f64::NAN } else { avg },
                sd,
                min: finite.iter().copied().fold(f64::INFINITY, f64::min),
                max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect())
}

/// Problems whose converged runs disagree on the final objective by more
/// than `rel (1 + |median|)`.
pub fn multi_minimum_problems(outcomes: &[RunOutcome], rel: f64) -> Vec<String> {
    let mut by_problem: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for o in outcomes.iter().filter(|o| o.status.is_converged() && o.final_f.is_finite()) {
        by_problem.entry(&o.problem).or_default().push(o.final_f);
    }
    let mut flagged = Vec::new();
    for (p, mut f) in by_problem {
        f.sort_by(f64::total_cmp);
        let median = if f.len() % 2 == 1 { f[f.len() / 2] } else { 0.5 * (f[f.len() / 2 - 1] + f[f.len() / 2]) };
        if f[f.len() - 1] - f[0] > rel * (1.0 + median.abs()) {
            flagged.push(p.to_string());
        }
    }
    // keep the order in which problems first appear
    let mut ordered: Vec<String> = Vec::new();
    for o in outcomes {
        if flagged.contains(&o.problem) && !ordered.contains(&o.problem) {
            ordered.push(o.problem.clone());
        }
    }
    ordered
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    Ok(pool.install(job))
}

/// Runs every strategy on every problem, `workers` cells at a time
/// (0 means one per core). Outcomes are ordered problem-major.
pub fn run_quadratic_grid(
    problems: &[QuadraticProblem],
    strategies: &[TargetStrategy],
    base: &QpSolverConfig,
    workers: usize,
) -> Result<Vec<RunOutcome>, BenchError> {
    let mut probe = base.clone();
    probe.record_trace = false;
    for s in strategies {
        probe.strategy = *s;
        probe.validate()?;
    }
    let cells: Vec<(usize, usize)> =
        (0..problems.len()).flat_map(|p| (0..strategies.len()).map(move |s| (p, s))).collect();
    with_pool(workers, || {
        cells
            .par_iter()
            .map(|&(p, s)| {
                let mut problem = problems[p].clone();
                let mut cfg = base.clone();
                cfg.strategy = strategies[s];
                cfg.record_trace = false;
                cfg.store_gradients = false;
                let (_, trace) = solve_quadratic(&mut problem, &cfg).expect("config validated above");
                RunOutcome::from_trace(&problem.name, &strategies[s], &trace)
            })
            .collect()
    })
}

pub fn run_nonlinear_grid(
    problems: &[NonlinearProblem],
    strategies: &[TargetStrategy],
    base: &NlSolverConfig,
    workers: usize,
) -> Result<Vec<RunOutcome>, BenchError> {
    let mut probe = base.clone();
    for s in strategies {
        probe.strategy = *s;
        probe.validate()?;
    }
    let cells: Vec<(usize, usize)> =
        (0..problems.len()).flat_map(|p| (0..strategies.len()).map(move |s| (p, s))).collect();
    with_pool(workers, || {
        cells
            .par_iter()
            .map(|&(p, s)| {
                let mut problem = problems[p].clone();
                let mut cfg = base.clone();
                cfg.strategy = strategies[s];
                cfg.record_trace = false;
                let (_, trace) = solve_nonlinear(&mut problem, &cfg).expect("config validated above");
                RunOutcome::from_trace(&problem.name, &strategies[s], &trace)
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub strategy: TargetStrategy,
    pub status: RunStatus,
    pub iterations: usize,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub problem: String,
    pub lambda1: f64,
    pub lambda_n: f64,
    /// 21 eigenvalues at equally spaced positions of the sorted spectrum,
    /// including both ends.
    pub reference: Vec<f64>,
    /// Ordered by iterations, ties broken by strategy name.
    pub runs: Vec<SweepRun>,
}

pub const SWEEP_REFERENCE_LINES: usize = 21;

/// Records the inverse stepsizes of every strategy on a diagonal problem.
pub fn sweep_experiment(
    problem: &QuadraticProblem,
    strategies: &[TargetStrategy],
    cfg: &QpSolverConfig,
) -> Result<SweepResult, BenchError> {
    let diag = problem.operator().as_diagonal().ok_or_else(|| BenchError::NotDiagonal(problem.name.clone()))?;
    let mut eig = diag.to_vec();
    eig.sort_by(f64::total_cmp);
    let n = eig.len();
    let reference = (0..SWEEP_REFERENCE_LINES)
        .map(|j| eig[((j * (n - 1)) as f64 / (SWEEP_REFERENCE_LINES - 1) as f64).round() as usize])
        .collect();
    let mut runs = Vec::with_capacity(strategies.len());
    for s in strategies {
        let mut p = problem.clone();
        let mut c = cfg.clone();
        c.strategy = *s;
        c.record_trace = true;
        let (_, trace) = solve_quadratic(&mut p, &c)?;
        runs.push(SweepRun { strategy: *s, status: trace.status.clone(), iterations: trace.iterations, alphas: trace.alphas() });
    }
    runs.sort_by(|a, b| a.iterations.cmp(&b.iterations).then_with(|| a.strategy.to_string().cmp(&b.strategy.to_string())));
    Ok(SweepResult { problem: problem.name.clone(), lambda1: eig[0], lambda_n: eig[n - 1], reference, runs })
}

fn cost_cell(c: Option<f64>) -> String {
    c.map_or_else(|| "FAIL".to_string(), fmt_num)
}

pub fn write_costs_csv<W: Write>(w: W, costs: &CostMatrix) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(w);
    let mut header = vec!["problem".to_string()];
    header.extend(costs.strategies.iter().cloned());
    w.write_record(&header)?;
    for (p, row) in costs.problems.iter().zip(&costs.costs) {
        let mut rec = vec![p.clone()];
        rec.extend(row.iter().map(|c| cost_cell(*c)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the breakpoints inside `[1, t_max]` plus the value at `t_max`.
pub fn write_profile_csv<W: Write>(w: W, curves: &[ProfileCurve], t_max: f64) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["strategy", "t", "rho"])?;
    for c in curves {
        for (t, rho) in c.t.iter().zip(&c.rho).filter(|(t, _)| **t <= t_max) {
            w.write_record([c.strategy.as_str(), &fmt_num(*t), &fmt_num(*rho)])?;
        }
        if c.t.last().is_some_and(|t| *t < t_max) || c.t.iter().all(|t| *t > t_max) {
            w.write_record([c.strategy.as_str(), &fmt_num(t_max), &fmt_num(c.at(t_max))])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["strategy", "solved_pct", "pr1_pct", "avg", "sd", "min", "max"])?;
    for r in rows {
        let num = |x: f64| if x.is_nan() { "na".to_string() } else { fmt_num(x) };
        w.write_record([
            r.strategy.clone(),
            num(r.solved_pct),
            num(r.pr1_pct),
            num(r.avg),
            num(r.sd),
            if r.min.is_finite() { fmt_num(r.min) } else { "na".into() },
            if r.max.is_finite() { fmt_num(r.max) } else { "na".into() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run details for both cost metrics.
pub fn write_runs_csv<W: Write>(w: W, outcomes: &[RunOutcome]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["problem", "strategy", "status", "iterations", "nfev", "ngev", "gnorm0", "gnorm", "fval"])?;
    for o in outcomes {
        w.write_record([
            o.problem.clone(),
            o.strategy.clone(),
            o.status.as_str().to_string(),
            o.iterations.to_string(),
            o.n_f.to_string(),
            o.n_g.to_string(),
            fmt_num(o.g0_norm),
            fmt_num(o.final_g_norm),
            fmt_num(o.final_f),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `k,strategy,alpha` rows, strategies in sweep order.
pub fn write_sweep_csv<W: Write>(w: W, sweep: &SweepResult) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["k", "strategy", "alpha"])?;
    for run in &sweep.runs {
        let name = run.strategy.to_string();
        for (k, a) in run.alphas.iter().enumerate() {
            w.write_record([k.to_string(), name.clone(), fmt_num(*a)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The reference eigenvalue lines of a sweep as `j,lambda`.
pub fn write_spectrum_csv<W: Write>(w: W, sweep: &SweepResult) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["j", "lambda"])?;
    for (j, l) in sweep.reference.iter().enumerate() {
        w.write_record([j.to_string(), fmt_num(*l)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(costs: Vec<Vec<Option<f64>>>) -> CostMatrix {
        let p = (0..costs.len()).map(|i| format!("p{i}")).collect();
        let s = (0..costs[0].len()).map(|i| format!("s{i}")).collect();
        CostMatrix::new(p, s, costs).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let r = performance_ratios(&matrix(vec![vec![Some(10.0), Some(20.0), None]])).unwrap();
        assert_eq!(r, vec![vec![1.0, 2.0, f64::INFINITY]]);
        let r = performance_ratios(&matrix(vec![vec![Some(7.0), Some(7.0)]])).unwrap();
        assert_eq!(r, vec![vec![1.0, 1.0]]);
        let r = performance_ratios(&matrix(vec![vec![Some(10.0), Some(20.0)], vec![Some(30.0), Some(15.0)]])).unwrap();
        assert_eq!(r, vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        let err = performance_ratios(&matrix(vec![vec![Some(1.0)], vec![None]])).unwrap_err();
        assert!(err.to_string().contains("p1"));
    }

    #[test]
    fn profile_examples() {
        let ratios = vec![vec![1.0], vec![2.0], vec![f64::INFINITY]];
        let c = profile_curve(&ratios, 0, "a");
        assert_eq!(c.t, vec![1.0, 2.0]);
        assert_eq!(c.rho, vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(c.at(1e300), 2.0 / 3.0);
        let c = profile_curve(&[vec![1.5]], 0, "b");
        assert_eq!((c.at(1.0), c.at(1.5)), (0.0, 1.0));
        let c = profile_curve(&[vec![1.0], vec![1.0]], 0, "c");
        assert_eq!(c.at(1.0), 1.0);
    }

    #[test]
    fn summary_examples() {
        let rows = summary_table(&matrix(vec![vec![Some(10.0), Some(20.0)], vec![Some(30.0), Some(15.0)]])).unwrap();
        for r in &rows {
            assert_eq!((r.solved_pct, r.pr1_pct, r.avg, r.min, r.max), (100.0, 50.0, 1.5, 1.0, 2.0));
        }
        let rows = summary_table(&matrix(vec![
            vec![Some(1.0), Some(1.0)],
            vec![Some(1.0), None],
            vec![Some(2.0), Some(2.0)],
            vec![Some(3.0), Some(3.0)],
        ]))
        .unwrap();
        assert_eq!(rows[1].solved_pct, 75.0);
        let rows = summary_table(&matrix(vec![vec![Some(4.0); 3]; 5])).unwrap();
        for r in &rows {
            assert_eq!((r.solved_pct, r.pr1_pct, r.avg, r.sd, r.min, r.max), (100.0, 100.0, 1.0, 0.0, 1.0, 1.0));
        }
    }

    #[test]
    fn csv_layouts() {
        let m = matrix(vec![vec![Some(10.0), None]]);
        let mut out = Vec::new();
        write_costs_csv(&mut out, &m).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "problem,s0,s1\np0,10,FAIL\n");
        let curves = profile_curves(&m).unwrap();
        let mut out = Vec::new();
        write_profile_csv(&mut out, &curves, 3.0).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "strategy,t,rho\ns0,1,1\ns0,3,1\ns1,1,0\ns1,3,0\n");
    }

    #[test]
    fn multi_minimum_detection() {
        let o = |p: &str, s: &str, f: f64| RunOutcome {
            problem: p.into(),
            strategy: s.into(),
            status: RunStatus::Converged,
            iterations: 1,
            n_f: 1,
            n_g: 1,
            g0_norm: 1.0,
            final_g_norm: 0.0,
            final_f: f,
        };
        let outcomes = vec![o("a", "x", 0.0), o("a", "y", 1e-6), o("b", "x", 0.0), o("b", "y", 1225.0)];
        assert_eq!(multi_minimum_problems(&outcomes, 1e-3), vec!["b".to_string()]);
    }
}

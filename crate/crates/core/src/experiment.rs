//! Experiment manifests and the runs they describe.
//!
//! A manifest is a TOML file with a strict schema: unknown keys are errors,
//! so a typo in a parameter cannot silently change a benchmark. Outputs are
//! plain CSV files whose bytes depend only on the manifest.
//!
//! ```toml
//! kind = "quad-bench"          # quad-bench | nl-bench | sweep | single-run
//! seed = 1
//! replicates = 20              # seeded copies of each random generator
//! problems = ["log_uniform:n=100,l1=1,ln=1e4", "mtx:fixtures/lap2d.mtx"]
//! strategies = ["bb1", "abbmin:0.8:4"]   # empty or absent means all 13
//!
//! [solver]
//! tol = 1e-6
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::Deserialize;
use thiserror::Error;

use crate::bench::{
    multi_minimum_problems, profile_curves, run_nonlinear_grid, run_quadratic_grid, summary_table, sweep_experiment,
    write_costs_csv, write_profile_csv, write_runs_csv, write_spectrum_csv, write_summary_csv, write_sweep_csv,
    BenchError, CostMatrix, CostMetric, RunOutcome,
};
use crate::nl::{solve_nonlinear, InitialStep, NlSolverConfig};
use crate::problems::{NonlinearProblem, QuadraticProblem};
use crate::qp::{solve_quadratic, ConfigError, QpSolverConfig};
use crate::stepsize::{ReplacementRule, StrategyParseError, TargetStrategy};
use crate::testbed::{
    generate_qp, load_matrix_market, quadratic_from_operator, GeneratorError, MatrixMarketError, QpGeneratorKind,
    QpGeneratorSpec, StartPoint, TestFunction, TestProblem, DEFAULT_DIMENSION,
};
use crate::trace::{fmt_num, RunStatus, RunTrace};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    ParseConfig { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("bad strategy '{token}': {source}")]
    Strategy { token: String, source: StrategyParseError },
    #[error("bad problem '{spec}': {message}")]
    Problem { spec: String, message: String },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    MatrixMarket(#[from] MatrixMarketError),
    #[error(transparent)]
    Solver(#[from] ConfigError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl ExperimentError {
    /// True for errors raised while running solvers rather than while
    /// reading or validating input.
    pub fn is_runtime(&self) -> bool {
        matches!(self, ExperimentError::Bench(BenchError::AllFailed(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    QuadBench,
    NlBench,
    Sweep,
    SingleRun,
}

impl ExperimentKind {
    fn is_nonlinear(self) -> bool {
        matches!(self, ExperimentKind::NlBench)
    }
}

/// Solver settings; absent keys keep the solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    /// Several tolerances for nl-bench; overrides `tol`.
    pub tolerances: Option<Vec<f64>>,
    pub max_iter: Option<usize>,
    pub beta0: Option<f64>,
    /// `"fixed"` (uses `beta0`) or `"inv_gnorm"`.
    pub initial_step: Option<String>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub c_ls: Option<f64>,
    pub sigma_ls: Option<f64>,
    pub memory: Option<usize>,
    pub replacement: Option<String>,
    pub max_backtracks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub problems: Vec<String>,
    #[serde(default)]
    pub strategies: Vec<String>,
    /// Starting points for `fn:` problems without an explicit `@start`.
    #[serde(default)]
    pub starts: Vec<String>,
    pub dimension: Option<usize>,
    /// Keep the nonconvex functions that are normally left out.
    #[serde(default)]
    pub include_excluded: bool,
    pub metric: Option<String>,
    pub profile_window: Option<f64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverSection,
}

fn one() -> usize {
    1
}

/// Command-line values that take precedence over the manifest.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub strategies: Option<Vec<String>>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::ParseConfig { path: origin.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| ExperimentError::ReadConfig { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        if o.output_dir.is_some() {
            self.output_dir = o.output_dir.clone();
        }
        if let Some(t) = o.tol {
            self.solver.tol = Some(t);
            self.solver.tolerances = None;
        }
        if o.max_iter.is_some() {
            self.solver.max_iter = o.max_iter;
        }
        if let Some(s) = &o.strategies {
            self.strategies = s.clone();
        }
    }

    pub fn strategy_list(&self) -> Result<Vec<TargetStrategy>, ExperimentError> {
        if self.strategies.is_empty() {
            return Ok(TargetStrategy::catalog());
        }
        parse_strategies(&self.strategies)
    }

    pub fn metric(&self) -> Result<CostMetric, ExperimentError> {
        match &self.metric {
            Some(m) => m.parse().map_err(ExperimentError::Invalid),
            None if self.kind.is_nonlinear() => Ok(CostMetric::FunctionEvals),
            None => Ok(CostMetric::Iterations),
        }
    }

    pub fn tolerances(&self) -> Vec<f64> {
        match (&self.solver.tolerances, self.solver.tol) {
            (Some(t), _) if !t.is_empty() => t.clone(),
            (_, Some(t)) => vec![t],
            _ => vec![1e-6],
        }
    }

    pub fn qp_config(&self, strategy: TargetStrategy) -> Result<QpSolverConfig, ExperimentError> {
        let s = &self.solver;
        let mut c = QpSolverConfig::new(strategy);
        if let Some(v) = s.tol {
            c.tol = v;
        }
        if let Some(v) = s.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = s.beta0 {
            c.beta0 = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn nl_config(&self, strategy: TargetStrategy) -> Result<NlSolverConfig, ExperimentError> {
        let s = &self.solver;
        let mut c = NlSolverConfig::new(strategy);
        if let Some(v) = s.tol {
            c.tol = v;
        }
        if let Some(v) = s.max_iter {
            c.max_iter = v;
        }
        let beta0 = s.beta0.unwrap_or(1.0);
        c.initial_step = match s.initial_step.as_deref() {
            None | Some("fixed") => InitialStep::Fixed(beta0),
            Some("inv_gnorm") => InitialStep::InverseGradientNorm,
            Some(other) => return Err(ExperimentError::Invalid(format!("unknown initial_step '{other}'"))),
        };
        if let Some(v) = s.beta_min {
            c.beta_min = v;
        }
        if let Some(v) = s.beta_max {
            c.beta_max = v;
        }
        if let Some(v) = s.c_ls {
            c.c_ls = v;
        }
        if let Some(v) = s.sigma_ls {
            c.sigma_ls = v;
        }
        if let Some(v) = s.memory {
            c.memory = v;
        }
        if let Some(v) = s.max_backtracks {
            c.max_backtracks = v;
        }
        if let Some(r) = &s.replacement {
            c.replacement = r.parse::<ReplacementRule>().map_err(ExperimentError::Invalid)?;
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn parse_strategies(tokens: &[String]) -> Result<Vec<TargetStrategy>, ExperimentError> {
    tokens
        .iter()
        .map(|t| t.parse().map_err(|source| ExperimentError::Strategy { token: t.clone(), source }))
        .collect()
}

/// A problem named on the command line or in a manifest.
///
/// - generator specs, e.g. `geometric:n=100,l1=1,ln=1e4`;
/// - `mtx:PATH` or `mtx-scaled:PATH` for a Matrix Market file, the latter
///   divided by the norm of the first gradient;
/// - `fn:NAME[@START][,n=N]` for a test function, or `fn:all`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Generator(QpGeneratorSpec),
    Matrix { path: PathBuf, scaled: bool },
    Function { function: Option<TestFunction>, start: Option<StartPoint>, n: Option<usize> },
}

impl FromStr for ProblemSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |m: String| ExperimentError::Problem { spec: s.to_string(), message: m };
        if let Some(path) = s.strip_prefix("mtx:") {
            return Ok(Self::Matrix { path: PathBuf::from(path), scaled: false });
        }
        if let Some(path) = s.strip_prefix("mtx-scaled:") {
            return Ok(Self::Matrix { path: PathBuf::from(path), scaled: true });
        }
        if let Some(rest) = s.strip_prefix("fn:") {
            let (head, opts) = rest.split_once(',').unwrap_or((rest, ""));
            let mut n = None;
            for item in opts.split(',').filter(|t| !t.trim().is_empty()) {
                match item.trim().split_once('=') {
                    Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|_| err(format!("bad dimension '{v}'")))?),
                    _ => return Err(err(format!("unknown option '{item}'"))),
                }
            }
            let (name, start) = match head.split_once('@') {
                Some((name, st)) => (name, Some(st.parse::<StartPoint>().map_err(err)?)),
                None => (head, None),
            };
            let function = if name == "all" { None } else { Some(name.parse::<TestFunction>().map_err(err)?) };
            return Ok(Self::Function { function, start, n });
        }
        s.parse::<QpGeneratorSpec>().map(Self::Generator).map_err(|e| err(e.to_string()))
    }
}

impl ProblemSpec {
    pub fn is_quadratic(&self) -> bool {
        !matches!(self, ProblemSpec::Function { .. })
    }
}

/// Builds the quadratic problems named by `specs`. Random generators without
/// an explicit seed get `seed, seed + 1, ...` for each of `replicates` copies.
pub fn build_quadratics(
    specs: &[ProblemSpec],
    seed: Option<u64>,
    replicates: usize,
) -> Result<Vec<QuadraticProblem>, ExperimentError> {
    let mut out = Vec::new();
    for spec in specs {
        match spec {
            ProblemSpec::Generator(g) => {
                let random = !matches!(g.kind, QpGeneratorKind::Geometric);
                if random && g.seed.is_none() {
                    let base = seed.ok_or(GeneratorError::MissingSeed(g.kind.name()))?;
                    for r in 0..replicates.max(1) {
                        let mut g = g.clone();
                        g.seed = Some(base + r as u64);
                        out.push(generate_qp(&g)?);
                    }
                } else {
                    out.push(generate_qp(g)?);
                }
            }
            ProblemSpec::Matrix { path, scaled } => {
                let a = load_matrix_market(path)?;
                let stem = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into());
                let p = quadratic_from_operator(stem, a)?;
                out.push(if *scaled { p.scaled_by_initial_gradient() } else { p });
            }
            ProblemSpec::Function { .. } => {
                return Err(ExperimentError::Invalid("test functions are not quadratic problems".into()))
            }
        }
    }
    Ok(out)
}

/// Builds the test-function problems named by `specs`. Entries without a
/// start use `starts` (all three when empty). `fn:all` skips the excluded
/// nonconvex functions unless `include_excluded` is set.
pub fn build_nonlinear(
    specs: &[ProblemSpec],
    starts: &[StartPoint],
    dimension: usize,
    include_excluded: bool,
) -> Result<Vec<TestProblem>, ExperimentError> {
    let starts: Vec<StartPoint> = if starts.is_empty() { StartPoint::ALL.to_vec() } else { starts.to_vec() };
    let mut out = Vec::new();
    for spec in specs {
        match spec {
            ProblemSpec::Function { function, start, n } => {
                let functions: Vec<TestFunction> = match function {
                    Some(f) => vec![*f],
                    None => TestFunction::ALL.into_iter().filter(|f| include_excluded || !f.nonconvex_excluded()).collect(),
                };
                let these = match start {
                    Some(s) => vec![*s],
                    None => starts.clone(),
                };
                for f in functions {
                    for s in &these {
                        out.push(TestProblem::new(f, *s, n.unwrap_or(dimension)));
                    }
                }
            }
            _ => return Err(ExperimentError::Invalid("nl-bench takes fn: problems only".into())),
        }
    }
    Ok(out)
}

/// Everything a validated manifest will run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub kind: ExperimentKind,
    pub strategies: Vec<TargetStrategy>,
    pub quadratics: Vec<QuadraticProblem>,
    pub nonlinear: Vec<TestProblem>,
    pub tolerances: Vec<f64>,
    pub metric: CostMetric,
    pub window: f64,
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Plan {
    pub fn cells(&self) -> usize {
        let problems = self.quadratics.len() + self.nonlinear.len();
        problems * self.strategies.len() * self.tolerances.len()
    }

    /// Human-readable description of the grid, one item per line.
    pub fn describe(&self) -> Vec<String> {
        let mut lines = vec![format!("kind: {:?}", self.kind)];
        lines.push(format!(
            "strategies ({}): {}",
            self.strategies.len(),
            self.strategies.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
        ));
        for p in &self.quadratics {
            lines.push(format!("problem {} (n = {})", p.name, p.dim()));
        }
        for p in &self.nonlinear {
            lines.push(format!("problem {} (n = {})", p.problem.name, p.problem.dim()));
        }
        let tols: Vec<String> = self.tolerances.iter().map(|t| fmt_num(*t)).collect();
        lines.push(format!("tolerances: {}", tols.join(" ")));
        lines.push(format!("metric: {}", self.metric));
        lines.push(format!("runs: {}", self.cells()));
        lines.push(format!("output: {}", self.output_dir.display()));
        lines
    }
}

/// Validates the manifest and builds every problem without running anything.
pub fn plan(cfg: &ExperimentConfig, default_out: &Path) -> Result<Plan, ExperimentError> {
    let strategies = cfg.strategy_list()?;
    if cfg.problems.is_empty() {
        return Err(ExperimentError::Invalid("no problems listed".into()));
    }
    let specs: Vec<ProblemSpec> = cfg.problems.iter().map(|p| p.parse()).collect::<Result<_, _>>()?;
    let starts: Vec<StartPoint> = cfg
        .starts
        .iter()
        .map(|s| s.parse().map_err(ExperimentError::Invalid))
        .collect::<Result<_, _>>()?;
    let tolerances = cfg.tolerances();
    if tolerances.iter().any(|t| !(*t > 0.0)) {
        return Err(ExperimentError::Invalid("tolerances must be positive".into()));
    }
    let (quadratics, nonlinear) = if cfg.kind.is_nonlinear() {
        cfg.nl_config(TargetStrategy::Bb1)?;
        let dim = cfg.dimension.unwrap_or(DEFAULT_DIMENSION);
        (Vec::new(), build_nonlinear(&specs, &starts, dim, cfg.include_excluded)?)
    } else {
        cfg.qp_config(TargetStrategy::Bb1)?;
        if cfg.kind == ExperimentKind::SingleRun && specs.iter().any(|s| !s.is_quadratic()) {
            let dim = cfg.dimension.unwrap_or(DEFAULT_DIMENSION);
            (Vec::new(), build_nonlinear(&specs, &starts, dim, cfg.include_excluded)?)
        } else {
            (build_quadratics(&specs, cfg.seed, cfg.replicates)?, Vec::new())
        }
    };
    if cfg.kind == ExperimentKind::Sweep {
        if let Some(p) = quadratics.iter().find(|p| p.operator().as_diagonal().is_none()) {
            return Err(ExperimentError::Invalid(format!("sweep needs diagonal problems; '{}' is not", p.name)));
        }
    }
    let window = cfg.profile_window.unwrap_or(3.0);
    if !(window >= 1.0) {
        return Err(ExperimentError::Invalid("profile_window must be at least 1".into()));
    }
    Ok(Plan {
        kind: cfg.kind,
        strategies,
        quadratics,
        nonlinear,
        tolerances: if cfg.kind.is_nonlinear() { tolerances } else { vec![cfg.solver.tol.unwrap_or(1e-6)] },
        metric: cfg.metric()?,
        window,
        workers: cfg.workers.unwrap_or(0),
        output_dir: cfg.output_dir.clone().unwrap_or_else(|| default_out.to_path_buf()),
    })
}

/// What a finished experiment produced.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub runs: usize,
    pub failures: usize,
    /// Runs that stopped with an error status rather than at `max_iter`.
    pub solver_errors: usize,
    pub lines: Vec<String>,
}

impl Report {
    fn count(&mut self, outcomes: &[RunOutcome]) {
        self.runs += outcomes.len();
        self.failures += outcomes.iter().filter(|o| !o.status.is_converged()).count();
        self.solver_errors += outcomes.iter().filter(|o| matches!(o.status, RunStatus::Error(_))).count();
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| ExperimentError::Write { path: path.to_path_buf(), source })
}

fn write_with<F>(report: &mut Report, path: PathBuf, f: F) -> Result<(), ExperimentError>
where
    F: FnOnce(BufWriter<File>) -> Result<(), BenchError>,
{
    f(create(&path)?)?;
    report.files.push(path);
    Ok(())
}

/// Writes costs, profile and summary for one set of outcomes, dropping
/// `exclude` plus every problem no strategy solved.
fn write_bench_outputs(
    dir: &Path,
    outcomes: &[RunOutcome],
    problems: &[String],
    strategies: &[String],
    metric: CostMetric,
    window: f64,
    exclude: &[(String, &'static str)],
    report: &mut Report,
) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Write { path: dir.to_path_buf(), source })?;
    write_with(report, dir.join("runs.csv"), |w| write_runs_csv(w, outcomes))?;
    let full = CostMatrix::from_outcomes(outcomes, problems, strategies, metric)?;
    write_with(report, dir.join("costs.csv"), |w| write_costs_csv(w, &full))?;

    let mut excluded: Vec<(String, &'static str)> = exclude.to_vec();
    for p in full.all_failed_rows() {
        if !excluded.iter().any(|(q, _)| *q == p) {
            excluded.push((p, "all_failed"));
        }
    }
    let names: Vec<String> = excluded.iter().map(|(p, _)| p.clone()).collect();
    let kept = full.without(&names);
    write_with(report, dir.join("excluded.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["problem", "reason"])?;
        for (p, why) in &excluded {
            w.write_record([p.as_str(), why])?;
        }
        w.flush()?;
        Ok(())
    })?;
    for (p, why) in &excluded {
        warn!("{}: excluding {p} from profiles ({why})", dir.display());
    }
    if kept.problems.is_empty() {
        report.lines.push(format!("{}: no problem left for profiles", dir.display()));
        return Ok(());
    }
    let curves = profile_curves(&kept)?;
    write_with(report, dir.join(format!("profile_{}.csv", metric.name())), |w| write_profile_csv(w, &curves, window))?;
    let rows = summary_table(&kept)?;
    write_with(report, dir.join("summary.csv"), |w| write_summary_csv(w, &rows))?;
    report.lines.push(format!("{}: {} problems in profiles, {} excluded", dir.display(), kept.problems.len(), excluded.len()));
    for r in rows {
        report.lines.push(format!(
            "  {:<14} solved {:>5.1}%  PR=1 {:>5.1}%  avg {:.3}",
            r.strategy, r.solved_pct, r.pr1_pct, r.avg
        ));
    }
    Ok(())
}

fn tol_label(t: f64) -> String {
    format!("tol{t:e}")
}

/// Runs a planned experiment and writes its CSV files.
pub fn execute(plan: &Plan, cfg: &ExperimentConfig) -> Result<Report, ExperimentError> {
    let out = &plan.output_dir;
    fs::create_dir_all(out).map_err(|source| ExperimentError::Write { path: out.clone(), source })?;
    let mut report = Report::default();
    let names: Vec<String> = plan.strategies.iter().map(ToString::to_string).collect();
    info!("running {} cells with {} workers", plan.cells(), plan.workers);

    match plan.kind {
        ExperimentKind::QuadBench => {
            let base = cfg.qp_config(plan.strategies[0])?;
            let outcomes = run_quadratic_grid(&plan.quadratics, &plan.strategies, &base, plan.workers)?;
            report.count(&outcomes);
            let problems: Vec<String> = plan.quadratics.iter().map(|p| p.name.clone()).collect();
            write_bench_outputs(out, &outcomes, &problems, &names, plan.metric, plan.window, &[], &mut report)?;
        }
        ExperimentKind::NlBench => {
            let mut starts: Vec<StartPoint> = plan.nonlinear.iter().map(|p| p.start).collect();
            starts.sort();
            starts.dedup();
            let tightest = plan.tolerances.iter().copied().fold(f64::INFINITY, f64::min);
            let mut grids = Vec::new();
            for &tol in &plan.tolerances {
                let mut base = cfg.nl_config(plan.strategies[0])?;
                base.tol = tol;
                for &start in &starts {
                    let subset: Vec<&TestProblem> = plan.nonlinear.iter().filter(|p| p.start == start).collect();
                    let problems: Vec<NonlinearProblem> = subset.iter().map(|p| p.problem.clone()).collect();
                    let outcomes = run_nonlinear_grid(&problems, &plan.strategies, &base, plan.workers)?;
                    report.count(&outcomes);
                    grids.push((tol, start, subset, outcomes));
                }
            }
            // Stationary-point cross-check on nonconvex functions, judged at
            // the tightest tolerance and applied to every tolerance.
            let mut multi: Vec<String> = Vec::new();
            for (tol, _, subset, outcomes) in &grids {
                if *tol == tightest {
                    let nonconvex: Vec<RunOutcome> = outcomes
                        .iter()
                        .filter(|o| subset.iter().any(|p| p.problem.name == o.problem && !p.function.is_convex()))
                        .cloned()
                        .collect();
                    multi.extend(multi_minimum_problems(&nonconvex, 1e-3));
                }
            }
            for (tol, start, subset, outcomes) in &grids {
                let mut exclude: Vec<(String, &'static str)> = Vec::new();
                for p in subset {
                    if p.function.nonconvex_excluded() {
                        exclude.push((p.problem.name.clone(), "nonconvex_excluded"));
                    } else if multi.contains(&p.problem.name) {
                        exclude.push((p.problem.name.clone(), "multi_minimum"));
                    }
                }
                let pnames: Vec<String> = subset.iter().map(|p| p.problem.name.clone()).collect();
                let dir = out.join(format!("{}_{}", tol_label(*tol), start.label()));
                write_bench_outputs(&dir, outcomes, &pnames, &names, plan.metric, plan.window, &exclude, &mut report)?;
            }
        }
        ExperimentKind::Sweep => {
            let base = cfg.qp_config(plan.strategies[0])?;
            let path = out.join("sweep_summary.csv");
            let mut summary = csv::Writer::from_writer(create(&path)?);
            let csv_err = |e: csv::Error| ExperimentError::Bench(BenchError::Csv(e));
            summary.write_record(["problem", "rank", "strategy", "iterations", "status"]).map_err(csv_err)?;
            for p in &plan.quadratics {
                let sweep = sweep_experiment(p, &plan.strategies, &base)?;
                for (rank, run) in sweep.runs.iter().enumerate() {
                    report.runs += 1;
                    if !run.status.is_converged() {
                        report.failures += 1;
                    }
                    if matches!(run.status, RunStatus::Error(_)) {
                        report.solver_errors += 1;
                    }
                    summary
                        .write_record([
                            p.name.clone(),
                            (rank + 1).to_string(),
                            run.strategy.to_string(),
                            run.iterations.to_string(),
                            run.status.as_str().to_string(),
                        ])
                        .map_err(csv_err)?;
                }
                let order: Vec<String> =
                    sweep.runs.iter().map(|r| format!("{} ({})", r.strategy, r.iterations)).collect();
                report.lines.push(format!("{}: {}", p.name, order.join(", ")));
                write_with(&mut report, out.join(format!("sweep_{}.csv", p.name)), |w| write_sweep_csv(w, &sweep))?;
                write_with(&mut report, out.join(format!("spectrum_{}.csv", p.name)), |w| write_spectrum_csv(w, &sweep))?;
            }
            summary.flush().map_err(|source| ExperimentError::Write { path: path.clone(), source })?;
            report.files.push(path);
        }
        ExperimentKind::SingleRun => {
            let strategy = plan.strategies[0];
            let (name, trace, nonlinear) = if let Some(p) = plan.quadratics.first() {
                let mut p = p.clone();
                let (_, t) = solve_quadratic(&mut p, &cfg.qp_config(strategy)?)?;
                (p.name.clone(), t, false)
            } else if let Some(p) = plan.nonlinear.first() {
                let mut p = p.problem.clone();
                let (_, t) = solve_nonlinear(&mut p, &cfg.nl_config(strategy)?)?;
                (p.name.clone(), t, true)
            } else {
                return Err(ExperimentError::Invalid("no problem to run".into()));
            };
            report.count(&[RunOutcome::from_trace(&name, &strategy, &trace)]);
            report.lines.push(summary_line(&name, &strategy, &trace));
            write_with(&mut report, out.join("trace.csv"), |w| trace.write_csv(w, nonlinear).map_err(BenchError::from))?;
        }
    }
    Ok(report)
}

/// One-line description of a finished run.
pub fn summary_line(problem: &str, strategy: &TargetStrategy, trace: &RunTrace) -> String {
    format!(
        "{problem} {strategy}: {} after {} iterations, |g| = {} ({} of |g0|), f = {}, nfev = {}, ngev = {}",
        trace.status,
        trace.iterations,
        fmt_num(trace.final_g_norm),
        fmt_num(trace.final_g_norm / trace.g0_norm),
        fmt_num(trace.final_f),
        trace.n_f,
        trace.n_g
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_schema() {
        let ok = "kind = \"quad-bench\"\nproblems = [\"geometric:n=10,ln=100\"]\n[solver]\ntol = 1e-8\n";
        let cfg = ExperimentConfig::from_toml_str(ok, Path::new("t.toml")).unwrap();
        assert_eq!(cfg.solver.tol, Some(1e-8));
        assert_eq!(cfg.strategy_list().unwrap().len(), 13);
        let typo = "kind = \"quad-bench\"\nproblms = []\n";
        assert!(ExperimentConfig::from_toml_str(typo, Path::new("t.toml")).is_err());
        let typo = "kind = \"quad-bench\"\n[solver]\ntoll = 1\n";
        assert!(ExperimentConfig::from_toml_str(typo, Path::new("t.toml")).is_err());
    }

    #[test]
    fn random_generators_need_a_seed() {
        let text = "kind = \"quad-bench\"\nproblems = [\"log_uniform:n=10,ln=100\"]\nreplicates = 3\n";
        let mut cfg = ExperimentConfig::from_toml_str(text, Path::new("t.toml")).unwrap();
        assert!(matches!(plan(&cfg, Path::new("out")), Err(ExperimentError::Generator(GeneratorError::MissingSeed(_)))));
        cfg.seed = Some(5);
        let p = plan(&cfg, Path::new("out")).unwrap();
        assert_eq!(p.quadratics.len(), 3);
        assert_eq!(p.cells(), 39);
    }

    #[test]
    fn problem_specs() {
        assert!(matches!("mtx:a/b.mtx".parse::<ProblemSpec>().unwrap(), ProblemSpec::Matrix { scaled: false, .. }));
        let spec: ProblemSpec = "fn:ext_rosenbrock@5x0,n=20".parse().unwrap();
        assert_eq!(
            spec,
            ProblemSpec::Function { function: Some(TestFunction::ExtendedRosenbrock), start: Some(StartPoint::X5), n: Some(20) }
        );
        let all = build_nonlinear(&["fn:all".parse().unwrap()], &[StartPoint::X0], 10, false).unwrap();
        assert_eq!(all.len(), TestFunction::ALL.iter().filter(|f| !f.nonconvex_excluded()).count());
        assert!("fn:nope".parse::<ProblemSpec>().is_err());
        assert!("spiral:n=3".parse::<ProblemSpec>().is_err());
    }

    #[test]
    fn bad_strategy_echoes_the_token() {
        let err = parse_strategies(&["bb1".into(), "cot:x:1".into()]).unwrap_err();
        assert!(err.to_string().contains("cot:x:1"));
    }
}

//! `tbb`: run TBB gradient methods and their benchmarks from the shell.
//!
//! Exit status is 0 on success, 1 on a configuration or input error and 2
//! when `--strict` is given and some run ended with a solver error.

use std::env;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tbb::experiment::{
    build_nonlinear, build_quadratics, execute, parse_strategies, plan, summary_line, ExperimentConfig,
    ExperimentError, ExperimentKind, Overrides, ProblemSpec,
};
use tbb::nl::solve_nonlinear;
use tbb::qp::solve_quadratic;
use tbb::testbed::{StartPoint, TestFunction, DEFAULT_DIMENSION};
use tbb::{RunStatus, TargetStrategy};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "TBB_OUT_DIR";

#[derive(Parser)]
#[command(name = "tbb", version, about = "Gradient methods with targeted Barzilai-Borwein stepsizes")]
struct Cli {
    /// Exit with status 2 if any run stops with a solver error.
    #[arg(long, global = true)]
    strict: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print a summary line.
    Solve(SolveArgs),
    /// Quadratic benchmark from a manifest.
    BenchQuad(BenchArgs),
    /// Unconstrained benchmark from a manifest.
    BenchNl(BenchArgs),
    /// Inverse-stepsize sweep traces from a manifest.
    Sweep(BenchArgs),
    /// Run a manifest of any kind, including single-run traces.
    Run(BenchArgs),
    /// Print the strategy grammar and the benchmark strategies.
    ListStrategies,
    /// Print the problem grammar, generators and test functions.
    ListProblems,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem spec: generator (`geometric:n=100,l1=1,ln=1e4`), `mtx:PATH`,
    /// `mtx-scaled:PATH` or `fn:NAME[@x0|5x0|10x0][,n=N]`.
    #[arg(long)]
    problem: String,
    #[arg(long, default_value = "bb2")]
    strategy: String,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    beta0: Option<f64>,
    /// Seed for random generators.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML manifest.
    #[arg(long)]
    config: PathBuf,
    /// Validate and print the planned grid without running it.
    #[arg(long)]
    dry_run: bool,
    /// Parallel runs (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; defaults to the manifest, then $TBB_OUT_DIR, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Comma-separated strategies replacing the manifest list.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
}

fn default_out_dir() -> PathBuf {
    env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

/// Outcome of a command: the exit code to use.
fn finish(strict: bool, solver_errors: usize) -> ExitCode {
    if strict && solver_errors > 0 {
        eprintln!("{solver_errors} run(s) ended with a solver error");
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn solve(args: &SolveArgs, strict: bool) -> Result<ExitCode, ExperimentError> {
    let strategy = parse_strategies(std::slice::from_ref(&args.strategy))?[0];
    let spec: ProblemSpec = args.problem.parse()?;
    let mut cfg = ExperimentConfig {
        kind: ExperimentKind::SingleRun,
        seed: args.seed,
        replicates: 1,
        problems: vec![args.problem.clone()],
        strategies: vec![args.strategy.clone()],
        starts: Vec::new(),
        dimension: None,
        include_excluded: true,
        metric: None,
        profile_window: None,
        workers: None,
        output_dir: None,
        solver: Default::default(),
    };
    cfg.solver.tol = args.tol;
    cfg.solver.max_iter = args.max_iter;
    cfg.solver.beta0 = args.beta0;

    let (name, trace, nonlinear) = if spec.is_quadratic() {
        let mut p = build_quadratics(&[spec], args.seed, 1)?.remove(0);
        let (_, t) = solve_quadratic(&mut p, &cfg.qp_config(strategy)?)?;
        (p.name.clone(), t, false)
    } else {
        let spec = match spec {
            ProblemSpec::Function { function: None, .. } => {
                return Err(ExperimentError::Invalid("solve takes a single function, not fn:all".into()))
            }
            ProblemSpec::Function { function, start, n } => {
                ProblemSpec::Function { function, start: Some(start.unwrap_or(StartPoint::X0)), n }
            }
            other => other,
        };
        let mut p = build_nonlinear(&[spec], &[], DEFAULT_DIMENSION, true)?.remove(0).problem;
        let (_, t) = solve_nonlinear(&mut p, &cfg.nl_config(strategy)?)?;
        (p.name.clone(), t, true)
    };
    println!("{}", summary_line(&name, &strategy, &trace));
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.trace {
        let file = File::create(path).map_err(|source| ExperimentError::Write { path: path.clone(), source })?;
        trace
            .write_csv(BufWriter::new(file), nonlinear)
            .map_err(|e| ExperimentError::Bench(tbb::bench::BenchError::Csv(e)))?;
    }
    Ok(finish(strict, usize::from(matches!(trace.status, RunStatus::Error(_)))))
}

fn bench(args: &BenchArgs, kind: Option<ExperimentKind>, strict: bool) -> Result<ExitCode, ExperimentError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(kind) = kind.filter(|k| *k != cfg.kind) {
        return Err(ExperimentError::Invalid(format!(
            "{} describes a {:?} experiment, not {:?}",
            args.config.display(),
            cfg.kind,
            kind
        )));
    }
    cfg.apply(&Overrides {
        seed: args.seed,
        workers: args.workers,
        output_dir: args.out.clone(),
        tol: args.tol,
        max_iter: args.max_iter,
        strategies: args.strategies.clone(),
    });
    let planned = plan(&cfg, &default_out_dir())?;
    if args.dry_run {
        for line in planned.describe() {
            println!("{line}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let report = execute(&planned, &cfg)?;
    for line in &report.lines {
        println!("{line}");
    }
    println!(
        "{} runs, {} not converged, {} solver errors; {} files in {}",
        report.runs,
        report.failures,
        report.solver_errors,
        report.files.len(),
        planned.output_dir.display()
    );
    Ok(finish(strict, report.solver_errors))
}

fn list_strategies() {
    println!("grammar: name(:param)*, omitted trailing parameters take defaults");
    for s in TargetStrategy::catalog() {
        println!("{:<14} {}", s.to_string(), s.label());
    }
    let con = TargetStrategy::Con { zeta: 0.5 };
    println!("{:<14} {} (convex combination of BB1 and BB2, zeta in [0, 1])", "con:<zeta>", con.label());
}

fn list_problems() {
    println!("quadratic generators (x* = e, x0 = -10 e):");
    println!("  geometric:n=N,l1=L1,ln=LN");
    println!("  two_cluster:n=N,l1=L1,ln=LN[,c1=C1,c2=C2,f1=F1,f2=F2,jitter=J],seed=S");
    println!("  covariance_like:n=N,l1=L1,ln=LN[,ratio=R],seed=S");
    println!("  log_uniform:n=N,l1=L1,ln=LN,seed=S");
    println!("matrix files:");
    println!("  mtx:PATH            Matrix Market, real symmetric coordinate");
    println!("  mtx-scaled:PATH     same, divided by the first gradient norm");
    println!("test functions (fn:NAME[@x0|5x0|10x0][,n=N], default n = {DEFAULT_DIMENSION}):");
    for f in TestFunction::ALL {
        let mut flags = Vec::new();
        if f.is_convex() {
            flags.push("convex");
        }
        if f.scale_by_g0() {
            flags.push("scaled");
        }
        if f.nonconvex_excluded() {
            flags.push("nonconvex_excluded");
        }
        println!("  {:<24} {}", f.id(), flags.join(" "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Solve(a) => solve(a, cli.strict),
        Command::BenchQuad(a) => bench(a, Some(ExperimentKind::QuadBench), cli.strict),
        Command::BenchNl(a) => bench(a, Some(ExperimentKind::NlBench), cli.strict),
        Command::Sweep(a) => bench(a, Some(ExperimentKind::Sweep), cli.strict),
        Command::Run(a) => bench(a, None, cli.strict),
        Command::ListStrategies => {
            list_strategies();
            Ok(ExitCode::SUCCESS)
        }
        Command::ListProblems => {
            list_problems();
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if cli.strict && e.is_runtime() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use robustmo_core::oracle::{certify_robust_weak_efficiency, Certification, GridSpec};
use robustmo_core::problem_file::ProblemFile;
use robustmo_core::set_ops::{check_regularity, RegularityReport};
use robustmo_core::solver::{verify_trace, StepRule, TraceViolation};
use robustmo_core::{registry, solve, Error, HessianInit, SolveConfig, SolveTrace, TerminalStatus, UncertainProblem};
use serde::Serialize;

use crate::campaign::{run_random_campaign, start_point, summarize, threads_from_env};
use crate::output::{write_campaign_files, write_trace_files};

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! emit {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "robustmo", version, about = "Quasi-Newton solver for uncertain multiobjective problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve from one start and write trace files.
    Solve(SolveArgs),
    /// Random-start campaign with summary statistics.
    Bench(BenchArgs),
    /// Grid certification of a point or of a trace's final iterate.
    Verify(VerifyArgs),
    /// Print the built-in problem catalog.
    List(ListArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Built-in problem name (see `list`).
    #[arg(required_unless_present = "problem_file", conflicts_with = "problem_file")]
    pub problem: Option<String>,
    /// JSON problem file deriving from a built-in problem.
    #[arg(long, value_name = "JSON")]
    pub problem_file: Option<PathBuf>,
}

impl ProblemArgs {
    fn load(&self) -> Result<UncertainProblem, Error> {
        match (&self.problem, &self.problem_file) {
            (_, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
                ProblemFile::from_json(&text)?.build()
            }
            (Some(name), None) => registry::get(name),
            (None, None) => Err(Error::Argument("no problem given".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Armijo parameter in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Stop when the direction norm drops to this value.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Initial Hessian blocks: identity or fd (finite-difference Hessians).
    #[arg(long, default_value = "identity")]
    pub hessian_init: HessianInit,
    /// Line-search acceptance: merit (selected scenarios plus merit decrease) or selected.
    #[arg(long, default_value = "merit")]
    pub step_rule: StepRule,
    #[arg(long, default_value_t = robustmo_core::direction::DEFAULT_SUBPROBLEM_TOL)]
    pub subproblem_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ConfigArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            gamma: self.gamma,
            p_norm_tol: self.tol,
            max_iters: self.max_iters,
            subproblem_tol: self.subproblem_tol,
            hessian_init: self.hessian_init,
            step_rule: self.step_rule,
            seed: self.seed,
            ..SolveConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Starting point, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "random")]
    pub x0: Vec<f64>,
    /// Draw the start uniformly from the problem's box using --seed.
    #[arg(long, conflicts_with = "x0")]
    pub random: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 100)]
    pub starts: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Point to certify, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "trace")]
    pub x: Vec<f64>,
    /// trace.json whose final iterate is certified; its step conditions are re-checked too.
    #[arg(long, conflicts_with = "x")]
    pub trace: Option<PathBuf>,
    /// Grid spacing.
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
    /// Grid lower corner, comma separated (default: the problem's box).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid_lower: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid_upper: Vec<f64>,
    /// Radius of the ball sampled by the regularity diagnostic.
    #[arg(long, default_value_t = 1e-3)]
    pub regularity_radius: f64,
    #[arg(long, default_value_t = 200)]
    pub regularity_samples: usize,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long)]
    pub json: bool,
}

/// Maps library errors to process exit codes.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) | Error::UnknownProblem { .. } => EXIT_USAGE,
        Error::Capacity(_) => EXIT_CAPACITY,
        Error::Numerical(_) | Error::Evaluation { .. } | Error::SubproblemNonconvergence { .. } => EXIT_NUMERICAL,
    }
}

/// Runs a parsed command, printing to stdout; returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::List(a) => cmd_list(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Argument(format!("cannot write to {}: {e}", path.display()))
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, Error> {
    let prob = a.problem.load()?;
    let config = a.config.config();
    let x0 = if a.random {
        let bounds = prob
            .bounds()
            .ok_or_else(|| Error::Argument(format!("problem `{}` has no sampling box", prob.name())))?;
        start_point(bounds, config.seed, 0)
    } else {
        a.x0.clone()
    };
    let trace = solve(&prob, &x0, &config)?;
    write_trace_files(&a.out, &trace).map_err(|e| io_err(&a.out, e))?;
    let last = trace.last();
    emit!(
        "status={} iterations={} p_norm={:.6e} merit={:.10} x={:?}",
        trace.status,
        trace.iterations(),
        last.map_or(f64::NAN, |r| r.p_norm),
        last.map_or(f64::NAN, |r| r.merit),
        trace.final_x()
    );
    if let Some(e) = &trace.error {
        eprintln!("error: {e}");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

fn fmt_tuple(t: &crate::stats::StatsTuple, precision: usize) -> String {
    let parts: Vec<String> = t.as_array().iter().map(|v| format!("{v:.precision$}")).collect();
    format!("({})", parts.join(", "))
}

fn cmd_bench(a: &BenchArgs) -> Result<i32, Error> {
    let prob = a.problem.load()?;
    let config = a.config.config();
    let runs = run_random_campaign(&prob, &config, a.starts, config.seed, threads_from_env()?)?;
    let (stats, timing) = summarize(prob.name(), config.seed, &config, &runs);
    write_campaign_files(&a.out, &runs, &stats, &timing).map_err(|e| io_err(&a.out, e))?;
    emit!("problem={} starts={} seed={}", prob.name(), a.starts, config.seed);
    emit!("status {:?}", stats.status_counts);
    if let Some(t) = &stats.iterations {
        emit!("iterations (min, max, mean, median, mode, sd) = {}", fmt_tuple(t, 4));
    }
    if let Some(t) = &timing.time {
        emit!("time       (min, max, mean, median, mode, sd) = {}", fmt_tuple(t, 4));
    }
    if stats.errors > 0 {
        emit!("errors {} (excluded from the statistics; see runs.csv)", stats.errors);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub problem: String,
    pub x: Vec<f64>,
    pub grid: GridSpec,
    pub certification: Certification,
    pub regularity: RegularityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_status: Option<TerminalStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_violations: Option<Vec<TraceViolation>>,
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32, Error> {
    let prob = a.problem.load()?;
    let mut trace_info = None;
    let x = match &a.trace {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
            let trace: SolveTrace = serde_json::from_str(&text)
                .map_err(|e| Error::Argument(format!("{} is not a trace: {e}", path.display())))?;
            let x = trace.final_x().to_vec();
            trace_info = Some((trace.status, verify_trace(&prob, &trace, false)));
            x
        }
        None => a.x.clone(),
    };
    if x.len() != prob.n() {
        return Err(Error::Argument(format!("point has dimension {}, problem has {}", x.len(), prob.n())));
    }
    let (lower, upper) = match (a.grid_lower.is_empty(), a.grid_upper.is_empty(), prob.bounds()) {
        (false, false, _) => (a.grid_lower.clone(), a.grid_upper.clone()),
        (true, true, Some(b)) => (b.lower.clone(), b.upper.clone()),
        _ => return Err(Error::Argument("give both --grid-lower and --grid-upper".into())),
    };
    let grid = GridSpec::with_step(lower, upper, a.grid_step)?;
    let certification = certify_robust_weak_efficiency(&prob, &x, &grid)?;
    let regularity = check_regularity(&prob, &x, a.regularity_radius, a.regularity_samples, 0)?;
    let report = VerifyReport {
        problem: prob.name().to_string(),
        x,
        grid,
        certification,
        regularity,
        trace_status: trace_info.as_ref().map(|t| t.0),
        trace_violations: trace_info.map(|t| t.1),
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Numerical(e.to_string()))?;
    emit!("{text}");
    if let Some(path) = &a.out {
        std::fs::write(path, format!("{text}\n")).map_err(|e| io_err(path, e))?;
    }
    Ok(EXIT_OK)
}

fn cmd_list(a: &ListArgs) -> Result<i32, Error> {
    let catalog = registry::catalog();
    if a.json {
        emit!("{}", serde_json::to_string_pretty(&catalog).map_err(|e| Error::Numerical(e.to_string()))?);
        return Ok(EXIT_OK);
    }
    emit!("{:<6} {:>3} {:>3} {:>3} {:>9}  source", "name", "m", "n", "r", "scenarios");
    for e in catalog {
        emit!("{:<6} {:>3} {:>3} {:>3} {:>9}  {}", e.name, e.m, e.n, e.r, e.scenarios, e.source);
    }
    Ok(EXIT_OK)
}

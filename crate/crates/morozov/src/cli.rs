//! `morozov` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or invalid input, 2 regime precondition
//! failed, 3 non-convergence, 4 verification failed.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use morozov_core::dual::{
    diagnose_regime, log_grid, maximize_dual, verify_morozov_solution, MaximizeOptions, Method,
    Regime, StepRule, VerifyOptions,
};
use morozov_core::problems::{make_deconvolution, make_hilbert, regime_fixture, smooth_profile, synthesize};
use morozov_core::regularizers::Regularizer;
use morozov_core::InverseProblem;

use crate::error::Error;
use crate::fixture::{load_fixture, save_fixture};
use crate::formats::{read_csv_vector, write_csv_vector};
use crate::report::{
    read_json, write_json, write_sweep_csv, DiagnosisReport, SelectionReport, SweepRow,
};
use crate::sweep::sweep_parallel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_REGIME: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

pub const DEFAULT_SAFETY_FACTOR: f64 = 1.02;

#[derive(Debug, Parser)]
#[command(name = "morozov", version, about = "Tikhonov parameter selection by dual ascent on the discrepancy constraint")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic problem directory
    Generate(GenerateArgs),
    /// Select the regularization parameter and reconstruct
    Solve(SolveArgs),
    /// Sample the dual function on a log-spaced grid
    Sweep(SweepArgs),
    /// Classify the regime of (A, g, tau)
    Diagnose(DiagnoseArgs),
    /// Re-check a solve result against its problem
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FixtureKind {
    Deconvolution,
    Hilbert,
    Interior,
    NoiseDominates,
    TooOptimistic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegularizerArg {
    Identity,
    FirstDifference,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Bisection,
    Secant,
    GradientAscent,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bisection => Method::Bisection,
            MethodArg::Secant => Method::Secant,
            MethodArg::GradientAscent => Method::GradientAscent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "deconvolution")]
    pub kind: FixtureKind,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub kernel_width: f64,
    #[arg(long, default_value_t = 0.05)]
    pub noise_level: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau_accuracy: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "identity")]
    pub regularizer: RegularizerArg,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Problem directory (A.bin, g.csv, meta.json, ...)
    #[arg(long)]
    pub problem: PathBuf,
    /// Noise estimate, overriding meta.json
    #[arg(long)]
    pub tau: Option<f64>,
    /// Morozov safety factor c >= 1; the solver targets c * tau
    #[arg(long, default_value_t = DEFAULT_SAFETY_FACTOR)]
    pub safety_factor: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "bisection")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Constant c of the gradient-ascent step rho_n = c / n
    #[arg(long, default_value_t = 2.0)]
    pub step_size: f64,
    /// Run the maximization even outside the interior regime
    #[arg(long)]
    pub override_regime: bool,
    /// Result JSON path (default: <problem>/result.json)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output path (default: <problem>/sweep.csv or sweep.json)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Report path (default: <problem>/diagnosis.json)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Result JSON written by `solve` (default: <problem>/result.json)
    #[arg(long)]
    pub result: Option<PathBuf>,
    /// Noise estimate; by default the effective tau stored in the result is used
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SAFETY_FACTOR)]
    pub safety_factor: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional verification report JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Core(c) => c.into(),
            other => Failure::new(EXIT_IO, other.to_string()),
        }
    }
}

impl From<morozov_core::Error> for Failure {
    fn from(e: morozov_core::Error) -> Self {
        use morozov_core::Error as E;
        let code = match e {
            E::RegimePrecondition { .. } => EXIT_REGIME,
            E::NonConvergence { .. }
            | E::BracketNotFound { .. }
            | E::ConvergenceFailure { .. }
            | E::InaccurateSolve { .. } => EXIT_NON_CONVERGENCE,
            _ => EXIT_IO,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn check_safety_factor(c: f64) -> CmdResult {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Failure::new(EXIT_IO, format!("safety factor must be >= 1, got {c}")));
    }
    if c == 1.0 {
        warn!("safety factor 1 targets the raw noise estimate; values slightly above 1 are customary");
    }
    Ok(())
}

struct Loaded {
    problem: InverseProblem,
    tau: f64,
    tau_eff: f64,
}

fn load_problem(args: &ProblemArgs) -> Result<Loaded, Failure> {
    check_safety_factor(args.safety_factor)?;
    let problem = load_fixture(&args.problem)?;
    let tau = args.tau.unwrap_or(problem.tau);
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Failure::new(EXIT_IO, format!("tau must be positive, got {tau}")));
    }
    info!(
        "loaded {} ({}x{}), tau = {tau}, c = {}",
        args.problem.display(),
        problem.a.dim_g(),
        problem.a.dim_f(),
        args.safety_factor
    );
    Ok(Loaded {
        problem,
        tau,
        tau_eff: args.safety_factor * tau,
    })
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult {
    let problem = match a.kind {
        FixtureKind::Deconvolution | FixtureKind::Hilbert => {
            let op = match a.kind {
                FixtureKind::Hilbert => make_hilbert(a.n)?,
                _ => make_deconvolution(a.n, a.kernel_width)?,
            };
            let f0 = smooth_profile(op.dim_f(), a.seed);
            synthesize(&op, &f0, a.noise_level, a.tau_accuracy, a.seed)?
        }
        FixtureKind::Interior => regime_fixture(Regime::Interior, a.seed),
        FixtureKind::NoiseDominates => regime_fixture(Regime::NoiseDominates, a.seed),
        FixtureKind::TooOptimistic => regime_fixture(Regime::TooOptimistic, a.seed),
    };
    let n = problem.a.dim_f();
    let problem = match a.regularizer {
        RegularizerArg::Identity => problem,
        RegularizerArg::FirstDifference => {
            problem.with_regularizer(Regularizer::first_difference(n)?)?
        }
    };
    let meta = save_fixture(&a.out, &problem)?;
    println!(
        "wrote {} (n = {n}, tau = {}, regime = {})",
        a.out.display(),
        meta.tau,
        meta.regime.as_deref().unwrap_or("none")
    );
    Ok(())
}

/// Reconstruction file written next to a result JSON.
pub fn f_star_path(result: &Path) -> PathBuf {
    result.with_extension("f_star.csv")
}

pub fn cmd_solve(a: &SolveArgs) -> CmdResult {
    let loaded = load_problem(&a.problem)?;
    let lag = loaded.problem.lagrangian(loaded.tau_eff)?;
    let diagnosis = diagnose_regime(lag.operator(), lag.data(), loaded.tau_eff)?;
    info!("regime {} ({diagnosis:?})", diagnosis.regime);
    if diagnosis.regime != Regime::Interior && !a.override_regime {
        return Err(Failure::new(
            EXIT_REGIME,
            format!(
                "regime {}: {} (dist(g, range A) = {}, ||g|| = {}, c*tau = {}); \
                 the discrepancy level cannot be reached",
                diagnosis.regime,
                diagnosis.failed_inequality().unwrap_or(""),
                diagnosis.dist_to_range,
                diagnosis.data_norm,
                loaded.tau_eff
            ),
        ));
    }
    let opts = MaximizeOptions {
        method: a.method.into(),
        rtol: a.rtol,
        max_iter: a.max_iter,
        step_rule: StepRule::Diminishing(a.step_size),
        override_regime: a.override_regime,
        ..Default::default()
    };
    let res = maximize_dual(&lag, &opts)?;

    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.problem.problem.join("result.json"));
    let f_path = f_star_path(&out);
    write_csv_vector(&f_path, &res.f_star)?;
    let file_name = f_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let report = SelectionReport::new(&res, loaded.tau, a.problem.safety_factor, file_name);
    write_json(&out, &report)?;
    println!("lambda_star = {}", res.lambda_star);
    println!("alpha = {}", res.alpha);
    println!("discrepancy = {}", res.discrepancy);
    println!("iterations = {}", res.iterations.len());
    Ok(())
}

pub fn cmd_sweep(a: &SweepArgs) -> CmdResult {
    let loaded = load_problem(&a.problem)?;
    let lag = loaded.problem.lagrangian(loaded.tau_eff)?;
    let grid = log_grid(a.lambda_min, a.lambda_max, a.points)?;
    let points = sweep_parallel(&lag, &grid, &Default::default())?;
    let rows: Vec<SweepRow> = points
        .iter()
        .map(|p| {
            if let Err(e) = &p.result {
                warn!("lambda = {}: {e}", p.lambda);
            }
            SweepRow::from_point(p, &lag)
        })
        .collect();
    let default_name = match a.format {
        Format::Csv => "sweep.csv",
        Format::Json => "sweep.json",
    };
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.problem.problem.join(default_name));
    match a.format {
        Format::Csv => write_sweep_csv(&out, &rows)?,
        Format::Json => write_json(&out, &rows)?,
    }
    println!("wrote {} points to {}", rows.len(), out.display());
    Ok(())
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> CmdResult {
    let loaded = load_problem(&a.problem)?;
    let p = &loaded.problem;
    let d = diagnose_regime(&p.a, &p.g, loaded.tau_eff)?;
    let report = DiagnosisReport::new(&d, loaded.tau, a.problem.safety_factor);
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.problem.problem.join("diagnosis.json"));
    write_json(&out, &report)?;
    println!("regime = {}", report.regime);
    println!("dist_to_range = {:e}", report.dist_to_range);
    println!("data_norm = {}", report.data_norm);
    println!("tau_eff = {}", report.tau_eff);
    Ok(())
}

#[derive(Debug, serde::Serialize)]
struct VerificationJson {
    passed: bool,
    discrepancy_relative_error: f64,
    optimality_residual: f64,
    optimality_bound: f64,
    probes_checked: usize,
    violations: Vec<String>,
}

pub fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    check_safety_factor(a.safety_factor)?;
    let result_path = a
        .result
        .clone()
        .unwrap_or_else(|| a.problem.join("result.json"));
    let report: SelectionReport = read_json(&result_path)?;
    let f_path = result_path
        .parent()
        .unwrap_or(Path::new("."))
        .join(&report.f_star_file);
    let f_star = read_csv_vector(&f_path)?;
    let problem = load_fixture(&a.problem)?;
    let tau_eff = match a.tau {
        Some(t) if t > 0.0 => a.safety_factor * t,
        Some(t) => return Err(Failure::new(EXIT_IO, format!("tau must be positive, got {t}"))),
        None => report.tau,
    };
    let lag = problem.lagrangian(tau_eff)?;
    let res = report
        .to_result(f_star)
        .ok_or_else(|| Failure::new(EXIT_IO, format!("unknown method {:?}", report.method)))?;
    let v = verify_morozov_solution(
        &res,
        &lag,
        &VerifyOptions {
            rtol: a.rtol,
            seed: a.seed,
            ..Default::default()
        },
    )?;
    let violations: Vec<String> = v.violations.iter().map(|x| format!("{x:?}")).collect();
    if let Some(out) = &a.out {
        write_json(
            out,
            &VerificationJson {
                passed: v.passed(),
                discrepancy_relative_error: v.discrepancy_relative_error,
                optimality_residual: v.optimality_residual,
                optimality_bound: v.optimality_bound,
                probes_checked: v.probes_checked,
                violations: violations.clone(),
            },
        )?;
    }
    println!("discrepancy_relative_error = {:e}", v.discrepancy_relative_error);
    println!("optimality_residual = {:e}", v.optimality_residual);
    if v.passed() {
        println!("verification passed");
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_VERIFY_FAILED,
            format!("verification failed: {}", violations.join("; ")),
        ))
    }
}

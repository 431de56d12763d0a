//! Command-line front end: fit, weights, certify, adapt and simulate
//! subcommands over the sparsereg library.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.
//! The environment variable `SLK_SEED` overrides `--seed` when set.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sparsereg::adaptive::{run_adaptive, DistanceMetric, DyadicGrid, SelectorConfig};
use sparsereg::conditions::{
    cone_constant_bracket, sparse_eigenvalues, ConeKind, ConeSpec, SearchBudget,
    DEFAULT_ENUM_BUDGET,
};
use sparsereg::design::DesignMatrix;
use sparsereg::harness::{run_scenario_with_threads, ExperimentConfig, Scenario};
use sparsereg::io;
use sparsereg::norms::{slope_weights, WeightVector};
use sparsereg::solver::{fit_lasso, fit_slope, FitResult, LassoConfig, SlopeConfig};
use sparsereg::tuning::{lasso_tuning_lambda, TuningContext};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sparsereg",
    about = "Sparse linear regression: Lasso/Slope solvers, tuning rules, design certification and Monte-Carlo verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a Lasso or Slope estimator to a design/response pair
    Fit(FitArgs),
    /// Print the recommended Slope weights
    Weights(WeightsArgs),
    /// Certify a design condition (RE/SRE/WRE cones or sparse eigenvalues)
    Certify(CertifyArgs),
    /// Run the sparsity-adaptive Lasso
    Adapt(AdaptArgs),
    /// Run a Monte-Carlo verification scenario
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorKind {
    Lasso,
    Slope,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    estimator: EstimatorKind,
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    response: PathBuf,
    /// Lasso tuning parameter (alternative: --sigma/--sparsity/--gamma)
    #[arg(long)]
    lambda: Option<f64>,
    /// Noise level for the analytic tuning rules
    #[arg(long)]
    sigma: Option<f64>,
    /// Sparsity entering the Lasso tuning rule
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Slope weight constant (weights a*sigma*sqrt(log(2p/j)/n))
    #[arg(long)]
    a: Option<f64>,
    /// Slope weights file (single-column CSV), overrides --sigma/--a
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = sparsereg::solver::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    a: f64,
    /// Write to a single-column CSV instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConditionKind {
    Re,
    Sre,
    Wre,
    SparseEig,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long, value_enum)]
    condition: ConditionKind,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 7.0)]
    c0: f64,
    #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise level for the WRE weights
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Weight constant for the WRE weights
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricKind {
    Prediction,
    L1,
    L2,
}

#[derive(Args)]
struct AdaptArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    response: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    s_star: usize,
    #[arg(long, value_enum, default_value_t = MetricKind::Prediction)]
    metric: MetricKind,
    /// Lower bound on the restricted eigenvalue constant (defaults to 1
    /// with a warning)
    #[arg(long)]
    theta_star: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-replicate records as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Cap the worker count (output bytes do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

fn data_err(e: sparsereg::Error) -> Failure {
    Failure::data(e.to_string())
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Weights(args) => run_weights(args),
        Command::Certify(args) => run_certify(args),
        Command::Adapt(args) => run_adapt(args),
        Command::Simulate(args) => run_simulate(args),
    }
}

fn read_design(path: &Path) -> Result<DesignMatrix, Failure> {
    let m = io::read_matrix(path)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    DesignMatrix::new(m).map_err(data_err)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::data(format!("serialization: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct FitReport {
    schema_version: u32,
    estimator: String,
    tuning: serde_json::Value,
    result: FitResult,
}

fn run_fit(args: FitArgs) -> Result<ExitCode, Failure> {
    let x = read_design(&args.design)?;
    let y = io::read_vector(&args.response)
        .map_err(|e| Failure::data(format!("{}: {e}", args.response.display())))?;
    x.check_response(&y).map_err(data_err)?;

    let (result, estimator, tuning) = match args.estimator {
        EstimatorKind::Lasso => {
            let lambda = match (args.lambda, args.sigma, args.sparsity) {
                (Some(l), _, _) => l,
                (None, Some(sigma), Some(s)) => {
                    let ctx =
                        TuningContext::new(args.gamma, 0.0, s, sigma, x.rows(), x.cols(), 0.5)
                            .map_err(|e| Failure::usage(e.to_string()))?;
                    lasso_tuning_lambda(&ctx).map_err(|e| Failure::usage(e.to_string()))?
                }
                _ => {
                    return Err(Failure::usage(
                        "lasso needs --lambda or the triple --sigma --sparsity --gamma",
                    ))
                }
            };
            let mut cfg = LassoConfig::new(lambda);
            cfg.max_iters = args.max_iters;
            cfg.gap_tol = args.gap_tol;
            let fit = fit_lasso(&x, &y, &cfg).map_err(data_err)?;
            (fit, "lasso", serde_json::json!({ "lambda": lambda }))
        }
        EstimatorKind::Slope => {
            let weights = match (&args.weights, args.sigma, args.a) {
                (Some(path), _, _) => {
                    let w = io::read_vector(path)
                        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
                    WeightVector::new(w.to_vec()).map_err(data_err)?
                }
                (None, Some(sigma), Some(a)) => {
                    slope_weights(x.rows(), x.cols(), sigma, a).map_err(data_err)?
                }
                _ => {
                    return Err(Failure::usage(
                        "slope needs --weights or the pair --sigma --a",
                    ))
                }
            };
            let mut cfg = SlopeConfig::new(weights.clone());
            cfg.max_iters = args.max_iters;
            cfg.gap_tol = args.gap_tol;
            let fit = fit_slope(&x, &y, &cfg).map_err(data_err)?;
            (
                fit,
                "slope",
                serde_json::json!({ "weights": weights.as_slice() }),
            )
        }
    };

    println!("estimator: {estimator}");
    println!("tuning: {tuning}");
    println!(
        "objective {:.6e}, duality gap {:.3e}, {} iterations, converged: {}",
        result.objective, result.duality_gap, result.iterations, result.converged
    );
    let converged = result.converged;
    let report = FitReport {
        schema_version: 1,
        estimator: estimator.into(),
        tuning,
        result,
    };
    write_json(&args.out, &report)?;
    if !converged {
        eprintln!("solver did not converge; partial result written");
        return Ok(ExitCode::from(EXIT_NONCONVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_weights(args: WeightsArgs) -> Result<ExitCode, Failure> {
    let w = slope_weights(args.n, args.p, args.sigma, args.a)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let v = ndarray::Array1::from(w.as_slice().to_vec());
    match &args.out {
        Some(path) => io::write_vector(path, &v)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?,
        None => print!("{}", io::vector_to_csv(&v)),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CertifyReport {
    schema_version: u32,
    condition: String,
    s: usize,
    c0: f64,
    lower: f64,
    upper: f64,
    witness: Vec<f64>,
    method: String,
}

fn run_certify(args: CertifyArgs) -> Result<ExitCode, Failure> {
    let x = read_design(&args.design)?;
    let report = match args.condition {
        ConditionKind::SparseEig => {
            let (lo, hi) = sparse_eigenvalues(&x, args.s, args.budget).map_err(data_err)?;
            CertifyReport {
                schema_version: 1,
                condition: "sparse-eig".into(),
                s: args.s,
                c0: args.c0,
                lower: lo,
                upper: hi,
                witness: Vec::new(),
                method: "exhaustive".into(),
            }
        }
        kind => {
            let (cone_kind, name) = match kind {
                ConditionKind::Re => (ConeKind::Re, "re"),
                ConditionKind::Sre => (ConeKind::Sre, "sre"),
                ConditionKind::Wre => (ConeKind::Wre, "wre"),
                ConditionKind::SparseEig => unreachable!(),
            };
            let weights = if cone_kind == ConeKind::Wre {
                let a = args
                    .a
                    .unwrap_or(2.0 * sparsereg::norms::event_constant());
                Some(slope_weights(x.rows(), x.cols(), args.sigma, a).map_err(data_err)?)
            } else {
                None
            };
            let cone = ConeSpec::new(cone_kind, args.s, args.c0, weights).map_err(data_err)?;
            let budget = SearchBudget {
                seed: args.seed,
                enum_budget: args.budget,
                ..SearchBudget::default()
            };
            let bracket = cone_constant_bracket(&x, &cone, &budget).map_err(data_err)?;
            CertifyReport {
                schema_version: 1,
                condition: name.into(),
                s: args.s,
                c0: args.c0,
                lower: bracket.lower,
                upper: bracket.upper,
                witness: bracket.witness,
                method: match bracket.method {
                    sparsereg::conditions::BracketMethod::Exhaustive => "exhaustive".into(),
                    sparsereg::conditions::BracketMethod::Sampled => "sampled".into(),
                    sparsereg::conditions::BracketMethod::CertifiedChain => {
                        "certified-chain".into()
                    }
                },
            }
        }
    };
    println!(
        "{}: lower {:.6}, upper {:.6} ({})",
        report.condition, report.lower, report.upper, report.method
    );
    write_json(&args.out, &report)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AdaptReport {
    schema_version: u32,
    metric: String,
    theta_star: f64,
    #[serde(flatten)]
    selection: sparsereg::adaptive::SelectionResult,
}

fn run_adapt(args: AdaptArgs) -> Result<ExitCode, Failure> {
    if args.s_star < 2 {
        return Err(Failure::usage("--s-star must be at least 2"));
    }
    let x = read_design(&args.design)?;
    let y = io::read_vector(&args.response)
        .map_err(|e| Failure::data(format!("{}: {e}", args.response.display())))?;
    let theta_star = match args.theta_star {
        Some(t) => t,
        None => {
            eprintln!("warning: --theta-star not given, defaulting to 1 (exact for orthonormal designs)");
            1.0
        }
    };
    let (metric, name) = match args.metric {
        MetricKind::Prediction => (DistanceMetric::Prediction, "prediction"),
        MetricKind::L1 => (DistanceMetric::Lq(1.0), "l1"),
        MetricKind::L2 => (DistanceMetric::Lq(2.0), "l2"),
    };
    let cfg = SelectorConfig::new(metric, theta_star, args.sigma)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let grid = DyadicGrid::new(args.s_star).map_err(|e| Failure::usage(e.to_string()))?;
    let selection = run_adaptive(&x, &y, &cfg, &grid).map_err(data_err)?;
    println!(
        "selected m_hat = {}, s_hat = {} (metric: {name})",
        selection.m_hat, selection.s_hat
    );
    let report = AdaptReport {
        schema_version: 1,
        metric: name.into(),
        theta_star,
        selection,
    };
    write_json(&args.out, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn run_simulate(args: SimulateArgs) -> Result<ExitCode, Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::data(format!("{}: {e}", args.config.display())))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::data(format!("{}: {e}", args.config.display())))?;

    cfg.scenario = parse_scenario(&args.scenario)?;
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Ok(env_seed) = std::env::var("SLK_SEED") {
        cfg.seed = env_seed
            .parse()
            .map_err(|e| Failure::usage(format!("SLK_SEED: {e}")))?;
    }

    let report = run_scenario_with_threads(&cfg, args.threads)
        .map_err(|e| Failure::data(e.to_string()))?;
    eprintln!(
        "scenario finished in {:.2}s ({} replicates)",
        report.wall_time_secs,
        report.records.len()
    );
    for (key, value) in &report.aggregates {
        println!("{key}: {value}");
    }
    std::fs::write(&args.out, report.to_json() + "\n")
        .map_err(|e| Failure::data(format!("{}: {e}", args.out.display())))?;
    if let Some(csv) = &args.csv {
        std::fs::write(csv, report.records_csv())
            .map_err(|e| Failure::data(format!("{}: {e}", csv.display())))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_scenario(name: &str) -> Result<Scenario, Failure> {
    Ok(match name {
        "event" => Scenario::Event,
        "oracle-lasso" => Scenario::OracleLasso,
        "oracle-slope" => Scenario::OracleSlope,
        "adaptive" => Scenario::Adaptive,
        "rate" => Scenario::Rate,
        "lower-bound" => Scenario::LowerBound,
        "subgaussian-noise" => Scenario::SubgaussianNoise,
        other => {
            return Err(Failure::usage(format!(
                "unknown scenario {other:?}; expected one of event, oracle-lasso, oracle-slope, \
                 adaptive, rate, lower-bound, subgaussian-noise"
            )))
        }
    })
}

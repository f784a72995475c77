use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use convex_relu::arrangements::{Pattern, PatternSet};
use convex_relu::dataset::{rng_stream, standard_normal_vector, stream, Dataset, LabelMode};
use convex_relu::decomposition::{cone_sharpness, decompose_min_norm};
use convex_relu::error::Error;
use convex_relu::experiments::{
    bounds_for, drift_experiment, train_pipeline, width_sweep, width_sweep_csv, ExperimentConfig, PatternMode,
};
use convex_relu::network::LearningRate;
use convex_relu::solvers::{solve_cone_constrained, solve_gated, verify_kkt_gated};
use convex_relu::verify::run_suite;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CERTIFIED: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

/// Randomized convex relaxations of two-layer ReLU networks.
///
/// Every command reads an optional JSON config (the full parameter set, see
/// `ExperimentConfig`), applies the command-line overrides and is
/// deterministic given the result. Threshold computations use delta = 0.1
/// unless set.
///
/// Exit codes: 0 success, 1 runtime error, 2 config error, 3 a solver did
/// not certify its answer, 4 a verification check failed.
#[derive(Parser, Debug)]
#[command(name = "convex-relu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Overrides,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset file.
    Gen,
    /// Build a pattern set (sampled, enumerated or paired).
    Sample,
    /// Solve the gated group-lasso relaxation.
    SolveGated,
    /// Solve the cone-constrained relaxation.
    SolveCone,
    /// Minimum-norm cone decomposition of a vector.
    Decompose,
    /// Spectral quantities, bounds and sample-count thresholds.
    Bounds,
    /// Train the network by gradient descent.
    Train,
    /// Sample, solve the cone relaxation and map to a network.
    Pipeline,
    /// Optimal values along a nested pattern grid (CSV).
    WidthSweep,
    /// Activation drift during gradient descent (CSV).
    Drift,
    /// Run the acceptance suite.
    Verify,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// JSON config file mirroring ExperimentConfig.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for seed-indexed trials.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Dataset file to load instead of generating one.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Labels from a random teacher network with this many units.
    #[arg(long, global = true)]
    planted: Option<usize>,
    /// Failure probability for thresholds (default 0.1).
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Pattern file to use instead of building a set.
    #[arg(long, global = true)]
    patterns: Option<PathBuf>,
    /// sampled, enumerated or paired.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<PatternMode>,
    /// Number of sampled patterns.
    #[arg(long, global = true)]
    count: Option<usize>,

    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    cone_tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,

    /// Network width (pipeline and training).
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Fixed learning rate (backtracking when absent).
    #[arg(long, global = true)]
    lr: Option<f64>,

    /// Comma-separated regularization values for the width sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Comma-separated pattern counts for the width sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long, global = true)]
    include_cone: bool,

    /// Mask for `decompose`, e.g. 0110 (first configured pattern when absent).
    #[arg(long, global = true)]
    pattern: Option<String>,
    /// Comma-separated vector for `decompose` (seeded Gaussian when absent).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    w: Option<Vec<f64>>,

    /// Reduced trial counts for `verify`.
    #[arg(long, global = true)]
    quick: bool,
    /// Comma-separated check ids for `verify`.
    #[arg(long, global = true, value_delimiter = ',')]
    only: Option<Vec<usize>>,
    /// Record wall time in the pipeline report.
    #[arg(long, global = true)]
    timing: bool,
}

fn parse_mode(s: &str) -> Result<PatternMode, String> {
    match s {
        "sampled" => Ok(PatternMode::Sampled),
        "enumerated" => Ok(PatternMode::Enumerated),
        "paired" => Ok(PatternMode::Paired),
        _ => Err(format!("unknown pattern mode `{s}`")),
    }
}

enum Failure {
    Config(String),
    Runtime(Error),
    NotCertified,
    VerifyFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config(o: &Overrides) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = &o.data {
        cfg.dataset.path = Some(v.clone());
    }
    if let Some(v) = o.n {
        cfg.dataset.n = v;
    }
    if let Some(v) = o.d {
        cfg.dataset.d = v;
    }
    if let Some(v) = o.beta {
        cfg.dataset.beta = v;
    }
    if let Some(hidden) = o.planted {
        cfg.dataset.labels = LabelMode::PlantedNetwork { hidden };
    }
    if let Some(v) = o.delta {
        cfg.delta = v;
    }
    if let Some(v) = o.mode {
        cfg.patterns.mode = v;
    }
    if let Some(v) = o.count {
        cfg.patterns.count = v;
    }
    if let Some(v) = o.tol {
        cfg.solver.tol_kkt = v;
    }
    if let Some(v) = o.cone_tol {
        cfg.cone_solver.tol_kkt = v;
    }
    if let Some(v) = o.max_iters {
        cfg.solver.max_iters = v;
        cfg.cone_solver.max_iters = v;
    }
    if let Some(v) = o.m {
        cfg.pipeline.m = v;
        cfg.network.m = v;
    }
    if let Some(v) = o.steps {
        cfg.network.train.steps = v;
    }
    if let Some(lr) = o.lr {
        cfg.network.train.learning_rate = LearningRate::Fixed { lr };
    }
    if let Some(v) = &o.betas {
        cfg.width_sweep.betas = v.clone();
    }
    if let Some(v) = &o.grid {
        cfg.width_sweep.grid = v.clone();
    }
    cfg.width_sweep.include_cone |= o.include_cone;
    cfg.verify.quick |= o.quick;
    if let Some(v) = &o.only {
        cfg.verify.only = v.clone();
    }
    cfg.pipeline.record_timing |= o.timing;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn patterns(o: &Overrides, cfg: &ExperimentConfig, ds: &Dataset) -> Result<PatternSet, Failure> {
    match &o.patterns {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(e.into()))?;
            Ok(PatternSet::from_text(&text)?)
        }
        None => Ok(cfg.pattern_set(ds)?),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let o = &cli.global;
    let cfg = config(o)?;
    let out = o.out.as_deref();
    match cli.command {
        Command::Gen => emit(out, &cfg.dataset()?.to_text()),
        Command::Sample => {
            let ds = cfg.dataset()?;
            emit(out, &cfg.pattern_set(&ds)?.to_text())
        }
        Command::SolveGated => {
            let ds = cfg.dataset()?;
            let ps = patterns(o, &cfg, &ds)?;
            let sol = solve_gated(&ds, &ps, &cfg.solver)?;
            let kkt = verify_kkt_gated(&ds, &ps, &sol)?;
            emit(out, &to_json(&json!({ "patterns": ps.len(), "solution": sol, "kkt": kkt })))?;
            if sol.certified { Ok(()) } else { Err(Failure::NotCertified) }
        }
        Command::SolveCone => {
            let ds = cfg.dataset()?;
            let ps = patterns(o, &cfg, &ds)?;
            let sol = solve_cone_constrained(&ds, &ps, &cfg.cone_solver)?;
            emit(out, &to_json(&json!({ "patterns": ps.len(), "solution": sol })))?;
            if sol.certified { Ok(()) } else { Err(Failure::NotCertified) }
        }
        Command::Decompose => {
            let ds = cfg.dataset()?;
            let pattern = match &o.pattern {
                Some(bits) => Pattern::parse(bits)?,
                None => patterns(o, &cfg, &ds)?.patterns()[0].clone(),
            };
            let w = match &o.w {
                Some(v) => DVector::from_vec(v.clone()),
                None => standard_normal_vector(&mut rng_stream(cfg.seed, stream::DIRECTIONS), ds.d()),
            };
            let dec = decompose_min_norm(&ds, &pattern, &w, &cfg.solver)?;
            let sharp = cone_sharpness(&ds, &pattern, &w.normalize(), &cfg.solver)?;
            emit(out, &to_json(&json!({ "pattern": pattern, "w": w, "decomposition": dec, "sharpness": sharp })))?;
            if dec.certified { Ok(()) } else { Err(Failure::NotCertified) }
        }
        Command::Bounds => {
            let ds = cfg.dataset()?;
            let ps = patterns(o, &cfg, &ds)?;
            emit(out, &to_json(&bounds_for(&ds, &ps, cfg.delta)?))
        }
        Command::Train => {
            let ds = cfg.dataset()?;
            let (trace, net) = drift_experiment(&ds, &cfg.network, cfg.seed)?;
            let report = json!({
                "steps": trace.steps_taken(),
                "final_loss": trace.final_loss(),
                "converged": trace.converged,
                "final_gradient_norm": trace.final_gradient_norm,
                "drift_fraction": trace.drift_fraction,
                "network": net,
            });
            emit(out, &to_json(&report))
        }
        Command::Pipeline => {
            let ds = cfg.dataset()?;
            let (report, _, _) = train_pipeline(&ds, cfg.pipeline.m, cfg.seed, &cfg.cone_solver, cfg.pipeline.record_timing)?;
            emit(out, &to_json(&report))?;
            if report.certified { Ok(()) } else { Err(Failure::NotCertified) }
        }
        Command::WidthSweep => {
            let ds = cfg.dataset()?;
            let rows = width_sweep(&ds, &cfg.width_sweep, cfg.seed, &cfg.solver, &cfg.cone_solver)?;
            emit(out, &width_sweep_csv(&rows))?;
            if rows.iter().all(|r| r.certified()) { Ok(()) } else { Err(Failure::NotCertified) }
        }
        Command::Drift => {
            let ds = cfg.dataset()?;
            let (trace, _) = drift_experiment(&ds, &cfg.network, cfg.seed)?;
            emit(out, &trace.to_csv())
        }
        Command::Verify => {
            let outcomes = run_suite(&cfg.verify, cfg.jobs)?;
            for c in &outcomes {
                eprintln!("{}", c.line());
            }
            let passed = outcomes.iter().filter(|c| c.passed).count();
            eprintln!("{passed}/{} checks passed", outcomes.len());
            emit(out, &to_json(&outcomes))?;
            if passed == outcomes.len() { Ok(()) } else { Err(Failure::VerifyFailed) }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::NotCertified) => {
            eprintln!("not certified: the solver stopped before reaching its tolerance");
            ExitCode::from(EXIT_NOT_CERTIFIED)
        }
        Err(Failure::VerifyFailed) => ExitCode::from(EXIT_VERIFY_FAILED),
    }
}

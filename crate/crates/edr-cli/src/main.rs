//! Command-line front door for the error-disturbance toolkit: validates
//! measurement files, evaluates error reports, computes trade-off bounds,
//! runs optimizations and qubit sweeps, and emits JSON/CSV artifacts.
//!
//! Exit codes are a stable contract: 0 on success, 1 when an input is
//! well-formed but violates a domain invariant (non-PSD element, dimension
//! mismatch, out-of-range parameter), 2 on usage, IO, or parse failures.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use edr_core::bound::{infimum_bound, mub_bound, BoundVariant, DEFAULT_RESOLUTION};
use edr_core::measurement::{validate_joint_povm, BasisPair};
use edr_core::metrics::{joint_errors, ErrorMetric, ErrorReport};
use edr_core::mub::{fourier_equivalence, fourier_pair};
use edr_core::operators::PSD_TOL;
use edr_core::optimizer::{certify_qubit_sweep, minimize_total_error, OptimizerConfig};
use edr_core::qubit::{canonical_basis_pair, tradeoff_bound};
use edr_core::schema::{
    metric_from_name, EquivalenceDoc, ErrorReportDoc, HadamardDoc, InstrumentDoc, PairDoc,
    PovmDoc,
};

#[derive(Parser)]
#[command(
    name = "edr",
    version,
    about = "Operational error-disturbance trade-offs for approximate joint measurements"
)]
struct Cli {
    /// RNG seed; overrides the EDR_SEED environment variable (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a joint POVM file against the measurement invariants.
    Validate {
        /// Joint POVM JSON file ({"dim", "elements"}).
        path: PathBuf,
    },
    /// Evaluate the two error components of a joint POVM against a basis pair.
    Errors {
        /// Joint POVM JSON file.
        povm: PathBuf,
        /// Basis-pair JSON file ({"dim", "unbarred", "barred"}).
        pair: PathBuf,
        /// Error metric: "calibration" or "variation".
        #[arg(long, value_parser = metric_value, default_value = "calibration")]
        metric: ErrorMetric,
    },
    /// Lower bound on ε + ε̄ from the analytic qubit curve, a closed form,
    /// or a feasibility grid scan.
    Bound(BoundArgs),
    /// Search for a joint POVM minimizing ε + ε̄.
    Optimize(OptimizeArgs),
    /// Tabulate the qubit bound over θ ∈ [0, π/4] as CSV, optionally with
    /// optimizer-achieved values and gaps.
    Sweep(SweepArgs),
    /// Evaluate the error-disturbance components of an instrument file.
    Instrument {
        /// Instrument JSON file ({"dim", "families"}).
        instrument: PathBuf,
        /// Basis-pair JSON file.
        pair: PathBuf,
        /// Error metric: "calibration" or "variation".
        #[arg(long, value_parser = metric_value, default_value = "calibration")]
        metric: ErrorMetric,
    },
    /// Test a complex Hadamard matrix for Fourier equivalence.
    Hadamard {
        /// Candidate JSON file: bare matrix or {"dim", "matrix"}.
        path: PathBuf,
    },
}

/// Exactly one source of the basis pair under study.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Basis-pair JSON file.
    #[arg(long)]
    pair: Option<PathBuf>,
    /// Canonical qubit pair at half-angle θ in radians, θ ∈ [0, π/4].
    #[arg(long)]
    qubit_theta: Option<f64>,
    /// Fourier (mutually unbiased) pair in dimension N.
    #[arg(long)]
    mub: Option<usize>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Error metric: "calibration" or "variation".
    #[arg(long, value_parser = metric_value, default_value = "calibration")]
    metric: ErrorMetric,
    /// Coefficient set for the grid scan: "generic" or "mub-improved".
    #[arg(long, value_parser = variant_value, default_value = "mub-improved")]
    variant: BoundVariant,
    /// Grid resolution for the scan-based bound.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Error metric: "calibration" or "variation".
    #[arg(long, value_parser = metric_value, default_value = "calibration")]
    metric: ErrorMetric,
    /// Optimizer config JSON file; individual flags override its fields,
    /// and its seed wins over EDR_SEED but loses to --seed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of independent restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Iteration budget per restart.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Step-size convergence threshold.
    #[arg(long)]
    step_tol: Option<f64>,
    /// Objective-improvement convergence threshold.
    #[arg(long)]
    value_tol: Option<f64>,
    /// Average accepted iterates over the qubit symmetry group
    /// (dimension 2 only; ignored otherwise).
    #[arg(long, action = ArgAction::SetTrue)]
    symmetrize: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Error metric: "calibration" or "variation".
    #[arg(long, value_parser = metric_value, default_value = "calibration")]
    metric: ErrorMetric,
    /// Number of θ grid points spanning [0, π/4].
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    /// Run the optimizer at each grid point and add achieved/gap columns.
    #[arg(long, action = ArgAction::SetTrue)]
    optimize: bool,
    /// Number of independent restarts per grid point (with --optimize).
    #[arg(long)]
    restarts: Option<usize>,
    /// Iteration budget per restart (with --optimize).
    #[arg(long)]
    max_iters: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

type CliResult<T> = Result<T, Failure>;

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// Library errors are domain violations: the file parsed, the values did not.
fn domain<T>(result: edr_core::Result<T>) -> CliResult<T> {
    result.map_err(|e| fail(1, e.to_string()))
}

fn read_file(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(2, format!("cannot read {}: {e}", path.display())))
}

fn load_json<T: DeserializeOwned>(path: &PathBuf) -> CliResult<T> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| fail(2, format!("malformed JSON in {}: {e}", path.display())))
}

fn metric_value(s: &str) -> Result<ErrorMetric, String> {
    metric_from_name(s).map_err(|e| e.to_string())
}

fn variant_value(s: &str) -> Result<BoundVariant, String> {
    match s {
        "generic" => Ok(BoundVariant::Generic),
        "mub-improved" => Ok(BoundVariant::MubImproved),
        _ => Err(format!(
            "expected \"generic\" or \"mub-improved\", got \"{s}\""
        )),
    }
}

fn variant_name(variant: BoundVariant) -> &'static str {
    match variant {
        BoundVariant::Generic => "generic",
        BoundVariant::MubImproved => "mub-improved",
    }
}

/// Seed precedence: --seed flag, then EDR_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("EDR_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| fail(2, format!("EDR_SEED must be an unsigned integer, got {text:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(fail(2, format!("EDR_SEED is unreadable: {e}"))),
    }
}

fn manifest(
    command: &str,
    inputs: &[&PathBuf],
    config: Value,
    seed: u64,
    started: Instant,
) -> Value {
    json!({
        "command": command,
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "wall_time_s": started.elapsed().as_secs_f64(),
    })
}

fn print_with_manifest(mut payload: Map<String, Value>, manifest: Value) {
    payload.insert("manifest".into(), manifest);
    println!(
        "{}",
        serde_json::to_string_pretty(&Value::Object(payload)).expect("serializable payload")
    );
}

fn report_payload(report: &ErrorReport) -> Map<String, Value> {
    let doc = ErrorReportDoc::from_report(report);
    match serde_json::to_value(&doc).expect("serializable report") {
        Value::Object(map) => map,
        _ => unreachable!("report serializes to an object"),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    match run(cli, started) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !failure.message.is_empty() {
                eprintln!("error: {}", failure.message);
            }
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli, started: Instant) -> CliResult<()> {
    let seed = resolve_seed(cli.seed)?;
    match cli.command {
        Command::Validate { path } => cmd_validate(path, seed, started),
        Command::Errors { povm, pair, metric } => cmd_errors(povm, pair, metric, seed, started),
        Command::Bound(args) => cmd_bound(args, seed, started),
        Command::Optimize(args) => cmd_optimize(args, cli.seed, seed, started),
        Command::Sweep(args) => cmd_sweep(args, seed, started),
        Command::Instrument {
            instrument,
            pair,
            metric,
        } => cmd_instrument(instrument, pair, metric, seed, started),
        Command::Hadamard { path } => cmd_hadamard(path, seed, started),
    }
}

fn cmd_validate(path: PathBuf, seed: u64, started: Instant) -> CliResult<()> {
    let doc: PovmDoc = load_json(&path)?;
    let grid = doc.matrices().map_err(|e| fail(2, e.to_string()))?;
    let manifest = manifest("validate", &[&path], json!({}), seed, started);
    match validate_joint_povm(&grid, PSD_TOL) {
        Ok(joint) => {
            let mut payload = Map::new();
            payload.insert("valid".into(), json!(true));
            payload.insert("dim".into(), json!(joint.dim()));
            print_with_manifest(payload, manifest);
            Ok(())
        }
        Err(violations) => {
            for v in &violations {
                let element = v.element.map(|(a, b)| json!([a + 1, b + 1]));
                println!(
                    "{}",
                    json!({
                        "kind": v.kind.to_string(),
                        "element": element,
                        "magnitude": v.magnitude,
                        "tolerance": v.tolerance,
                    })
                );
            }
            let mut payload = Map::new();
            payload.insert("valid".into(), json!(false));
            payload.insert("violations".into(), json!(violations.len()));
            print_with_manifest(payload, manifest);
            Err(fail(
                1,
                format!("{} invariant violation(s)", violations.len()),
            ))
        }
    }
}

fn cmd_errors(
    povm_path: PathBuf,
    pair_path: PathBuf,
    metric: ErrorMetric,
    seed: u64,
    started: Instant,
) -> CliResult<()> {
    let povm_doc: PovmDoc = load_json(&povm_path)?;
    let pair_doc: PairDoc = load_json(&pair_path)?;
    let povm = domain(povm_doc.to_joint(PSD_TOL))?;
    let pair = domain(pair_doc.to_pair())?;
    let report = domain(joint_errors(&povm, &pair, metric))?;
    let manifest = manifest(
        "errors",
        &[&povm_path, &pair_path],
        json!({"metric": metric.name()}),
        seed,
        started,
    );
    print_with_manifest(report_payload(&report), manifest);
    Ok(())
}

fn cmd_bound(args: BoundArgs, seed: u64, started: Instant) -> CliResult<()> {
    let mut payload = Map::new();
    let mut inputs: Vec<&PathBuf> = Vec::new();
    let config = json!({
        "metric": args.metric.name(),
        "variant": variant_name(args.variant),
        "resolution": args.resolution,
    });
    if let Some(theta) = args.source.qubit_theta {
        let bound = domain(tradeoff_bound(args.metric, theta))?;
        payload.insert("bound".into(), json!(bound));
        payload.insert("method".into(), json!("qubit-analytic"));
        payload.insert("theta".into(), json!(theta));
    } else if let Some(n) = args.source.mub {
        let mb = domain(mub_bound(n))?;
        let pair = domain(fourier_pair(n))?;
        let grid = domain(infimum_bound(&pair, args.variant, args.resolution))?;
        payload.insert("bound".into(), json!(mb.closed_form));
        payload.insert("method".into(), json!("mub-closed-form"));
        payload.insert("closed_form".into(), json!(mb.closed_form));
        payload.insert("numeric_root".into(), json!(mb.numeric_root));
        payload.insert("grid_infimum".into(), json!(grid));
        payload.insert("variant".into(), json!(variant_name(args.variant)));
        payload.insert("dim".into(), json!(n));
    } else {
        let path = args.source.pair.as_ref().expect("selector group is required");
        inputs.push(path);
        let pair_doc: PairDoc = load_json(path)?;
        let pair = domain(pair_doc.to_pair())?;
        let bound = domain(infimum_bound(&pair, args.variant, args.resolution))?;
        payload.insert("bound".into(), json!(bound));
        payload.insert("method".into(), json!("appendix-c-grid"));
        payload.insert("variant".into(), json!(variant_name(args.variant)));
        payload.insert("dim".into(), json!(pair.dim()));
    }
    let manifest = manifest("bound", &inputs, config, seed, started);
    print_with_manifest(payload, manifest);
    Ok(())
}

/// Loads the basis pair an optimization targets, returning it with the path
/// to echo (when it came from a file) and a selector description.
fn load_source(source: &SourceArgs) -> CliResult<(BasisPair, Option<PathBuf>, Value)> {
    if let Some(theta) = source.qubit_theta {
        let pair = domain(canonical_basis_pair(theta))?;
        Ok((pair, None, json!({"qubit_theta": theta})))
    } else if let Some(n) = source.mub {
        let pair = domain(fourier_pair(n))?;
        Ok((pair, None, json!({"mub": n})))
    } else {
        let path = source.pair.clone().expect("selector group is required");
        let pair_doc: PairDoc = load_json(&path)?;
        let pair = domain(pair_doc.to_pair())?;
        let echo = json!({"pair": path.display().to_string()});
        Ok((pair, Some(path), echo))
    }
}

fn cmd_optimize(
    args: OptimizeArgs,
    seed_flag: Option<u64>,
    default_seed: u64,
    started: Instant,
) -> CliResult<()> {
    let (pair, input, selector) = load_source(&args.source)?;
    let mut config = match &args.config {
        Some(path) => load_json::<OptimizerConfig>(path)?,
        None => OptimizerConfig {
            seed: default_seed,
            ..OptimizerConfig::default()
        },
    };
    if let Some(seed) = seed_flag {
        config.seed = seed;
    }
    if let Some(restarts) = args.restarts {
        config.restarts = restarts;
    }
    if let Some(max_iters) = args.max_iters {
        config.max_iters = max_iters;
    }
    if let Some(step_tol) = args.step_tol {
        config.step_tol = step_tol;
    }
    if let Some(value_tol) = args.value_tol {
        config.value_tol = value_tol;
    }
    if args.symmetrize {
        config.symmetrize_each_iter = true;
    }

    let result = domain(minimize_total_error(&pair, args.metric, &config))?;

    let mut config_echo = match serde_json::to_value(&config).expect("serializable config") {
        Value::Object(map) => map,
        _ => unreachable!("config serializes to an object"),
    };
    config_echo.insert("metric".into(), json!(args.metric.name()));
    config_echo.insert("selector".into(), selector);

    let mut inputs: Vec<&PathBuf> = Vec::new();
    if let Some(path) = &input {
        inputs.push(path);
    }
    if let Some(path) = &args.config {
        inputs.push(path);
    }
    let manifest = manifest(
        "optimize",
        &inputs,
        Value::Object(config_echo),
        config.seed,
        started,
    );

    let mut payload = Map::new();
    payload.insert("metric".into(), json!(args.metric.name()));
    payload.insert("objective".into(), json!(result.objective));
    payload.insert("epsilon".into(), json!(result.epsilon));
    payload.insert("epsilon_bar".into(), json!(result.epsilon_bar));
    payload.insert(
        "restart_objectives".into(),
        json!(result.restart_objectives),
    );
    payload.insert(
        "best_povm".into(),
        serde_json::to_value(PovmDoc::from_joint(&result.best_povm))
            .expect("serializable joint measurement"),
    );
    print_with_manifest(payload, manifest);
    Ok(())
}

fn cmd_sweep(args: SweepArgs, seed: u64, started: Instant) -> CliResult<()> {
    let grid = args.grid as usize;
    let config = OptimizerConfig {
        seed,
        restarts: args.restarts.unwrap_or(OptimizerConfig::default().restarts),
        max_iters: args.max_iters.unwrap_or(OptimizerConfig::default().max_iters),
        ..OptimizerConfig::default()
    };
    let config_echo = json!({
        "metric": args.metric.name(),
        "grid": grid,
        "optimize": args.optimize,
        "restarts": config.restarts,
        "max_iters": config.max_iters,
    });
    let manifest = manifest("sweep", &[], config_echo, seed, started);
    let compact = serde_json::to_string(&manifest).expect("serializable manifest");

    let mut lines = Vec::with_capacity(grid + 2);
    lines.push(format!("# manifest: {compact}"));
    if args.optimize {
        lines.push("theta,bound,achieved,gap".into());
        let rows = domain(certify_qubit_sweep(args.metric, grid, &config))?;
        for row in rows {
            lines.push(format!(
                "{},{},{},{}",
                row.theta, row.bound, row.objective, row.gap
            ));
        }
    } else {
        lines.push("theta,bound".into());
        for k in 0..grid {
            let theta = std::f64::consts::FRAC_PI_4 * k as f64 / (grid - 1) as f64;
            let bound = domain(tradeoff_bound(args.metric, theta))?;
            lines.push(format!("{theta},{bound}"));
        }
    }
    println!("{}", lines.join("\n"));
    Ok(())
}

fn cmd_instrument(
    instrument_path: PathBuf,
    pair_path: PathBuf,
    metric: ErrorMetric,
    seed: u64,
    started: Instant,
) -> CliResult<()> {
    let instrument_doc: InstrumentDoc = load_json(&instrument_path)?;
    let pair_doc: PairDoc = load_json(&pair_path)?;
    let instrument = domain(instrument_doc.to_instrument())?;
    let pair = domain(pair_doc.to_pair())?;
    let report = domain(instrument.error_disturbance(&pair, metric))?;
    let manifest = manifest(
        "instrument",
        &[&instrument_path, &pair_path],
        json!({"metric": metric.name()}),
        seed,
        started,
    );
    print_with_manifest(report_payload(&report), manifest);
    Ok(())
}

fn cmd_hadamard(path: PathBuf, seed: u64, started: Instant) -> CliResult<()> {
    let doc: HadamardDoc = load_json(&path)?;
    let candidate = domain(doc.to_candidate())?;
    let equivalence = domain(fourier_equivalence(&candidate))?;
    let manifest = manifest("hadamard", &[&path], json!({}), seed, started);
    let mut payload = Map::new();
    payload.insert("dim".into(), json!(candidate.dim()));
    payload.insert("equivalent".into(), json!(equivalence.is_some()));
    let witness = match &equivalence {
        Some(eq) => serde_json::to_value(EquivalenceDoc::from_equivalence(eq))
            .expect("serializable witness"),
        None => Value::Null,
    };
    payload.insert("witness".into(), witness);
    print_with_manifest(payload, manifest);
    Ok(())
}

//! Command-line front end: `test`, `null-sim`, `power`, `scan` and `limits`.
//!
//! Every run echoes its fully resolved configuration, including the seed and
//! the optimizer defaults, so that reruns are auditable. Exit codes: 0 on
//! success, 1 on usage errors (bad flags, unreadable or malformed input), 2 on
//! data or numeric failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use plc_core::asymptotics::{
    fisher_information, limit_law_from, limit_quantile, moment_report, LimitLaw,
};
use plc_core::changepoint::{detect_changepoints, parse_signal, window_scan};
use plc_core::models::Sample;
use plc_core::plc::plc_statistic;
use plc_core::simulation::{
    canonical_null, exceeds, percentile, power_curve, run_null, write_raw_csv, NullSimSummary,
};
use plc_core::{MixtureFamily, OptimizerOptions, PlcError, SimConfig};

pub mod json;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] PlcError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "plc", version, about = "Projected likelihood contrast test for two-component Gaussian mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    Mean,
    Variance,
}

impl From<Family> for MixtureFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Mean => MixtureFamily::MeanMixture,
            Family::Variance => MixtureFamily::VarianceMixture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test one sample for homogeneity against a simulated null.
    Test(TestArgs),
    /// Simulate the null distribution of the statistic.
    NullSim(NullSimArgs),
    /// Power along a grid of alternatives.
    Power(PowerArgs),
    /// Running-window scan of a signal.
    Scan(ScanArgs),
    /// Limit law and its constants.
    Limits(LimitsArgs),
}

#[derive(Debug, Args)]
struct TestArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// One value per line, optional header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    null_reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct NullSimArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated percentiles in percent.
    #[arg(long, default_value = "5,50,95")]
    percentiles: String,
    /// Also write per-replication statistics (rep,lambda) to this file.
    #[arg(long)]
    raw: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PowerArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    n: usize,
    /// LO:HI:STEPS, i.e. STEPS equal intervals from LO to HI.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 1000)]
    null_reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = plc_core::changepoint::DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = plc_core::changepoint::DEFAULT_STEP)]
    step: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    null_reps: usize,
    /// Defaults to half the window.
    #[arg(long)]
    min_separation: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Where to write the per-window CSV (center,lambda,exceeds); stdout when
    /// the format is csv and this is absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct LimitsArgs {
    #[arg(long, value_enum)]
    family: Family,
}

/// Parses `argv` (program name first) and runs the command, writing results to
/// `out` and diagnostics to `err`. Returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Test(a) => cmd_test(a, out),
        Command::NullSim(a) => cmd_null_sim(a, out),
        Command::Power(a) => cmd_power(a, out),
        Command::Scan(a) => cmd_scan(a, out),
        Command::Limits(a) => cmd_limits(a, out),
    }
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--alpha must be in (0, 1), got {alpha}")))
    }
}

fn check_positive(flag: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        Err(CliError::Usage(format!("{flag} must be at least 1")))
    } else {
        Ok(())
    }
}

fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--input {}: {e}", path.display())))?;
    let values = parse_signal(&text).map_err(|e| CliError::Usage(format!("--input {}: {e}", path.display())))?;
    if values.is_empty() {
        return Err(CliError::Usage(format!("--input {}: no values", path.display())));
    }
    Ok(values)
}

fn optimizer_json(opts: &OptimizerOptions) -> Value {
    serde_json::to_value(opts).expect("options serialize")
}

fn emit(out: &mut dyn Write, value: &Value) -> CliResult<()> {
    out.write_all(json::to_string(value).as_bytes())?;
    Ok(())
}

/// A CSV body preceded by a `#` line carrying the resolved configuration.
fn csv_header_line(config: &Value) -> String {
    format!("# config: {}\n", serde_json::to_string(config).expect("config serializes"))
}

fn write_file(path: &Path, flag: &str, contents: &[u8]) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Usage(format!("{flag} {}: {e}", path.display())))
}

fn cmd_test(a: TestArgs, out: &mut dyn Write) -> CliResult<()> {
    check_alpha(a.alpha)?;
    check_positive("--null-reps", a.null_reps)?;
    let values = read_values(&a.input)?;
    let family: MixtureFamily = a.family.into();
    let opts = OptimizerOptions::default();
    let sample = Sample::new(values)?;
    let outcome = plc_statistic(&sample, family, &opts)?;
    let cfg = SimConfig {
        optimizer: opts,
        ..SimConfig::new(family, sample.len(), a.null_reps, a.seed)
    };
    let (t0, e0) = canonical_null(family);
    let null_run = run_null(&cfg, t0, e0)?;
    let mut sorted = null_run.lambdas.clone();
    sorted.sort_by(f64::total_cmp);
    let critical = percentile(&sorted, 100.0 * (1.0 - a.alpha))?;
    let observed = if outcome.is_zero { 0.0 } else { outcome.lambda };
    let at_least = null_run
        .lambdas
        .iter()
        .filter(|&&l| (if l < opts.zero_threshold { 0.0 } else { l }) >= observed)
        .count();
    let p_value = (1 + at_least) as f64 / (a.null_reps + 1) as f64;
    let config = json!({
        "command": "test",
        "family": a.family,
        "input": a.input.display().to_string(),
        "n": sample.len(),
        "alpha": a.alpha,
        "null_reps": a.null_reps,
        "seed": a.seed,
        "optimizer": optimizer_json(&opts),
    });
    emit(
        out,
        &json!({
            "config": config,
            "lambda": outcome.lambda,
            "is_zero": outcome.is_zero,
            "theta1": outcome.alt.theta1_hat,
            "theta2": outcome.alt.theta2_hat,
            "eta": outcome.null.eta_hat,
            "critical_value": critical,
            "p_value_mc": p_value,
            "reject": exceeds(outcome.lambda, critical, opts.zero_threshold),
            "null_retries": null_run.retries,
        }),
    )
}

fn parse_percentiles(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..=100.0).contains(v))
                .ok_or_else(|| CliError::Usage(format!("--percentiles: {p:?} is not a number in [0, 100]")))
        })
        .collect()
}

fn cmd_null_sim(a: NullSimArgs, out: &mut dyn Write) -> CliResult<()> {
    check_positive("--reps", a.reps)?;
    if a.n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {}", a.n)));
    }
    let ps = parse_percentiles(&a.percentiles)?;
    let family: MixtureFamily = a.family.into();
    let cfg = SimConfig::new(family, a.n, a.reps, a.seed);
    let (t0, e0) = canonical_null(family);
    let run = run_null(&cfg, t0, e0)?;
    let summary = NullSimSummary::from_replications(&run, cfg.optimizer.zero_threshold, &ps)?;
    let config = json!({
        "command": "null-sim",
        "family": a.family,
        "n": a.n,
        "reps": a.reps,
        "seed": a.seed,
        "theta0": t0,
        "eta0": e0,
        "percentile_rule": "type-7",
        "raw": a.raw.as_ref().map(|p| p.display().to_string()),
        "optimizer": optimizer_json(&cfg.optimizer),
    });
    if let Some(path) = &a.raw {
        let mut body = csv_header_line(&config).into_bytes();
        write_raw_csv(&run.lambdas, &mut body)?;
        write_file(path, "--raw", &body)?;
    }
    let percentiles: serde_json::Map<String, Value> = summary
        .percentiles
        .iter()
        .map(|p| (format_percent(p.p), json!(p.value)))
        .collect();
    emit(
        out,
        &json!({
            "config": config,
            "percentiles": percentiles,
            "mean": summary.mean,
            "zero_fraction": summary.zero_fraction,
            "c_squared_hat": summary.c_squared_hat,
            "retries": summary.retries,
        }),
    )
}

fn format_percent(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("--grid: expected LO:HI:STEPS, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) || !(hi > lo) || steps == 0 {
        return Err(bad());
    }
    Ok((0..=steps)
        .map(|i| if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 })
        .collect())
}

fn cmd_power(a: PowerArgs, out: &mut dyn Write) -> CliResult<()> {
    check_alpha(a.alpha)?;
    check_positive("--reps", a.reps)?;
    check_positive("--null-reps", a.null_reps)?;
    if a.n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {}", a.n)));
    }
    let grid = parse_grid(&a.grid)?;
    let family: MixtureFamily = a.family.into();
    let cfg = SimConfig::new(family, a.n, a.reps, a.seed);
    let curve = power_curve(&cfg, &grid, a.alpha, a.null_reps)?;
    let config = json!({
        "command": "power",
        "family": a.family,
        "n": a.n,
        "grid": a.grid,
        "alpha": a.alpha,
        "reps": a.reps,
        "null_reps": a.null_reps,
        "seed": a.seed,
        "format": a.format,
        "optimizer": optimizer_json(&cfg.optimizer),
    });
    match a.format {
        Format::Csv => {
            let mut body = csv_header_line(&json!({"config": config, "critical_value": curve.critical_value}));
            body.push_str("grid,power\n");
            for (g, p) in curve.grid.iter().zip(&curve.power) {
                body.push_str(&format!("{},{}\n", json::format_f64(*g), json::format_f64(*p)));
            }
            out.write_all(body.as_bytes())?;
            Ok(())
        }
        Format::Json => emit(
            out,
            &json!({
                "config": config,
                "critical_value": curve.critical_value,
                "grid": curve.grid,
                "power": curve.power,
                "standard_errors": curve.standard_errors(),
            }),
        ),
    }
}

fn cmd_scan(a: ScanArgs, out: &mut dyn Write) -> CliResult<()> {
    check_alpha(a.alpha)?;
    check_positive("--null-reps", a.null_reps)?;
    check_positive("--step", a.step)?;
    if a.window < 4 {
        return Err(CliError::Usage(format!("--window must be at least 4, got {}", a.window)));
    }
    let min_separation = a.min_separation.unwrap_or((a.window / 2).max(1));
    check_positive("--min-separation", min_separation)?;
    let signal = read_values(&a.input)?;
    if a.window > signal.len() {
        return Err(CliError::Usage(format!(
            "--window {} exceeds the signal length {}",
            a.window,
            signal.len()
        )));
    }
    let family: MixtureFamily = a.family.into();
    let cfg = SimConfig::new(family, a.window, a.null_reps, a.seed);
    let result = window_scan(&signal, a.window, a.step, family, a.alpha, &cfg)?;
    let changepoints = detect_changepoints(&result, min_separation)?;
    let config = json!({
        "command": "scan",
        "family": a.family,
        "input": a.input.display().to_string(),
        "window": a.window,
        "step": a.step,
        "alpha": a.alpha,
        "null_reps": a.null_reps,
        "min_separation": min_separation,
        "seed": a.seed,
        "csv": a.csv.as_ref().map(|p| p.display().to_string()),
        "format": a.format,
        "optimizer": optimizer_json(&cfg.optimizer),
    });
    let mut csv = csv_header_line(&config).into_bytes();
    result.write_csv(&mut csv)?;
    if let Some(path) = &a.csv {
        write_file(path, "--csv", &csv)?;
    }
    match a.format {
        Format::Csv if a.csv.is_none() => {
            out.write_all(&csv)?;
            Ok(())
        }
        _ => emit(
            out,
            &json!({
                "config": config,
                "critical_value": result.critical_value,
                "windows": result.positions(),
                "missing_windows": result.missing.len(),
                "exceedances": result.detections.len(),
                "detections": changepoints,
            }),
        ),
    }
}

fn cmd_limits(a: LimitsArgs, out: &mut dyn Write) -> CliResult<()> {
    let family: MixtureFamily = a.family.into();
    let report = moment_report(family)?;
    let law = limit_law_from(&report)?;
    let (theta, eta) = canonical_null(family);
    let info = fisher_information(family, theta, eta)?;
    let mut quantiles = serde_json::Map::new();
    for p in [0.9, 0.95, 0.99] {
        quantiles.insert(format!("{p}"), json!(limit_quantile(&law, p)?));
    }
    let c_squared = match law {
        LimitLaw::DegenerateAtZero => Value::Null,
        LimitLaw::ScaledHalfChiSquare { c_squared } => json!(c_squared),
    };
    emit(
        out,
        &json!({
            "config": {
                "command": "limits",
                "family": a.family,
                "canonical_theta": theta,
                "canonical_eta": eta,
                "quadrature_order": plc_core::quadrature::GaussHermite::DEFAULT_ORDER,
            },
            "kind": law.kind(),
            "c_squared": c_squared,
            "sigma_squared": report.sigma_squared,
            "c04": report.c04_limit,
            "fisher_info": info,
            "xi1_xi2": report.xi1_xi2_expectation,
            "quantiles": quantiles,
        }),
    )
}

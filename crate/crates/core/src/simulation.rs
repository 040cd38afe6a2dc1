//! Seeded Monte Carlo engine for null distributions, critical values and power.
//!
//! Replication `i` of block `b` draws from a ChaCha8 stream keyed by
//! `(seed, b, attempt)` with stream id `i`, so results do not depend on how
//! replications are scheduled across threads. Normal variates come from
//! `rand_distr::StandardNormal` (ziggurat).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlcError, Result};
use crate::models::{MixtureFamily, Sample};
use crate::plc::{plc_statistic, OptimizerOptions};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PLC_THREADS";

/// Attempts per replication before a degenerate draw becomes an error.
const MAX_ATTEMPTS: u64 = 16;

/// Largest tolerated fraction of replications that needed a retry.
pub const MAX_RETRY_FRACTION: f64 = 0.01;

pub const DEFAULT_PERCENTILES: [f64; 3] = [5.0, 50.0, 95.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub family: MixtureFamily,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub optimizer: OptimizerOptions,
}

impl SimConfig {
    pub fn new(family: MixtureFamily, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            reps,
            seed,
            optimizer: OptimizerOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(PlcError::InsufficientSample { min: 2, got: self.n });
        }
        if self.reps == 0 {
            return Err(PlcError::InvalidArgument("reps must be at least 1".into()));
        }
        self.optimizer.validate()
    }
}

/// Canonical null parameters `(theta, eta)`: standard normal data.
pub fn canonical_null(family: MixtureFamily) -> (f64, f64) {
    match family {
        MixtureFamily::MeanMixture => (0.0, 1.0),
        MixtureFamily::VarianceMixture => (1.0, 0.0),
    }
}

/// Random stream for replication `index` of `block`.
pub fn replication_rng(seed: u64, block: u64, attempt: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&block.to_le_bytes());
    key[16..24].copy_from_slice(&attempt.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Runs `f` on a pool sized by `PLC_THREADS` when set, else rayon's default.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| PlcError::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PlcError::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `n` draws from `0.5 f(.|theta1, eta) + 0.5 f(.|theta2, eta)`.
pub fn sample_mixture<R: Rng + ?Sized>(
    family: MixtureFamily,
    theta1: f64,
    theta2: f64,
    eta: f64,
    n: usize,
    rng: &mut R,
) -> Result<Sample> {
    family.check_params(theta1, eta)?;
    family.check_params(theta2, eta)?;
    let (l1, s1) = family.location_scale(theta1, eta);
    let (l2, s2) = family.location_scale(theta2, eta);
    let values = (0..n)
        .map(|_| {
            let (l, s) = if rng.random::<bool>() { (l1, s1) } else { (l2, s2) };
            let e: f64 = rng.sample(StandardNormal);
            l + s * e
        })
        .collect();
    Sample::new(values)
}

/// Raw per-replication statistics, in replication order.
#[derive(Debug, Clone, PartialEq)]
pub struct Replications {
    pub lambdas: Vec<f64>,
    /// Replications whose first draw was degenerate and had to be redrawn.
    pub retries: usize,
}

/// Replicates `draw -> plc_statistic` over `reps` independent streams of `block`.
pub(crate) fn replicate<D>(
    family: MixtureFamily,
    n: usize,
    reps: usize,
    seed: u64,
    block: u64,
    opts: &OptimizerOptions,
    draw: D,
) -> Result<Replications>
where
    D: Fn(&mut ChaCha8Rng, usize) -> Result<Sample> + Sync,
{
    let one = |i: usize| -> Result<(f64, bool)> {
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = replication_rng(seed, block, attempt, i as u64);
            let sample = draw(&mut rng, n)?;
            match plc_statistic(&sample, family, opts) {
                Ok(out) => return Ok((out.lambda, attempt > 0)),
                Err(PlcError::DegenerateSample) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(PlcError::SimulationIntegrity { retries: MAX_ATTEMPTS as usize, reps: 1 })
    };
    let results: Vec<Result<(f64, bool)>> = with_pool(|| (0..reps).into_par_iter().map(one).collect())?;
    let mut lambdas = Vec::with_capacity(reps);
    let mut retries = 0;
    for r in results {
        let (lambda, retried) = r?;
        lambdas.push(lambda);
        retries += usize::from(retried);
    }
    if retries as f64 > MAX_RETRY_FRACTION * reps as f64 {
        return Err(PlcError::SimulationIntegrity { retries, reps });
    }
    Ok(Replications { lambdas, retries })
}

/// Rejection rule: the statistic must exceed the critical value and must not
/// count as an exact zero, so rounding-level positives never reject when the
/// critical value sits on the atom at zero.
pub fn exceeds(lambda: f64, critical: f64, zero_threshold: f64) -> bool {
    lambda >= zero_threshold && lambda > critical
}

/// Null replications from `f(.|theta0, eta0)`.
pub fn run_null(cfg: &SimConfig, theta0: f64, eta0: f64) -> Result<Replications> {
    cfg.validate()?;
    cfg.family.check_params(theta0, eta0)?;
    replicate(cfg.family, cfg.n, cfg.reps, cfg.seed, 0, &cfg.optimizer, |rng, n| {
        sample_mixture(cfg.family, theta0, theta0, eta0, n, rng)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentile {
    /// In percent, `0..=100`.
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSimSummary {
    /// Sorted ascending.
    pub lambdas: Vec<f64>,
    pub percentiles: Vec<Percentile>,
    pub mean: f64,
    pub zero_fraction: f64,
    pub c_squared_hat: f64,
    pub retries: usize,
}

impl NullSimSummary {
    pub fn from_replications(run: &Replications, zero_threshold: f64, percentiles: &[f64]) -> Result<Self> {
        if run.lambdas.is_empty() {
            return Err(PlcError::InvalidArgument("no replications to summarize".into()));
        }
        let mut lambdas = run.lambdas.clone();
        lambdas.sort_by(f64::total_cmp);
        let reps = lambdas.len() as f64;
        let mean = lambdas.iter().sum::<f64>() / reps;
        let zeros = lambdas.iter().filter(|&&l| l < zero_threshold).count();
        let percentiles = percentiles
            .iter()
            .map(|&p| percentile(&lambdas, p).map(|value| Percentile { p, value }))
            .collect::<Result<_>>()?;
        Ok(Self {
            percentiles,
            mean,
            zero_fraction: zeros as f64 / reps,
            c_squared_hat: 2.0 * mean,
            retries: run.retries,
            lambdas,
        })
    }

    /// Type-7 percentile of the simulated statistics.
    pub fn percentile(&self, p: f64) -> Result<f64> {
        percentile(&self.lambdas, p)
    }
}

/// Type-7 percentile (linear interpolation between closest ranks) of sorted
/// data, `p` in percent.
pub fn percentile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(PlcError::InvalidArgument("percentile of empty data".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(PlcError::InvalidArgument(format!("percentile must be in [0, 100], got {p}")));
    }
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Null simulation with the default percentiles (5, 50, 95).
pub fn simulate_null(cfg: &SimConfig, theta0: f64, eta0: f64) -> Result<NullSimSummary> {
    let run = run_null(cfg, theta0, eta0)?;
    NullSimSummary::from_replications(&run, cfg.optimizer.zero_threshold, &DEFAULT_PERCENTILES)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(PlcError::InvalidArgument(format!("alpha must be in (0, 1), got {alpha}")))
    }
}

/// Empirical `1 - alpha` percentile of null statistics simulated from standard
/// normal data.
pub fn critical_value(cfg: &SimConfig, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (theta0, eta0) = canonical_null(cfg.family);
    let summary = simulate_null(cfg, theta0, eta0)?;
    summary.percentile(100.0 * (1.0 - alpha))
}

/// Moment estimate `2 * mean` of the limit constant.
pub fn estimate_c_squared(summary: &NullSimSummary) -> f64 {
    summary.c_squared_hat
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub grid: Vec<f64>,
    pub power: Vec<f64>,
    pub alpha: f64,
    pub critical_value: f64,
    pub n: usize,
    pub reps: usize,
}

impl PowerCurve {
    /// Binomial standard error of each power estimate.
    pub fn standard_errors(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(|&p| (p * (1.0 - p) / self.reps as f64).sqrt())
            .collect()
    }
}

/// Component parameters for grid value `g`: means `-g, +g` with unit variance,
/// or variances `1` and `g^4` about a zero mean (the standard deviations then
/// differ by the factor `g^2`, so `sqrt` of their ratio is `g`).
pub fn alternative_parameters(family: MixtureFamily, g: f64) -> (f64, f64, f64) {
    match family {
        MixtureFamily::MeanMixture => (-g, g, 1.0),
        MixtureFamily::VarianceMixture => (1.0, g.powi(4), 0.0),
    }
}

/// Rejection rates at level `alpha` along `grid`, `cfg.reps` replications per
/// point; the critical value comes from `null_reps` null replications.
pub fn power_curve(cfg: &SimConfig, grid: &[f64], alpha: f64, null_reps: usize) -> Result<PowerCurve> {
    cfg.validate()?;
    check_alpha(alpha)?;
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PlcError::InvalidArgument("grid must be non-empty and strictly increasing".into()));
    }
    let lowest = match cfg.family {
        MixtureFamily::MeanMixture => 0.0,
        MixtureFamily::VarianceMixture => 1.0,
    };
    if !(grid[0] >= lowest) || !grid.iter().all(|g| g.is_finite()) {
        return Err(PlcError::InvalidArgument(format!(
            "{} grid values must be finite and at least {lowest}",
            cfg.family
        )));
    }
    let null_cfg = SimConfig { reps: null_reps, ..*cfg };
    let critical = critical_value(&null_cfg, alpha)?;
    let mut power = Vec::with_capacity(grid.len());
    for (k, &g) in grid.iter().enumerate() {
        let (t1, t2, eta) = alternative_parameters(cfg.family, g);
        let run = replicate(cfg.family, cfg.n, cfg.reps, cfg.seed, 1 + k as u64, &cfg.optimizer, |rng, n| {
            sample_mixture(cfg.family, t1, t2, eta, n, rng)
        })?;
        let zero = cfg.optimizer.zero_threshold;
        let rejections = run.lambdas.iter().filter(|&&l| exceeds(l, critical, zero)).count();
        power.push(rejections as f64 / cfg.reps as f64);
    }
    Ok(PowerCurve {
        grid: grid.to_vec(),
        power,
        alpha,
        critical_value: critical,
        n: cfg.n,
        reps: cfg.reps,
    })
}

/// Writes `rep,lambda` rows in replication order.
pub fn write_raw_csv<W: std::io::Write>(lambdas: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "rep,lambda")?;
    for (i, l) in lambdas.iter().enumerate() {
        writeln!(out, "{i},{l:e}")?;
    }
    Ok(())
}

/// `sup |F_n - F|` for sorted data against a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_survival(lambda))
}

/// `P(K > x)` for the Kolmogorov distribution.
fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

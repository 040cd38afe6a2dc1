//! Running-window scan of a 1-D signal: the statistic is computed on each
//! window and windows straddling a jump in level or amplitude light up.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PlcError, Result};
use crate::models::{MixtureFamily, Sample};
use crate::plc::plc_statistic;
use crate::simulation::{critical_value, exceeds, with_pool, SimConfig};

pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_STEP: usize = 1;

/// Piecewise-constant mean plus Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub length: usize,
    /// Indices where a new level starts, strictly increasing in `(0, length)`.
    pub breakpoints: Vec<usize>,
    /// One level per segment: `breakpoints.len() + 1` values.
    pub levels: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.levels.len() != self.breakpoints.len() + 1 {
            return Err(PlcError::InvalidArgument(format!(
                "{} breakpoints need {} levels, got {}",
                self.breakpoints.len(),
                self.breakpoints.len() + 1,
                self.levels.len()
            )));
        }
        let inside = self.breakpoints.iter().all(|&b| b > 0 && b < self.length);
        let increasing = self.breakpoints.windows(2).all(|w| w[0] < w[1]);
        if !inside || !increasing {
            return Err(PlcError::InvalidArgument(
                "breakpoints must be strictly increasing and inside (0, length)".into(),
            ));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(PlcError::InvalidArgument(format!("noise_sd must be positive, got {}", self.noise_sd)));
        }
        if self.levels.iter().any(|l| !l.is_finite()) {
            return Err(PlcError::InvalidArgument("levels must be finite".into()));
        }
        Ok(())
    }

    pub fn level_at(&self, t: usize) -> f64 {
        self.levels[self.breakpoints.partition_point(|&b| b <= t)]
    }
}

/// `y_t = level(t) + noise_sd * e_t` with `e_t` iid standard normal.
pub fn generate_jump_signal(spec: &SignalSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.length)
        .map(|t| spec.level_at(t) + spec.noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScanResult {
    /// Centers of the windows that produced a statistic.
    pub centers: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// Centers of zero-variance windows, which carry no statistic.
    pub missing: Vec<usize>,
    pub window: usize,
    pub step: usize,
    pub family: MixtureFamily,
    pub alpha: f64,
    pub critical_value: f64,
    /// Centers whose statistic exceeds the critical value.
    pub detections: Vec<usize>,
    pub zero_threshold: f64,
}

impl WindowScanResult {
    pub fn positions(&self) -> usize {
        self.centers.len() + self.missing.len()
    }

    /// Writes `center,lambda,exceeds` rows for the non-missing windows.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "center,lambda,exceeds")?;
        for (c, l) in self.centers.iter().zip(&self.lambdas) {
            writeln!(out, "{c},{l:e},{}", u8::from(exceeds(*l, self.critical_value, self.zero_threshold)))?;
        }
        Ok(())
    }
}

type CacheKey = (MixtureFamily, usize, u64, usize, u64, u64);

fn critical_cache() -> &'static Mutex<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Null critical value at sample size `window`, simulated once per process for
/// each `(family, window, alpha)` and simulation setting.
pub fn window_critical_value(family: MixtureFamily, window: usize, alpha: f64, cfg: &SimConfig) -> Result<f64> {
    let opts_key = cfg.optimizer.start_seed ^ cfg.optimizer.n_starts as u64 ^ cfg.optimizer.zero_threshold.to_bits();
    let key = (family, window, alpha.to_bits(), cfg.reps, cfg.seed, opts_key);
    if let Some(&v) = critical_cache().lock().expect("cache poisoned").get(&key) {
        return Ok(v);
    }
    let sim = SimConfig {
        family,
        n: window,
        ..*cfg
    };
    let v = critical_value(&sim, alpha)?;
    critical_cache().lock().expect("cache poisoned").insert(key, v);
    Ok(v)
}

/// Statistic on every window `[start, start + window)` with `start` stepping by
/// `step`; a window's center is `start + window / 2`.
pub fn window_scan(
    signal: &[f64],
    window: usize,
    step: usize,
    family: MixtureFamily,
    alpha: f64,
    cfg: &SimConfig,
) -> Result<WindowScanResult> {
    if window < 4 {
        return Err(PlcError::InvalidArgument(format!("window must be at least 4, got {window}")));
    }
    if window > signal.len() {
        return Err(PlcError::InvalidArgument(format!(
            "window {window} exceeds signal length {}",
            signal.len()
        )));
    }
    if step == 0 {
        return Err(PlcError::InvalidArgument("step must be at least 1".into()));
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(PlcError::NonFiniteValue { index: i });
    }
    let critical = window_critical_value(family, window, alpha, cfg)?;
    let starts: Vec<usize> = (0..=signal.len() - window).step_by(step).collect();
    let opts = cfg.optimizer;
    let stats: Vec<Result<Option<f64>>> = with_pool(|| {
        starts
            .par_iter()
            .map(|&s| {
                let sample = Sample::from_slice(&signal[s..s + window])?;
                match plc_statistic(&sample, family, &opts) {
                    Ok(out) => Ok(Some(out.lambda)),
                    Err(PlcError::DegenerateSample) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect()
    })?;
    let mut result = WindowScanResult {
        centers: Vec::with_capacity(starts.len()),
        lambdas: Vec::with_capacity(starts.len()),
        missing: Vec::new(),
        window,
        step,
        family,
        alpha,
        critical_value: critical,
        detections: Vec::new(),
        zero_threshold: opts.zero_threshold,
    };
    for (&s, stat) in starts.iter().zip(stats) {
        let center = s + window / 2;
        match stat? {
            Some(l) => {
                result.centers.push(center);
                result.lambdas.push(l);
                if exceeds(l, critical, opts.zero_threshold) {
                    result.detections.push(center);
                }
            }
            None => result.missing.push(center),
        }
    }
    Ok(result)
}

/// Greedy peak picking over the exceedances: highest statistic first, then
/// dropping every exceedance closer than `min_separation` to a kept one.
/// Returned in increasing center order.
pub fn detect_changepoints(result: &WindowScanResult, min_separation: usize) -> Result<Vec<usize>> {
    if min_separation == 0 {
        return Err(PlcError::InvalidArgument("min_separation must be at least 1".into()));
    }
    let mut exceed: Vec<(usize, f64)> = result
        .centers
        .iter()
        .zip(&result.lambdas)
        .filter(|(_, &l)| exceeds(l, result.critical_value, result.zero_threshold))
        .map(|(&c, &l)| (c, l))
        .collect();
    exceed.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<usize> = Vec::new();
    for (c, _) in exceed {
        if kept.iter().all(|&k| k.abs_diff(c) >= min_separation) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    Ok(kept)
}

/// One value per line; blank lines are skipped and a non-numeric first line is
/// taken as a header.
pub fn parse_signal(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_line = false;
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if !seen_line => {}
            Err(_) => {
                return Err(PlcError::InvalidArgument(format!(
                    "line {}: cannot parse {field:?} as a number",
                    i + 1
                )))
            }
        }
        seen_line = true;
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(length: usize, breakpoints: Vec<usize>, levels: Vec<f64>, noise_sd: f64, seed: u64) -> SignalSpec {
        SignalSpec {
            length,
            breakpoints,
            levels,
            noise_sd,
            seed,
        }
    }

    #[test]
    fn nearly_noiseless_jump() {
        let y = generate_jump_signal(&spec(100, vec![50], vec![0.0, 3.0], 1e-6, 1)).unwrap();
        assert!(y[..50].iter().all(|v| v.abs() < 1e-4));
        assert!(y[50..].iter().all(|v| (v - 3.0).abs() < 1e-4));
    }

    #[test]
    fn pure_noise_has_the_noise_variance() {
        let y = generate_jump_signal(&spec(10_000, vec![], vec![2.0], 0.5, 4)).unwrap();
        let s = Sample::new(y).unwrap();
        assert!((s.variance_mle() / 0.25 - 1.0).abs() < 0.05);
    }

    #[test]
    fn signal_is_deterministic() {
        let sp = spec(500, vec![100, 300], vec![0.0, 1.0, -1.0], 1.0, 99);
        assert_eq!(generate_jump_signal(&sp).unwrap(), generate_jump_signal(&sp).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate_jump_signal(&spec(100, vec![50], vec![0.0], 1.0, 0)).is_err());
        assert!(generate_jump_signal(&spec(100, vec![60, 50], vec![0.0, 1.0, 2.0], 1.0, 0)).is_err());
        assert!(generate_jump_signal(&spec(100, vec![0], vec![0.0, 1.0], 1.0, 0)).is_err());
        assert!(generate_jump_signal(&spec(100, vec![], vec![0.0], 0.0, 0)).is_err());
    }

    fn scan_result(centers: Vec<usize>, lambdas: Vec<f64>, critical: f64) -> WindowScanResult {
        WindowScanResult {
            detections: centers
                .iter()
                .zip(&lambdas)
                .filter(|(_, &l)| l > critical)
                .map(|(&c, _)| c)
                .collect(),
            centers,
            lambdas,
            missing: vec![],
            window: 10,
            step: 1,
            family: MixtureFamily::VarianceMixture,
            alpha: 0.05,
            critical_value: critical,
            zero_threshold: 1e-8,
        }
    }

    #[test]
    fn peak_picking() {
        let r = scan_result((0..10).collect(), vec![0.0; 10], 1.0);
        assert!(detect_changepoints(&r, 5).unwrap().is_empty());
        let r = scan_result((0..10).collect(), vec![0.0, 0.5, 2.0, 3.0, 2.5, 0.1, 0.0, 0.0, 0.0, 0.0], 1.0);
        assert_eq!(detect_changepoints(&r, 5).unwrap(), vec![3]);
        let r = scan_result(
            (0..20).collect(),
            (0..20).map(|i| if i == 4 { 5.0 } else if i == 15 { 4.0 } else if i == 5 { 4.5 } else { 0.0 }).collect(),
            1.0,
        );
        assert_eq!(detect_changepoints(&r, 5).unwrap(), vec![4, 15]);
        assert!(detect_changepoints(&r, 0).is_err());
    }

    #[test]
    fn constant_signal_has_only_missing_windows() {
        let cfg = SimConfig::new(MixtureFamily::VarianceMixture, 10, 50, 1);
        let r = window_scan(&[1.5; 40], 10, 5, MixtureFamily::VarianceMixture, 0.05, &cfg).unwrap();
        assert!(r.centers.is_empty() && r.detections.is_empty());
        assert_eq!(r.missing.len(), 7);
        assert_eq!(r.positions(), 7);
    }

    #[test]
    fn scan_geometry_and_csv() {
        let cfg = SimConfig::new(MixtureFamily::VarianceMixture, 10, 50, 1);
        let y = generate_jump_signal(&spec(60, vec![30], vec![0.0, 0.0], 1.0, 3)).unwrap();
        let r = window_scan(&y, 10, 3, MixtureFamily::VarianceMixture, 0.05, &cfg).unwrap();
        assert_eq!(r.centers, (0..=50).step_by(3).map(|s| s + 5).collect::<Vec<_>>());
        assert_eq!(r.lambdas.len(), r.centers.len());
        assert!(r.detections.iter().all(|d| r.centers.contains(d)));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("center,lambda,exceeds\n"));
        assert_eq!(text.lines().count(), r.centers.len() + 1);
        assert!(window_scan(&y, 3, 1, MixtureFamily::VarianceMixture, 0.05, &cfg).is_err());
        assert!(window_scan(&y, 100, 1, MixtureFamily::VarianceMixture, 0.05, &cfg).is_err());
        assert!(window_scan(&y, 10, 0, MixtureFamily::VarianceMixture, 0.05, &cfg).is_err());
    }

    #[test]
    fn signal_parsing() {
        assert_eq!(parse_signal("value\n1.5\n-2\n\n3e-1\n").unwrap(), vec![1.5, -2.0, 0.3]);
        assert_eq!(parse_signal("1\n2\n").unwrap(), vec![1.0, 2.0]);
        let err = parse_signal("x\n1\nabc\n").unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }
}

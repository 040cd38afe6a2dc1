//! The projected likelihood contrast statistic.
//!
//! The nuisance parameter is fixed at its homogeneous MLE and the two-component
//! likelihood (weights 0.5/0.5) is maximized over the component parameters.
//! The statistic is `Lambda = 2 (max L(theta1, theta2, eta_hat) - L(theta_hat, theta_hat, eta_hat))`.
//!
//! The inner maximization is a multi-start fixed-weight EM followed by a
//! Nelder-Mead polish. All work happens on standardized data, so the
//! statistic is exactly invariant to location/scale changes up to rounding.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PlcError, Result};
use crate::models::{fit_null, MixtureFamily, NullFit, Sample};
use crate::optimize::{nelder_mead, SimplexOptions};

/// Effective component weight below which an EM step is declared collapsed.
pub const COLLAPSE_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub em_max_iter: usize,
    /// Stop EM when the log-likelihood gain of one step drops below this.
    pub em_tol: f64,
    /// Function-value tolerance of the simplex polish.
    pub polish_tol: f64,
    pub n_starts: usize,
    /// `Lambda` below this counts as an exact zero.
    pub zero_threshold: f64,
    /// Seed of the random start; fixed so that results are reproducible.
    pub start_seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            em_max_iter: 500,
            em_tol: 1e-10,
            polish_tol: 1e-10,
            n_starts: 5,
            zero_threshold: 1e-8,
            start_seed: 0x504c_4353_7461_7274,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PlcError::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("em_tol", self.em_tol)?;
        positive("polish_tol", self.polish_tol)?;
        positive("zero_threshold", self.zero_threshold)?;
        if self.n_starts == 0 {
            return Err(PlcError::InvalidArgument("n_starts must be at least 1".into()));
        }
        if self.em_max_iter == 0 {
            return Err(PlcError::InvalidArgument("em_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Maximizer of the plugged-nuisance mixture likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltFit {
    pub theta1_hat: f64,
    pub theta2_hat: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlcOutcome {
    pub lambda: f64,
    pub is_zero: bool,
    pub alt: AltFit,
    pub null: NullFit,
}

/// Data prepared for the EM / simplex search.
///
/// For the mean family `y` holds the observations and `eta` the common
/// standard deviation; for the variance family `y` holds squared residuals
/// about the common mean. Log-likelihoods are kept up to an additive constant
/// shared by every parameter value, so differences are exact.
struct WorkData {
    family: MixtureFamily,
    y: Vec<f64>,
    y_sum: f64,
    eta: f64,
}

/// Per-parameter constants of the component log-densities (up to a shared constant).
#[derive(Clone, Copy)]
enum Coefs {
    /// `l_k = -s (y - t_k)^2`
    Mean { s: f64, t1: f64, t2: f64 },
    /// `l1 - l2 = a + b y`, `l2 = c + d y`
    Variance { a: f64, b: f64, c: f64, d: f64 },
}

impl Coefs {
    /// Log-odds `l1 - l2` and `l2` for one observation.
    #[inline]
    fn terms(&self, y: f64) -> (f64, f64) {
        match *self {
            Coefs::Mean { s, t1, t2 } => {
                let r2 = y - t2;
                (s * (t1 - t2) * (2.0 * y - t1 - t2), -s * r2 * r2)
            }
            Coefs::Variance { a, b, c, d } => (a + b * y, c + d * y),
        }
    }
}

struct EmPass {
    loglik: f64,
    weight1: f64,
    weighted_y1: f64,
}

impl WorkData {
    fn new(family: MixtureFamily, y: Vec<f64>, eta: f64) -> Self {
        let y_sum = y.iter().sum();
        Self { family, y, y_sum, eta }
    }

    fn raw(sample: &Sample, family: MixtureFamily, eta: f64) -> Self {
        let y = match family {
            MixtureFamily::MeanMixture => sample.values().to_vec(),
            MixtureFamily::VarianceMixture => sample.values().iter().map(|z| (z - eta) * (z - eta)).collect(),
        };
        Self::new(family, y, eta)
    }

    /// Standardized coordinates: the null point becomes `(0, 0)` for the
    /// mean family and `(1, 1)` for the variance family.
    fn standardized(sample: &Sample, family: MixtureFamily, null: &NullFit) -> Self {
        let y = match family {
            MixtureFamily::MeanMixture => sample
                .values()
                .iter()
                .map(|z| (z - null.theta_hat) / null.eta_hat)
                .collect(),
            MixtureFamily::VarianceMixture => {
                let sd = null.theta_hat.sqrt();
                sample
                    .values()
                    .iter()
                    .map(|z| {
                        let u = (z - null.eta_hat) / sd;
                        u * u
                    })
                    .collect()
            }
        };
        Self::new(family, y, 1.0)
    }

    fn len(&self) -> f64 {
        self.y.len() as f64
    }

    #[inline]
    fn coefficients(&self, t1: f64, t2: f64) -> Coefs {
        match self.family {
            MixtureFamily::MeanMixture => Coefs::Mean {
                s: 1.0 / (2.0 * self.eta * self.eta),
                t1,
                t2,
            },
            MixtureFamily::VarianceMixture => {
                let (l1, l2) = (t1.ln(), t2.ln());
                Coefs::Variance {
                    a: -0.5 * (l1 - l2),
                    b: -0.5 * (1.0 / t1 - 1.0 / t2),
                    c: -0.5 * l2,
                    d: -0.5 / t2,
                }
            }
        }
    }

    /// One sweep: log-likelihood at `(t1, t2)` and the E-step sufficient statistics.
    fn pass(&self, t1: f64, t2: f64) -> EmPass {
        let coefs = self.coefficients(t1, t2);
        let mut loglik = 0.0;
        let mut weight1 = 0.0;
        let mut weighted_y1 = 0.0;
        for &y in &self.y {
            let (diff, l2) = coefs.terms(y);
            let ex = (-diff.abs()).exp();
            let w1 = if diff >= 0.0 { 1.0 / (1.0 + ex) } else { ex / (1.0 + ex) };
            loglik += l2 + diff.max(0.0) + ex.ln_1p() - LN_2;
            weight1 += w1;
            weighted_y1 += w1 * y;
        }
        EmPass {
            loglik,
            weight1,
            weighted_y1,
        }
    }

    fn objective(&self, t1: f64, t2: f64) -> f64 {
        let coefs = self.coefficients(t1, t2);
        self.y
            .iter()
            .map(|&y| {
                let (diff, l2) = coefs.terms(y);
                l2 + diff.max(0.0) + (-diff.abs()).exp().ln_1p() - LN_2
            })
            .sum()
    }

    /// M-step from the E-step statistics: weighted means of `y` per component.
    fn m_step(&self, pass: &EmPass) -> Result<(f64, f64)> {
        let weight2 = self.len() - pass.weight1;
        let min = pass.weight1.min(weight2);
        if !(min >= COLLAPSE_WEIGHT) {
            return Err(PlcError::ComponentCollapse { weight: min });
        }
        let t1 = pass.weighted_y1 / pass.weight1;
        let t2 = (self.y_sum - pass.weighted_y1) / weight2;
        if self.family == MixtureFamily::VarianceMixture && !(t1 > 0.0 && t2 > 0.0) {
            return Err(PlcError::ComponentCollapse { weight: 0.0 });
        }
        Ok((t1, t2))
    }
}

/// One fixed-weight EM update of `(theta1, theta2)` with the nuisance held at `eta_hat`.
///
/// The mean family re-estimates each component mean as a responsibility-weighted
/// mean; the variance family as a weighted mean square deviation from `eta_hat`.
pub fn em_step(
    sample: &Sample,
    family: MixtureFamily,
    theta1: f64,
    theta2: f64,
    eta_hat: f64,
) -> Result<(f64, f64)> {
    family.check_params(theta1, eta_hat)?;
    family.check_params(theta2, eta_hat)?;
    let work = WorkData::raw(sample, family, eta_hat);
    let pass = work.pass(theta1, theta2);
    work.m_step(&pass)
}

struct StartResult {
    t1: f64,
    t2: f64,
    loglik: f64,
    iterations: usize,
    converged: bool,
}

/// Runs fixed-weight EM from `(t1, t2)` until the log-likelihood gain of a
/// cycle drops below `em_tol`.
///
/// Each cycle takes two plain EM steps and then tries the squared
/// extrapolation of Varadhan and Roland (SqS3 step length), keeping it only if
/// it does not lower the likelihood, so the sequence stays monotone.
fn run_em(work: &WorkData, mut t1: f64, mut t2: f64, opts: &OptimizerOptions) -> Result<StartResult> {
    let mut passes = 0;
    let mut current = work.pass(t1, t2);
    passes += 1;
    loop {
        if passes >= opts.em_max_iter {
            return Ok(StartResult {
                t1,
                t2,
                loglik: current.loglik,
                iterations: passes,
                converged: false,
            });
        }
        let (a1, a2) = work.m_step(&current)?;
        let first = work.pass(a1, a2);
        let (b1, b2) = work.m_step(&first)?;
        let second = work.pass(b1, b2);
        passes += 2;

        let (r1, r2) = (a1 - t1, a2 - t2);
        let (v1, v2) = (b1 - 2.0 * a1 + t1, b2 - 2.0 * a2 + t2);
        let rn = r1.hypot(r2);
        let vn = v1.hypot(v2);
        let mut next = ((b1, b2), second);
        if vn > 0.0 && rn > 0.0 {
            let alpha = (-rn / vn).min(-1.0);
            let e1 = t1 - 2.0 * alpha * r1 + alpha * alpha * v1;
            let e2 = t2 - 2.0 * alpha * r2 + alpha * alpha * v2;
            let admissible = e1.is_finite()
                && e2.is_finite()
                && (work.family == MixtureFamily::MeanMixture || (e1 > 0.0 && e2 > 0.0));
            if admissible && alpha < -1.0 {
                let extrapolated = work.pass(e1, e2);
                passes += 1;
                if extrapolated.loglik >= next.1.loglik {
                    next = ((e1, e2), extrapolated);
                }
            }
        }
        let gain = next.1.loglik - current.loglik;
        ((t1, t2), current) = next;
        if gain < opts.em_tol {
            return Ok(StartResult {
                t1,
                t2,
                loglik: current.loglik,
                iterations: passes,
                converged: true,
            });
        }
    }
}

/// Simplex polish of an EM endpoint; the variance family is searched in log scale.
fn polish(work: &WorkData, start: &StartResult, opts: &OptimizerOptions) -> StartResult {
    let simplex = SimplexOptions {
        f_tol: opts.polish_tol,
        x_tol: 1e-7,
        max_evaluations: 1500,
    };
    let res = match work.family {
        MixtureFamily::MeanMixture => nelder_mead(
            |p| -work.objective(p[0], p[1]),
            &[start.t1, start.t2],
            &[0.05, -0.05],
            simplex,
        ),
        MixtureFamily::VarianceMixture => nelder_mead(
            |p| -work.objective(p[0].exp(), p[1].exp()),
            &[start.t1.ln(), start.t2.ln()],
            &[0.05, -0.05],
            simplex,
        ),
    };
    let polished = -res.fx;
    if !(polished > start.loglik) {
        return StartResult {
            iterations: start.iterations + res.iterations,
            converged: start.converged || res.converged,
            ..*start
        };
    }
    let (t1, t2) = match work.family {
        MixtureFamily::MeanMixture => (res.x[0], res.x[1]),
        MixtureFamily::VarianceMixture => (res.x[0].exp(), res.x[1].exp()),
    };
    StartResult {
        t1,
        t2,
        loglik: polished,
        iterations: start.iterations + res.iterations,
        converged: res.converged,
    }
}

/// Starting points in standardized coordinates.
fn start_points(work: &WorkData, opts: &OptimizerOptions) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.start_seed);
    let mut starts = Vec::with_capacity(opts.n_starts);
    for k in 0..opts.n_starts {
        let p = match (work.family, k) {
            (MixtureFamily::MeanMixture, 0) => (-0.5, 0.5),
            (MixtureFamily::MeanMixture, 1) => half_split_means(&work.y),
            (_, 2) => coarse_grid_start(work),
            (MixtureFamily::MeanMixture, 3) => (-1.2, 1.2),
            (MixtureFamily::MeanMixture, _) => (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            (MixtureFamily::VarianceMixture, 0) => ((-0.5_f64).exp(), 0.5_f64.exp()),
            (MixtureFamily::VarianceMixture, 1) => (0.5, 2.0),
            (MixtureFamily::VarianceMixture, 3) => ((-1.2_f64).exp(), 1.2_f64.exp()),
            (MixtureFamily::VarianceMixture, _) => {
                (rng.random_range(-1.0_f64..1.0).exp(), rng.random_range(-1.0_f64..1.0).exp())
            }
        };
        starts.push(p);
    }
    starts
}

/// Best node of a coarse grid over the upper triangle `t1 <= t2`.
///
/// Small variance-family samples often have their global maximum at a narrow
/// component sitting on a few points close to the common mean; local starts
/// near the null point miss it.
fn coarse_grid_start(work: &WorkData) -> (f64, f64) {
    let nodes: Vec<f64> = match work.family {
        MixtureFamily::MeanMixture => (0..=20).map(|i| -4.0 + 0.4 * i as f64).collect(),
        MixtureFamily::VarianceMixture => (0..=24).map(|i| (-9.0 + 0.5 * i as f64).exp()).collect(),
    };
    let mut best = (f64::NEG_INFINITY, nodes[0], nodes[1]);
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            let v = work.objective(a, b);
            if v > best.0 {
                best = (v, a, b);
            }
        }
    }
    (best.1, best.2)
}

/// Means of the lower and upper halves of the data: a split that follows the
/// sample's skewness.
fn half_split_means(y: &[f64]) -> (f64, f64) {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let half = sorted.len() / 2;
    let lo = sorted[..half].iter().sum::<f64>() / half as f64;
    let hi = sorted[sorted.len() - half..].iter().sum::<f64>() / half as f64;
    if lo < hi {
        (lo, hi)
    } else {
        (-0.5, 0.5)
    }
}

fn same_point(a: &StartResult, b: &StartResult) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-7 * (1.0 + x.abs());
    (close(a.t1, b.t1) && close(a.t2, b.t2)) || (close(a.t1, b.t2) && close(a.t2, b.t1))
}

/// Gain of the alternative over the null in log-likelihood units, with the
/// maximizer in original units.
struct Search {
    gain: f64,
    theta1: f64,
    theta2: f64,
    iterations: usize,
    converged: bool,
}

fn search(sample: &Sample, family: MixtureFamily, null: &NullFit, opts: &OptimizerOptions) -> Result<Search> {
    opts.validate()?;
    let work = WorkData::standardized(sample, family, null);
    let null_point = match family {
        MixtureFamily::MeanMixture => 0.0,
        MixtureFamily::VarianceMixture => 1.0,
    };
    let null_loglik = work.objective(null_point, null_point);

    let mut endpoints: Vec<StartResult> = Vec::with_capacity(opts.n_starts);
    let mut best: Option<StartResult> = None;
    for (s1, s2) in start_points(&work, opts) {
        let Ok(em) = run_em(&work, s1, s2, opts) else {
            continue;
        };
        if endpoints.iter().any(|e| same_point(e, &em)) {
            continue;
        }
        let polished = polish(&work, &em, opts);
        endpoints.push(em);
        if best.as_ref().is_none_or(|b| polished.loglik > b.loglik) {
            best = Some(polished);
        }
    }

    let to_original = |t: f64| match family {
        MixtureFamily::MeanMixture => null.theta_hat + null.eta_hat * t,
        MixtureFamily::VarianceMixture => null.theta_hat * t,
    };
    let out = match best {
        Some(b) if b.loglik >= null_loglik => {
            let (lo, hi) = if b.t1 <= b.t2 { (b.t1, b.t2) } else { (b.t2, b.t1) };
            Search {
                gain: b.loglik - null_loglik,
                theta1: to_original(lo),
                theta2: to_original(hi),
                iterations: b.iterations,
                converged: b.converged,
            }
        }
        other => Search {
            gain: 0.0,
            theta1: null.theta_hat,
            theta2: null.theta_hat,
            iterations: other.as_ref().map_or(0, |b| b.iterations),
            converged: other.is_some(),
        },
    };
    Ok(out)
}

/// Maximizes the mixture likelihood over `(theta1, theta2)` with the nuisance
/// fixed at `null.eta_hat`. Never returns a value below the null fit: if
/// every start collapses the null point comes back with `converged = false`.
pub fn fit_alternative(
    sample: &Sample,
    family: MixtureFamily,
    null: &NullFit,
    opts: &OptimizerOptions,
) -> Result<AltFit> {
    let s = search(sample, family, null, opts)?;
    Ok(AltFit {
        theta1_hat: s.theta1,
        theta2_hat: s.theta2,
        loglik: null.loglik + s.gain,
        iterations: s.iterations,
        converged: s.converged,
    })
}

/// Computes the PLC statistic for `sample`.
pub fn plc_statistic(sample: &Sample, family: MixtureFamily, opts: &OptimizerOptions) -> Result<PlcOutcome> {
    let null = fit_null(sample, family)?;
    let s = search(sample, family, &null, opts)?;
    let lambda = (2.0 * s.gain).max(0.0);
    Ok(PlcOutcome {
        lambda,
        is_zero: lambda < opts.zero_threshold,
        alt: AltFit {
            theta1_hat: s.theta1,
            theta2_hat: s.theta2,
            loglik: null.loglik + s.gain,
            iterations: s.iterations,
            converged: s.converged,
        },
        null,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::mixture_log_likelihood;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn em_step_symmetric_start_is_a_fixed_point_in_the_mean_family() {
        let sample = Sample::from_slice(&[0.3, -1.2, 2.5, 0.9, 1.4]).unwrap();
        let (a, b) = em_step(&sample, MixtureFamily::MeanMixture, 0.1, 0.1, 1.0).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(a, sample.mean(), epsilon = 1e-14);
    }

    #[test]
    fn em_step_symmetric_start_updates_both_variances_alike() {
        let sample = Sample::from_slice(&[0.3, -1.2, 2.5, 0.9, 1.4]).unwrap();
        let (a, b) = em_step(&sample, MixtureFamily::VarianceMixture, 2.0, 2.0, 0.5).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);
        let msd = sample.values().iter().map(|z| (z - 0.5) * (z - 0.5)).sum::<f64>() / 5.0;
        assert_relative_eq!(a, msd, epsilon = 1e-14);
    }

    #[test]
    fn em_step_matches_two_point_hand_evaluation() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // z = -1: f1 = phi(0), f2 = phi(-2); z = 1: f1 = phi(2), f2 = phi(0).
        let w_a = phi(0.0) / (phi(0.0) + phi(2.0));
        let w_b = phi(2.0) / (phi(2.0) + phi(0.0));
        let t1 = (w_a * -1.0 + w_b * 1.0) / (w_a + w_b);
        let t2 = ((1.0 - w_a) * -1.0 + (1.0 - w_b) * 1.0) / (2.0 - w_a - w_b);
        let sample = Sample::from_slice(&[-1.0, 1.0]).unwrap();
        let (a, b) = em_step(&sample, MixtureFamily::MeanMixture, -1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(a, t1, epsilon = 1e-14);
        assert_relative_eq!(b, t2, epsilon = 1e-14);
    }

    #[test]
    fn em_step_never_decreases_the_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..1000 {
            let family = if k % 2 == 0 {
                MixtureFamily::MeanMixture
            } else {
                MixtureFamily::VarianceMixture
            };
            let n = rng.random_range(2..40);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let sample = Sample::new(values).unwrap();
            let (t1, t2, eta) = match family {
                MixtureFamily::MeanMixture => (
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(0.3..3.0),
                ),
                MixtureFamily::VarianceMixture => (
                    rng.random_range(0.1..6.0),
                    rng.random_range(0.1..6.0),
                    rng.random_range(-1.0..1.0),
                ),
            };
            let before = mixture_log_likelihood(&sample, family, t1, t2, eta).unwrap();
            let Ok((a, b)) = em_step(&sample, family, t1, t2, eta) else {
                continue;
            };
            let after = mixture_log_likelihood(&sample, family, a, b, eta).unwrap();
            assert!(after >= before - 1e-9 * before.abs().max(1.0), "case {k}: {before} -> {after}");
        }
    }

    #[test]
    fn em_step_rejects_out_of_domain_parameters() {
        let sample = Sample::from_slice(&[-1.0, 1.0]).unwrap();
        assert!(em_step(&sample, MixtureFamily::MeanMixture, 0.0, 1.0, 0.0).is_err());
        assert!(em_step(&sample, MixtureFamily::VarianceMixture, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn em_step_signals_collapse() {
        // Both points sit far on the side of component 2.
        let sample = Sample::from_slice(&[100.0, 101.0]).unwrap();
        let err = em_step(&sample, MixtureFamily::MeanMixture, -100.0, 100.0, 0.1).unwrap_err();
        assert!(matches!(err, PlcError::ComponentCollapse { .. }));
    }

    #[test]
    fn options_are_validated() {
        let bad = OptimizerOptions {
            n_starts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerOptions {
            em_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(OptimizerOptions::default().validate().is_ok());
    }

    #[test]
    fn fast_objective_matches_the_model_likelihood_up_to_a_constant() {
        let sample = Sample::from_slice(&[0.3, -1.2, 2.5, 0.9, 1.4, -0.4]).unwrap();
        for family in [MixtureFamily::MeanMixture, MixtureFamily::VarianceMixture] {
            let null = fit_null(&sample, family).unwrap();
            let work = WorkData::standardized(&sample, family, &null);
            let base = match family {
                MixtureFamily::MeanMixture => 0.0,
                MixtureFamily::VarianceMixture => 1.0,
            };
            let shift = null.loglik - work.objective(base, base);
            for (a, b) in [(0.7, 1.3), (1.9, 0.4), (1.0, 2.5)] {
                let (t1, t2, eta) = match family {
                    MixtureFamily::MeanMixture => (
                        null.theta_hat + null.eta_hat * a,
                        null.theta_hat + null.eta_hat * b,
                        null.eta_hat,
                    ),
                    MixtureFamily::VarianceMixture => (null.theta_hat * a, null.theta_hat * b, null.eta_hat),
                };
                let exact = mixture_log_likelihood(&sample, family, t1, t2, eta).unwrap();
                assert_relative_eq!(work.objective(a, b) + shift, exact, epsilon = 1e-11);
                assert_relative_eq!(work.pass(a, b).loglik + shift, exact, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn outcome_is_consistent_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..80)
            .map(|i| rng.random_range(-1.0..1.0) * if i % 2 == 0 { 0.5 } else { 3.0 })
            .collect();
        let sample = Sample::new(values).unwrap();
        let opts = OptimizerOptions::default();
        let out = plc_statistic(&sample, MixtureFamily::VarianceMixture, &opts).unwrap();
        assert!(out.lambda > 0.0);
        assert!(!out.is_zero);
        assert!(out.alt.theta1_hat <= out.alt.theta2_hat);
        assert_relative_eq!(out.lambda, 2.0 * (out.alt.loglik - out.null.loglik), epsilon = 1e-9);
        let again = plc_statistic(&sample, MixtureFamily::VarianceMixture, &opts).unwrap();
        assert_eq!(out.lambda.to_bits(), again.lambda.to_bits());
        assert_eq!(out, again);
    }

    #[test]
    fn alternative_never_falls_below_the_null() {
        let sample = Sample::from_slice(&[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        for family in [MixtureFamily::MeanMixture, MixtureFamily::VarianceMixture] {
            let null = fit_null(&sample, family).unwrap();
            let alt = fit_alternative(&sample, family, &null, &OptimizerOptions::default()).unwrap();
            assert!(alt.loglik >= null.loglik - 1e-9);
        }
    }
}

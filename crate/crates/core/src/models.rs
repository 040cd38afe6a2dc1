//! Two-component Gaussian mixture families with a shared nuisance parameter.
//!
//! Both families are written as `f(z | theta, eta)`:
//!
//! - [`MixtureFamily::MeanMixture`]: `theta` is the component mean, `eta > 0`
//!   the common standard deviation.
//! - [`MixtureFamily::VarianceMixture`]: `theta > 0` is the component
//!   *variance*, `eta` the common mean.
//!
//! The mixture always uses equal, known weights: `g = 0.5 f(.|theta1) + 0.5 f(.|theta2)`.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PlcError, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Which Gaussian family is in play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixtureFamily {
    /// Unknown component means, common unknown standard deviation.
    MeanMixture,
    /// Unknown component variances, common unknown mean.
    VarianceMixture,
}

impl MixtureFamily {
    pub fn name(self) -> &'static str {
        match self {
            MixtureFamily::MeanMixture => "mean",
            MixtureFamily::VarianceMixture => "variance",
        }
    }

    /// Checks that `(theta, eta)` lies in the family's parameter domain.
    pub fn check_params(self, theta: f64, eta: f64) -> Result<()> {
        let fail = |message: String| {
            Err(PlcError::ParameterDomain {
                family: self.name(),
                message,
            })
        };
        if !theta.is_finite() || !eta.is_finite() {
            return fail(format!("non-finite parameter (theta={theta}, eta={eta})"));
        }
        match self {
            MixtureFamily::MeanMixture if eta <= 0.0 => {
                fail(format!("standard deviation eta must be positive, got {eta}"))
            }
            MixtureFamily::VarianceMixture if theta <= 0.0 => {
                fail(format!("variance theta must be positive, got {theta}"))
            }
            _ => Ok(()),
        }
    }

    /// Location and scale of the component Gaussian `f(.|theta, eta)`.
    #[inline]
    pub(crate) fn location_scale(self, theta: f64, eta: f64) -> (f64, f64) {
        match self {
            MixtureFamily::MeanMixture => (theta, eta),
            MixtureFamily::VarianceMixture => (eta, theta.sqrt()),
        }
    }

    /// `log f(z | theta, eta)` without domain checks.
    #[inline]
    pub(crate) fn log_density_unchecked(self, z: f64, theta: f64, eta: f64) -> f64 {
        let (loc, scale) = self.location_scale(theta, eta);
        let u = (z - loc) / scale;
        -LN_SQRT_2PI - scale.ln() - 0.5 * u * u
    }

    pub fn log_density(self, z: f64, theta: f64, eta: f64) -> Result<f64> {
        self.check_params(theta, eta)?;
        Ok(self.log_density_unchecked(z, theta, eta))
    }
}

impl fmt::Display for MixtureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MixtureFamily {
    type Err = PlcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" | "mean-mixture" => Ok(MixtureFamily::MeanMixture),
            "variance" | "variance-mixture" => Ok(MixtureFamily::VarianceMixture),
            other => Err(PlcError::InvalidArgument(format!(
                "unknown family '{other}' (expected 'mean' or 'variance')"
            ))),
        }
    }
}

/// An iid sample `Z_1..Z_N` with `N >= 2` finite values.
///
/// Positive sample variance is checked by [`fit_null`], not here, so that
/// degenerate windows can still be represented and reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub const MIN_LEN: usize = 2;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < Self::MIN_LEN {
            return Err(PlcError::InsufficientSample {
                min: Self::MIN_LEN,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(PlcError::NonFiniteValue { index });
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Maximum-likelihood (divide-by-N) variance, two-pass.
    pub fn variance_mle(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    /// True when the spread is zero up to rounding of the values themselves.
    pub fn is_degenerate(&self) -> bool {
        let scale = self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let var = self.variance_mle();
        var <= 0.0 || var.sqrt() <= 1e-12 * scale
    }
}

/// Maximum-likelihood fit under the homogeneous model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullFit {
    pub theta_hat: f64,
    pub eta_hat: f64,
    pub loglik: f64,
}

/// Per-observation score ratios `xi_r(j)` for `r = 1..4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    xi: [Vec<f64>; 4],
}

impl ScoreVector {
    /// Values of `xi_r` over the sample, `r` in `1..=4`.
    pub fn xi(&self, r: usize) -> &[f64] {
        &self.xi[r - 1]
    }

    pub fn len(&self) -> usize {
        self.xi[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi[0].is_empty()
    }
}

/// Component density `f(z | theta, eta)`.
pub fn density(family: MixtureFamily, z: f64, theta: f64, eta: f64) -> Result<f64> {
    family.log_density(z, theta, eta).map(f64::exp)
}

/// `log(0.5 e^a + 0.5 e^b)` with the larger exponent factored out.
#[inline]
pub(crate) fn log_half_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi - LN_2 + (lo - hi).exp().ln_1p()
}

/// Full-mixture log-likelihood `sum_i log g(Z_i | theta1, theta2, eta)`.
pub fn mixture_log_likelihood(
    sample: &Sample,
    family: MixtureFamily,
    theta1: f64,
    theta2: f64,
    eta: f64,
) -> Result<f64> {
    family.check_params(theta1, eta)?;
    family.check_params(theta2, eta)?;
    let total: f64 = sample
        .values()
        .iter()
        .map(|&z| {
            log_half_sum_exp(
                family.log_density_unchecked(z, theta1, eta),
                family.log_density_unchecked(z, theta2, eta),
            )
        })
        .sum();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(PlcError::NumericOverflow)
    }
}

/// Homogeneous log-likelihood `sum_i log f(Z_i | theta, eta)`.
pub fn null_log_likelihood(
    sample: &Sample,
    family: MixtureFamily,
    theta: f64,
    eta: f64,
) -> Result<f64> {
    family.check_params(theta, eta)?;
    let total: f64 = sample
        .values()
        .iter()
        .map(|&z| family.log_density_unchecked(z, theta, eta))
        .sum();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(PlcError::NumericOverflow)
    }
}

/// Closed-form MLE under the homogeneous model.
pub fn fit_null(sample: &Sample, family: MixtureFamily) -> Result<NullFit> {
    if sample.is_degenerate() {
        return Err(PlcError::DegenerateSample);
    }
    let mean = sample.mean();
    let var = sample.variance_mle();
    let (theta_hat, eta_hat) = match family {
        MixtureFamily::MeanMixture => (mean, var.sqrt()),
        MixtureFamily::VarianceMixture => (var, mean),
    };
    let loglik = null_log_likelihood(sample, family, theta_hat, eta_hat)?;
    Ok(NullFit {
        theta_hat,
        eta_hat,
        loglik,
    })
}

/// Probabilists' Hermite polynomial `He_n(u)` by the three-term recurrence.
#[inline]
pub(crate) fn hermite_he(n: usize, u: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, u);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = u * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[inline]
pub(crate) fn score_ratio_unchecked(
    family: MixtureFamily,
    z: f64,
    r: usize,
    theta: f64,
    eta: f64,
) -> f64 {
    match family {
        MixtureFamily::MeanMixture => {
            let u = (z - theta) / eta;
            hermite_he(r, u) / eta.powi(r as i32)
        }
        // The variance-indexed Gaussian solves the heat equation
        // d/dv f = (1/2) d^2/dz^2 f, so D_v^r f / f = He_{2r}(u) / (2v)^r.
        MixtureFamily::VarianceMixture => {
            let u = (z - eta) / theta.sqrt();
            hermite_he(2 * r, u) / (2.0 * theta).powi(r as i32)
        }
    }
}

/// `D_theta^r f(z|theta, eta) / f(z|theta, eta)` in closed form, `r` in `1..=4`.
pub fn score_ratio(family: MixtureFamily, z: f64, r: usize, theta: f64, eta: f64) -> Result<f64> {
    if !(1..=4).contains(&r) {
        return Err(PlcError::InvalidArgument(format!(
            "score order r must be in 1..=4, got {r}"
        )));
    }
    family.check_params(theta, eta)?;
    Ok(score_ratio_unchecked(family, z, r, theta, eta))
}

/// Estimated scores `xi_r(j)` for every observation at `(theta, eta)`.
pub fn score_vector(
    sample: &Sample,
    family: MixtureFamily,
    theta: f64,
    eta: f64,
) -> Result<ScoreVector> {
    family.check_params(theta, eta)?;
    let xi = std::array::from_fn(|k| {
        sample
            .values()
            .iter()
            .map(|&z| score_ratio_unchecked(family, z, k + 1, theta, eta))
            .collect()
    });
    Ok(ScoreVector { xi })
}

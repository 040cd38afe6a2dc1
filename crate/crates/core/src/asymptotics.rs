//! Score-based diagnostics at the homogeneous fit and the limit law of the
//! statistic.
//!
//! Population expectations are taken under the null density by Gauss-Hermite
//! quadrature at a canonical point (`theta = 0, eta = 1` for the mean family,
//! `theta = 1, eta = 0` for the variance family); every quantity here is
//! invariant under location/scale changes, so the point does not matter.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{PlcError, Result};
use crate::models::{score_ratio_unchecked, score_vector, MixtureFamily, NullFit, Sample};
use crate::quadrature::GaussHermite;

/// Tolerance for the orthogonality assumption and for a vanishing `sigma^2`.
pub const ASSUMPTION_TOL: f64 = 1e-8;

/// Sample averages of the low-order mixed derivatives at the null fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CBarSet {
    pub c20: f64,
    pub c02: f64,
    pub c12: f64,
    pub c04: f64,
}

/// `c20 = mean(xi2 - xi1^2)`, `c02 = mean(xi2)`, `c12 = mean(xi3 - xi1 xi2)`,
/// `c04 = mean(psi)` with `psi = xi4 + xi1 xi3 / 2 - 3 xi2^2 + 3 xi1 xi2`.
pub fn c_bar_set(sample: &Sample, family: MixtureFamily, null: &NullFit) -> Result<CBarSet> {
    let s = score_vector(sample, family, null.theta_hat, null.eta_hat)?;
    let n = s.len() as f64;
    let (x1, x2, x3, x4) = (s.xi(1), s.xi(2), s.xi(3), s.xi(4));
    let mut sums = [0.0; 4];
    for j in 0..s.len() {
        sums[0] += x2[j] - x1[j] * x1[j];
        sums[1] += x2[j];
        sums[2] += x3[j] - x1[j] * x2[j];
        sums[3] += psi(x1[j], x2[j], x3[j], x4[j]);
    }
    Ok(CBarSet {
        c20: sums[0] / n,
        c02: sums[1] / n,
        c12: sums[2] / n,
        c04: sums[3] / n,
    })
}

#[inline]
fn psi(x1: f64, x2: f64, x3: f64, x4: f64) -> f64 {
    x4 + 0.5 * x1 * x3 - 3.0 * x2 * x2 + 3.0 * x1 * x2
}

fn canonical_point(family: MixtureFamily) -> (f64, f64) {
    match family {
        MixtureFamily::MeanMixture => (0.0, 1.0),
        MixtureFamily::VarianceMixture => (1.0, 0.0),
    }
}

/// Joint score `(d/dtheta, d/deta) log f` at `z`.
fn joint_score(family: MixtureFamily, z: f64, theta: f64, eta: f64) -> [f64; 2] {
    match family {
        MixtureFamily::MeanMixture => {
            let u = (z - theta) / eta;
            [u / eta, (u * u - 1.0) / eta]
        }
        MixtureFamily::VarianceMixture => {
            let sd = theta.sqrt();
            let u = (z - eta) / sd;
            [(u * u - 1.0) / (2.0 * theta), u / sd]
        }
    }
}

/// `E[h(Z)]` for `Z ~ f(. | theta, eta)`.
fn expect<F: Fn(f64) -> f64>(q: &GaussHermite, family: MixtureFamily, theta: f64, eta: f64, h: F) -> f64 {
    let (loc, scale) = match family {
        MixtureFamily::MeanMixture => (theta, eta),
        MixtureFamily::VarianceMixture => (eta, theta.sqrt()),
    };
    q.expect_std_normal(|u| h(loc + scale * u))
}

fn check_finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PlcError::Quadrature(format!("{name} is not finite")))
    }
}

/// Fisher information of `(theta, eta)` under the component density, as
/// `[[I_tt, I_te], [I_et, I_ee]]`.
pub fn fisher_information(family: MixtureFamily, theta: f64, eta: f64) -> Result<[[f64; 2]; 2]> {
    fisher_information_with(&GaussHermite::new(GaussHermite::DEFAULT_ORDER)?, family, theta, eta)
}

fn fisher_information_with(q: &GaussHermite, family: MixtureFamily, theta: f64, eta: f64) -> Result<[[f64; 2]; 2]> {
    family.check_params(theta, eta)?;
    let mut m = [[0.0; 2]; 2];
    for (a, row) in m.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = check_finite("Fisher information", expect(q, family, theta, eta, |z| {
                let s = joint_score(family, z, theta, eta);
                s[a] * s[b]
            }))?;
        }
    }
    Ok(m)
}

/// How the variance family's component parameter is indexed when forming scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleParametrization {
    Variance,
    /// Diagnostic only: `theta` read as a standard deviation.
    StandardDeviation,
}

/// `E[xi1 xi2]` under the null density at the canonical point.
pub fn check_score_orthogonality(family: MixtureFamily) -> Result<f64> {
    check_score_orthogonality_in(family, ScaleParametrization::Variance)
}

/// As [`check_score_orthogonality`], optionally with the variance family indexed
/// by its standard deviation. The mean family ignores `param`.
pub fn check_score_orthogonality_in(family: MixtureFamily, param: ScaleParametrization) -> Result<f64> {
    let q = GaussHermite::new(GaussHermite::DEFAULT_ORDER)?;
    xi1_xi2(&q, family, param)
}

fn xi1_xi2(q: &GaussHermite, family: MixtureFamily, param: ScaleParametrization) -> Result<f64> {
    let (theta, eta) = canonical_point(family);
    let v = match (family, param) {
        (MixtureFamily::VarianceMixture, ScaleParametrization::StandardDeviation) => {
            // f = s^{-1} phi((z - eta) / s) at s = 1: D_s f / f = u^2 - 1,
            // D_s^2 f / f = u^4 - 5u^2 + 2.
            q.expect_std_normal(|u| {
                let u2 = u * u;
                (u2 - 1.0) * (u2 * u2 - 5.0 * u2 + 2.0)
            })
        }
        _ => expect(q, family, theta, eta, |z| {
            score_ratio_unchecked(family, z, 1, theta, eta) * score_ratio_unchecked(family, z, 2, theta, eta)
        }),
    };
    check_finite("E[xi1 xi2]", v)
}

/// Mean-zero kernels whose plug-in average has an adjusted variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Xi2Kernel,
}

/// Asymptotic variance of the plug-in average of the kernel:
/// `E[k^2] - C' I^{-1} C` with `C = E[k S]` for the joint score `S`.
pub fn adjusted_variance(family: MixtureFamily, kernel: Kernel) -> Result<f64> {
    adjusted_variance_with(&GaussHermite::new(GaussHermite::DEFAULT_ORDER)?, family, kernel)
}

fn adjusted_variance_with(q: &GaussHermite, family: MixtureFamily, kernel: Kernel) -> Result<f64> {
    let (theta, eta) = canonical_point(family);
    let k = |z: f64| match kernel {
        Kernel::Xi2Kernel => score_ratio_unchecked(family, z, 2, theta, eta),
    };
    let second = expect(q, family, theta, eta, |z| k(z) * k(z));
    let c: [f64; 2] = std::array::from_fn(|a| expect(q, family, theta, eta, |z| k(z) * joint_score(family, z, theta, eta)[a]));
    let info = fisher_information_with(q, family, theta, eta)?;
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    if !(det > 0.0) {
        return Err(PlcError::Quadrature("Fisher information is singular".into()));
    }
    let quad = (info[1][1] * c[0] * c[0] - 2.0 * info[0][1] * c[0] * c[1] + info[0][0] * c[1] * c[1]) / det;
    // Exact cancellation can leave a rounding-level negative.
    Ok(check_finite("adjusted variance", second - quad)?.max(0.0))
}

/// `E[psi]` under the null density.
fn c04_limit_with(q: &GaussHermite, family: MixtureFamily) -> Result<f64> {
    let (theta, eta) = canonical_point(family);
    let v = expect(q, family, theta, eta, |z| {
        let x = |r| score_ratio_unchecked(family, z, r, theta, eta);
        psi(x(1), x(2), x(3), x(4))
    });
    check_finite("C04", v)
}

/// Population quantities entering the limit theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub xi1_xi2_expectation: f64,
    /// Information for `theta` alone at the canonical point.
    pub fisher_info_theta: f64,
    /// Limit variance of `sqrt(N) * c02`.
    pub sigma_squared: f64,
    /// Limit of `c04`.
    pub c04_limit: f64,
}

pub fn moment_report(family: MixtureFamily) -> Result<MomentReport> {
    moment_report_with_order(family, GaussHermite::DEFAULT_ORDER)
}

pub fn moment_report_with_order(family: MixtureFamily, order: usize) -> Result<MomentReport> {
    let q = GaussHermite::new(order)?;
    let (theta, eta) = canonical_point(family);
    Ok(MomentReport {
        xi1_xi2_expectation: xi1_xi2(&q, family, ScaleParametrization::Variance)?,
        fisher_info_theta: fisher_information_with(&q, family, theta, eta)?[0][0],
        sigma_squared: adjusted_variance_with(&q, family, Kernel::Xi2Kernel)?,
        c04_limit: c04_limit_with(&q, family)?,
    })
}

/// Limit law of the statistic under homogeneity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LimitLaw {
    DegenerateAtZero,
    /// `c^2 max(0, Z)^2` with `Z` standard normal.
    ScaledHalfChiSquare { c_squared: f64 },
}

impl LimitLaw {
    pub fn kind(&self) -> &'static str {
        match self {
            LimitLaw::DegenerateAtZero => "degenerate-at-zero",
            LimitLaw::ScaledHalfChiSquare { .. } => "scaled-half-chi-square",
        }
    }

    pub fn c_squared(&self) -> Option<f64> {
        match *self {
            LimitLaw::DegenerateAtZero => None,
            LimitLaw::ScaledHalfChiSquare { c_squared } => Some(c_squared),
        }
    }

    pub fn mean(&self) -> f64 {
        self.c_squared().map_or(0.0, |c2| 0.5 * c2)
    }
}

/// Limit law from the moment report: degenerate when `sigma^2` vanishes, else
/// `c^2 = -3 sigma^2 / C04`.
pub fn limit_law(family: MixtureFamily) -> Result<LimitLaw> {
    limit_law_from(&moment_report(family)?)
}

pub fn limit_law_from(report: &MomentReport) -> Result<LimitLaw> {
    if report.xi1_xi2_expectation.abs() > ASSUMPTION_TOL {
        return Err(PlcError::AssumptionViolation(format!(
            "E[xi1 xi2] = {} is not zero",
            report.xi1_xi2_expectation
        )));
    }
    if !(report.c04_limit < 0.0) {
        return Err(PlcError::AssumptionViolation(format!(
            "C04 = {} is not negative",
            report.c04_limit
        )));
    }
    if report.sigma_squared <= ASSUMPTION_TOL {
        return Ok(LimitLaw::DegenerateAtZero);
    }
    Ok(LimitLaw::ScaledHalfChiSquare {
        c_squared: -3.0 * report.sigma_squared / report.c04_limit,
    })
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}

/// `P(Lambda <= t)` under the limit law.
pub fn limit_cdf(law: &LimitLaw, t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t < 0.0 {
        return 0.0;
    }
    match *law {
        LimitLaw::DegenerateAtZero => 1.0,
        LimitLaw::ScaledHalfChiSquare { c_squared } => std_normal().cdf((t / c_squared).sqrt()),
    }
}

/// `inf { t : F(t) >= p }` for `p` in `(0, 1)`.
pub fn limit_quantile(law: &LimitLaw, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(PlcError::InvalidArgument(format!("probability must be in (0, 1), got {p}")));
    }
    Ok(match *law {
        LimitLaw::DegenerateAtZero => 0.0,
        LimitLaw::ScaledHalfChiSquare { .. } if p <= 0.5 => 0.0,
        LimitLaw::ScaledHalfChiSquare { c_squared } => {
            let z = std_normal().inverse_cdf(p);
            c_squared * z * z
        }
    })
}

#![allow(dead_code)]

use plc_core::models::{fit_null, mixture_log_likelihood};
use plc_core::{MixtureFamily, Sample};

/// Maximizes `f` over the box `[lo, hi]^2` with an `n x n` grid followed by
/// repeated local zooms around the best node.
pub fn grid_max<F: Fn(f64, f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (f64, f64, f64) {
    grid_max_with(f, lo, hi, n, 41, 8)
}

/// As [`grid_max`] with `zooms` refinements of `m x m` nodes each.
pub fn grid_max_with<F: Fn(f64, f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, m: usize, zooms: usize) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, lo, lo);
    let step = (hi - lo) / (n - 1) as f64;
    for i in 0..n {
        for j in i..n {
            let (a, b) = (lo + step * i as f64, lo + step * j as f64);
            let v = f(a, b);
            if v > best.0 {
                best = (v, a, b);
            }
        }
    }
    let mut half = 2.0 * step;
    for _ in 0..zooms {
        let (_, ca, cb) = best;
        let h = 2.0 * half / (m - 1) as f64;
        for i in 0..m {
            for j in 0..m {
                let a = (ca - half + h * i as f64).clamp(lo, hi);
                let b = (cb - half + h * j as f64).clamp(lo, hi);
                let v = f(a, b);
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        half *= 0.25;
    }
    best
}

/// `Lambda` by exhaustive search: means on `[mean +- 4 sd]^2`, variances on a
/// log grid spanning `e^{+-6}` around the null variance.
pub fn grid_lambda(sample: &Sample, family: MixtureFamily, n: usize) -> f64 {
    let null = fit_null(sample, family).unwrap();
    let best = match family {
        MixtureFamily::MeanMixture => grid_max(
            |a, b| mixture_log_likelihood(sample, family, a, b, null.eta_hat).unwrap(),
            null.theta_hat - 4.0 * null.eta_hat,
            null.theta_hat + 4.0 * null.eta_hat,
            n,
        ),
        MixtureFamily::VarianceMixture => grid_max(
            |a, b| mixture_log_likelihood(sample, family, a.exp(), b.exp(), null.eta_hat).unwrap(),
            null.theta_hat.ln() - 6.0,
            null.theta_hat.ln() + 6.0,
            n,
        ),
    };
    (2.0 * (best.0 - null.loglik)).max(0.0)
}

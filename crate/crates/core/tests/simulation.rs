mod common;

use common::grid_max_with;
use plc_core::models::{fit_null, mixture_log_likelihood};
use plc_core::simulation::{
    alternative_parameters, critical_value, ks_two_sample, percentile, power_curve, run_null, sample_mixture,
    simulate_null, write_raw_csv,
};
use plc_core::{MixtureFamily, SimConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

#[test]
fn identical_configs_give_identical_summaries() {
    let cfg = SimConfig::new(MixtureFamily::VarianceMixture, 30, 100, 42);
    let a = simulate_null(&cfg, 1.0, 0.0).unwrap();
    let b = simulate_null(&cfg, 1.0, 0.0).unwrap();
    assert_eq!(a, b);
    let other = simulate_null(&SimConfig { seed: 43, ..cfg }, 1.0, 0.0).unwrap();
    assert_ne!(a.lambdas, other.lambdas);
    assert!(a.lambdas.iter().all(|&l| l >= 0.0));
    assert!(a.lambdas.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(a.c_squared_hat, 2.0 * a.mean);
}

#[test]
fn fixed_seed_gives_bit_identical_samples() {
    let draw = || {
        let mut rng = plc_core::simulation::replication_rng(8, 0, 0, 3);
        sample_mixture(MixtureFamily::MeanMixture, -1.0, 2.0, 0.5, 50, &mut rng).unwrap()
    };
    assert_eq!(draw(), draw());
}

#[test]
fn null_law_does_not_depend_on_the_null_parameters() {
    for (family, alt) in [
        (MixtureFamily::VarianceMixture, (7.5, -3.0)),
        (MixtureFamily::MeanMixture, (10.0, 4.0)),
    ] {
        let cfg = SimConfig::new(family, 40, 300, 11);
        let (t0, e0) = plc_core::simulation::canonical_null(family);
        let a = run_null(&cfg, t0, e0).unwrap();
        let b = run_null(&cfg, alt.0, alt.1).unwrap();
        let (_, p) = ks_two_sample(&a.lambdas, &b.lambdas);
        assert!(p > 0.01, "{family}: p = {p}");
        // Same streams give affinely related samples, so the statistics agree.
        for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
            assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }
}

#[test]
fn critical_value_below_the_atom_is_zero() {
    let cfg = SimConfig::new(MixtureFamily::VarianceMixture, 30, 200, 1);
    assert_eq!(critical_value(&cfg, 0.9).unwrap(), 0.0);
    assert!(critical_value(&cfg, 0.05).unwrap() > 0.0);
}

#[test]
fn raw_csv_lists_replications_in_order() {
    let cfg = SimConfig::new(MixtureFamily::VarianceMixture, 20, 5, 3);
    let run = run_null(&cfg, 1.0, 0.0).unwrap();
    let mut buf = Vec::new();
    write_raw_csv(&run.lambdas, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "rep,lambda");
    assert_eq!(rows.len(), 6);
    for (i, row) in rows[1..].iter().enumerate() {
        let (rep, lambda) = row.split_once(',').unwrap();
        assert_eq!(rep.parse::<usize>().unwrap(), i);
        assert_eq!(lambda.parse::<f64>().unwrap(), run.lambdas[i]);
    }
}

/// Straight-line Monte Carlo: own generator, own mixture draw, grid-search
/// statistic, own type-7 critical value.
fn oracle_power(family: MixtureFamily, n: usize, g: f64, reps: usize, null_reps: usize, alpha: f64) -> f64 {
    let mut rng = StdRng::seed_from_u64(0x0dd5_eed);
    let stat = |t1: f64, t2: f64, eta: f64, rng: &mut StdRng| {
        let values: Vec<f64> = (0..n)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                let th = if rng.random::<f64>() < 0.5 { t1 } else { t2 };
                match family {
                    MixtureFamily::MeanMixture => th + eta * e,
                    MixtureFamily::VarianceMixture => eta + th.sqrt() * e,
                }
            })
            .collect();
        let s = plc_core::Sample::new(values).unwrap();
        let null = fit_null(&s, family).unwrap();
        let best = match family {
            MixtureFamily::MeanMixture => grid_max_with(
                |a, b| mixture_log_likelihood(&s, family, a, b, null.eta_hat).unwrap(),
                null.theta_hat - 4.0 * null.eta_hat,
                null.theta_hat + 4.0 * null.eta_hat,
                30,
                15,
                5,
            ),
            MixtureFamily::VarianceMixture => grid_max_with(
                |a, b| mixture_log_likelihood(&s, family, a.exp(), b.exp(), null.eta_hat).unwrap(),
                null.theta_hat.ln() - 6.0,
                null.theta_hat.ln() + 6.0,
                30,
                15,
                5,
            ),
        };
        let lambda = (2.0 * (best.0 - null.loglik)).max(0.0);
        if lambda < 1e-8 {
            0.0
        } else {
            lambda
        }
    };
    let (t0, e0) = plc_core::simulation::canonical_null(family);
    let mut null: Vec<f64> = (0..null_reps).map(|_| stat(t0, t0, e0, &mut rng)).collect();
    null.sort_by(f64::total_cmp);
    let crit = percentile(&null, 100.0 * (1.0 - alpha)).unwrap();
    let (t1, t2, eta) = alternative_parameters(family, g);
    let hits = (0..reps).filter(|_| stat(t1, t2, eta, &mut rng) > crit).count();
    hits as f64 / reps as f64
}

#[test]
fn power_matches_a_straight_line_oracle() {
    for (family, g) in [(MixtureFamily::MeanMixture, 1.0), (MixtureFamily::VarianceMixture, 1.3)] {
        let n = 100;
        let reps = 600;
        let cfg = SimConfig::new(family, n, reps, 5);
        let curve = power_curve(&cfg, &[g], 0.05, 1000).unwrap();
        let oracle = oracle_power(family, n, g, reps, 1000, 0.05);
        let p = curve.power[0];
        let se = ((p * (1.0 - p) + oracle * (1.0 - oracle)) / reps as f64).sqrt();
        assert!((p - oracle).abs() <= 3.0 * se.max(1.0 / reps as f64), "{family}: {p} vs oracle {oracle}");
    }
}

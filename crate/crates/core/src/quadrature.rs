//! Gauss-Hermite quadrature for expectations under a standard normal.
//!
//! Nodes and weights for the weight function `e^{-x^2}` are found by Newton
//! iteration on the orthonormal Hermite recurrence, starting from the usual
//! asymptotic guesses for the largest roots.

use std::f64::consts::PI;

use crate::error::{PlcError, Result};

const MAX_NEWTON: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub const DEFAULT_ORDER: usize = 64;

    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(PlcError::Quadrature("order must be positive".into()));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut converged = false;
            let mut pp = 0.0;
            for _ in 0..MAX_NEWTON {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(PlcError::Quadrature(format!(
                    "Newton iteration for root {i} of order {n} did not converge"
                )));
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `int e^{-x^2} h(x) dx` over the real line.
    pub fn integrate<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * h(x))
            .sum()
    }

    /// `E[h(U)]` for `U ~ N(0, 1)`.
    pub fn expect_std_normal<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        self.integrate(|x| h(s2 * x)) / PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn double_factorial_odd(k: u32) -> f64 {
        (1..=k).step_by(2).map(f64::from).product()
    }

    #[test]
    fn normal_moments_are_exact() {
        for order in [16, 64, 128] {
            let q = GaussHermite::new(order).unwrap();
            assert_relative_eq!(q.expect_std_normal(|_| 1.0), 1.0, epsilon = 1e-13);
            for k in 1..=16u32 {
                let m = q.expect_std_normal(|u| u.powi(k as i32));
                let expected = if k % 2 == 1 { 0.0 } else { double_factorial_odd(k - 1) };
                // Odd moments cancel between large nodes; compare against E|U|^k scale.
                let scale = double_factorial_odd(k | 1);
                assert!((m - expected).abs() <= 1e-12 * scale, "order {order} k {k}: {m}");
            }
        }
    }

    #[test]
    fn integrates_cosine() {
        let q = GaussHermite::new(20).unwrap();
        let got = q.integrate(f64::cos);
        assert_relative_eq!(got, PI.sqrt() * (-0.25_f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn nodes_are_symmetric_and_sorted_descending_on_each_half() {
        let q = GaussHermite::new(33).unwrap();
        assert_eq!(q.order(), 33);
        for i in 0..33 {
            assert_relative_eq!(q.nodes[i], -q.nodes[32 - i], epsilon = 1e-14);
        }
        assert!(q.nodes[16].abs() < 1e-14);
        assert!(q.nodes.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn zero_order_is_rejected() {
        assert!(GaussHermite::new(0).is_err());
    }
}

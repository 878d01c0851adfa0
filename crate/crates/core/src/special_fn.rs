//! Hermite polynomials, normalized Hermite functions and Gauss-Hermite rules.
//!
//! The normalized Hermite function
//! `h_n(x) = pi^(-1/4) (2^n n!)^(-1/2) H_n(x) exp(-x^2/2)` is the canonical
//! evaluation path for every wavefunction in this crate. The raw polynomial
//! `H_n` is only kept around for cross-checks, since `2^n n!` overflows long
//! before the orders the packet trains need.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest order accepted by [`hermite_phys`].
pub const MAX_RAW_ORDER: usize = 64;
/// Largest order accepted by [`hermite_function`].
pub const MAX_FUNCTION_ORDER: usize = 512;
/// Largest order accepted by [`gauss_hermite`].
pub const MAX_QUADRATURE_ORDER: usize = 512;

const NODE_TOLERANCE: f64 = 1e-14;
const MAX_NEWTON_ITERATIONS: usize = 100;
const RESCALE_THRESHOLD: f64 = 1e150;

/// Physicists' Hermite polynomial `H_n(xi)` by the three-term recurrence.
pub fn hermite_phys(n: usize, xi: f64) -> Result<f64> {
    if n > MAX_RAW_ORDER {
        return Err(Error::HermiteOverflow {
            n,
            max: MAX_RAW_ORDER,
        });
    }
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let next = 2.0 * xi * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Normalized Hermite function `h_n(xi)`, orthonormal on the real line.
pub fn hermite_function(n: usize, xi: f64) -> Result<f64> {
    if n > MAX_FUNCTION_ORDER {
        return Err(Error::OrderOutOfRange {
            n,
            max: MAX_FUNCTION_ORDER,
        });
    }
    Ok(normalized_hermite(n, xi))
}

/// Unchecked variant used internally where the order is already validated.
pub(crate) fn normalized_hermite(n: usize, xi: f64) -> f64 {
    let (p, _, log_scale) = scaled_recurrence(n, xi);
    with_gaussian(p, log_scale, xi)
}

fn with_gaussian(mantissa: f64, log_scale: f64, xi: f64) -> f64 {
    if mantissa == 0.0 {
        return 0.0;
    }
    if log_scale == 0.0 {
        return mantissa * (-0.5 * xi * xi).exp();
    }
    mantissa.signum() * (mantissa.abs().ln() + log_scale - 0.5 * xi * xi).exp()
}

/// Orthonormal recurrence without the Gaussian factor.
///
/// `p_{k+1} = xi sqrt(2/(k+1)) p_k - sqrt(k/(k+1)) p_{k-1}` with
/// `p_0 = pi^(-1/4)`. The pair is rescaled whenever it grows past
/// `RESCALE_THRESHOLD`, so the true values are `p * exp(log_scale)`.
fn scaled_recurrence(n: usize, xi: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    let mut log_scale = 0.0;
    for k in 0..n {
        let k1 = (k + 1) as f64;
        let next = xi * (2.0 / k1).sqrt() * cur - (k as f64 / k1).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_THRESHOLD {
            cur /= RESCALE_THRESHOLD;
            prev /= RESCALE_THRESHOLD;
            log_scale += RESCALE_THRESHOLD.ln();
        }
    }
    (cur, prev, log_scale)
}

/// Gauss-Hermite rule for the weight `exp(-xi^2)` on the real line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in strictly increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights matching [`Self::nodes`]. For orders above roughly 380 the
    /// outermost weights fall below the smallest representable double and
    /// are stored as zero.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Approximates `int exp(-xi^2) f(xi) dxi`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Builds the `order`-point Gauss-Hermite rule by Newton iteration on the
/// orthonormal recurrence with deflation against the roots already found.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_QUADRATURE_ORDER {
        return Err(Error::QuadratureOrder {
            order,
            max: MAX_QUADRATURE_ORDER,
        });
    }
    let n = order as f64;
    let half = order / 2;
    // Positive roots, largest first.
    let mut roots: Vec<f64> = Vec::with_capacity(half);
    let mut root_weights: Vec<f64> = Vec::with_capacity(half);
    for i in 0..half {
        // Newton on p_n / prod(z - r_j) over the roots already found. That
        // quotient has only real roots, all below the start point, so the
        // iteration descends monotonically onto the next root instead of
        // skipping ahead the way plain Newton from asymptotic seeds does at
        // high order.
        let mut z = match i {
            0 => (2.0 * n + 1.0).sqrt() - 1.85575 * (2.0 * n + 1.0).powf(-1.0 / 6.0),
            1 => roots[0] - 1e-3 * 1.14 * n.powf(0.426) / roots[0],
            _ => roots[i - 1] - 1e-3 * (roots[i - 2] - roots[i - 1]),
        };
        // Near machine precision the step can limit-cycle in the last bits,
        // so fall back to a looser bound once the iterations run out.
        let mut step = f64::INFINITY;
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let (p, q, _) = scaled_recurrence(order, z);
            if p == 0.0 {
                step = 0.0;
                break;
            }
            // d/dz p_n = sqrt(2n) p_{n-1}
            let log_derivative =
                (2.0 * n).sqrt() * q / p - roots.iter().map(|r| 1.0 / (z - r)).sum::<f64>();
            step = 1.0 / log_derivative;
            z -= step;
            if step.abs() <= NODE_TOLERANCE * z.abs().max(1.0) {
                break;
            }
        }
        let converged = step.abs() <= 1e3 * NODE_TOLERANCE * z.abs().max(1.0);
        if !converged || !z.is_finite() || z <= 0.0 {
            return Err(Error::QuadratureNonConvergence { index: i, order });
        }
        if let Some(&last) = roots.last() {
            if z >= last {
                return Err(Error::QuadratureNonConvergence { index: i, order });
            }
        }
        roots.push(z);
        root_weights.push(weight_at(order, z));
    }

    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    for (&x, &w) in roots.iter().zip(&root_weights) {
        nodes.push(-x);
        weights.push(w);
    }
    if order % 2 == 1 {
        nodes.push(0.0);
        weights.push(weight_at(order, 0.0));
    }
    for (&x, &w) in roots.iter().zip(&root_weights).rev() {
        nodes.push(x);
        weights.push(w);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `w = 1 / (n p_{n-1}(z)^2)` evaluated in log space.
fn weight_at(order: usize, z: f64) -> f64 {
    let (_, q, log_scale) = scaled_recurrence(order, z);
    (-2.0 * (q.abs().ln() + log_scale)).exp() / order as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn raw_polynomial_small_orders() {
        assert_eq!(hermite_phys(0, 0.7).unwrap(), 1.0);
        assert_relative_eq!(hermite_phys(1, 0.7).unwrap(), 1.4, epsilon = 1e-15);
        // H_2 = 4x^2 - 2 and H_3 = 8x^3 - 12x, evaluated as series.
        assert_relative_eq!(hermite_phys(2, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        let x: f64 = -0.37;
        assert_relative_eq!(
            hermite_phys(3, x).unwrap(),
            8.0 * x.powi(3) - 12.0 * x,
            epsilon = 1e-14
        );
    }

    #[test]
    fn raw_polynomial_rejects_high_order() {
        assert!(matches!(
            hermite_phys(65, 0.1),
            Err(Error::HermiteOverflow { n: 65, .. })
        ));
        assert!(hermite_phys(64, 0.1).is_ok());
    }

    #[test]
    fn hermite_function_fixed_values() {
        assert_relative_eq!(
            hermite_function(0, 0.0).unwrap(),
            0.751_125_544_464_942_5,
            epsilon = 1e-15
        );
        assert_eq!(hermite_function(1, 0.0).unwrap(), 0.0);
        // 40-digit reference values, rounded by the compiler.
        #[allow(clippy::excessive_precision)]
        let cases = [
            (10, 3.2, -0.300_031_694_506_254_87),
            (30, -5.5, -0.061_775_708_520_689_553),
            (200, 7.25, -0.155_221_529_004_325_47),
            (512, 30.0, -0.045_908_813_544_179_586),
            (500, 35.0, 3.931_135_480_992_022_4e-16),
        ];
        for (n, x, expected) in cases {
            let got = hermite_function(n, x).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-11);
        }
    }

    #[test]
    fn hermite_function_matches_raw_normalization() {
        let x: f64 = 3.2;
        let fact: f64 = (1..=10).map(|k| k as f64).product();
        let oracle = hermite_phys(10, x).unwrap() * (-x * x / 2.0).exp()
            / (2f64.powi(10) * fact * PI.sqrt()).sqrt();
        assert_relative_eq!(
            hermite_function(10, x).unwrap(),
            oracle,
            max_relative = 1e-13
        );
        assert!(hermite_function(513, 0.0).is_err());
    }

    #[test]
    fn small_rules_closed_form() {
        let one = gauss_hermite(1).unwrap();
        assert_eq!(one.nodes(), &[0.0]);
        assert_relative_eq!(one.weights()[0], PI.sqrt(), epsilon = 1e-15);

        let two = gauss_hermite(2).unwrap();
        let r = 0.5f64.sqrt();
        assert_relative_eq!(two.nodes()[0], -r, epsilon = 1e-15);
        assert_relative_eq!(two.nodes()[1], r, epsilon = 1e-15);
        for &w in two.weights() {
            assert_relative_eq!(w, PI.sqrt() / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn second_moment_order_five() {
        let rule = gauss_hermite(5).unwrap();
        let m2 = rule.integrate(|x| x * x);
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn rule_structure_across_orders() {
        for order in [3, 7, 16, 20, 64, 100, 128, 255, 256, 300, 384, 512] {
            let rule = gauss_hermite(order).unwrap();
            assert_eq!(rule.order(), order);
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - PI.sqrt()).abs() < 1e-12, "order {order}: {sum}");
            let nodes = rule.nodes();
            assert!(nodes.windows(2).all(|w| w[0] < w[1]), "order {order}");
            for i in 0..order {
                assert_eq!(nodes[i], -nodes[order - 1 - i]);
            }
            if order <= 300 {
                assert!(rule.weights().iter().all(|&w| w > 0.0), "order {order}");
            } else {
                assert!(rule.weights().iter().all(|&w| w >= 0.0));
            }
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        // int x^(2k) exp(-x^2) = Gamma(k + 1/2)
        fn even_moment(k: i32) -> f64 {
            (0..k).fold(PI.sqrt(), |acc, j| acc * (j as f64 + 0.5))
        }
        let order = 12;
        let rule = gauss_hermite(order).unwrap();
        for k in 0..order as i32 {
            let got = rule.integrate(|x| x.powi(2 * k));
            assert_relative_eq!(got, even_moment(k), max_relative = 1e-12);
            let odd = rule.integrate(|x| x.powi(2 * k + 1));
            assert!(odd.abs() < 1e-9 * even_moment(k + 1));
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_hermite(513).is_err());
    }

    #[test]
    fn hermite_functions_are_orthonormal_under_quadrature() {
        let rule = gauss_hermite(64).unwrap();
        for n in 0..=16 {
            for m in 0..=16 {
                let g = rule.integrate(|x| {
                    normalized_hermite(n, x) * normalized_hermite(m, x) * (x * x).exp()
                });
                let expected = if n == m { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-10, "({n},{m}) -> {g}");
            }
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stable_recurrence_agrees_with_raw(n in 0usize..=30, x in -6.0f64..6.0) {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                let oracle = hermite_phys(n, x).unwrap() * (-x * x / 2.0).exp()
                    / (2f64.powi(n as i32) * fact * PI.sqrt()).sqrt();
                let got = hermite_function(n, x).unwrap();
                let scale = oracle.abs().max(1e-12);
                prop_assert!((got - oracle).abs() <= 1e-9 * scale, "{} vs {}", got, oracle);
            }

            #[test]
            fn parity(n in 0usize..=200, x in 0.0f64..20.0) {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let a = hermite_function(n, x).unwrap();
                let b = hermite_function(n, -x).unwrap();
                prop_assert!((a - sign * b).abs() <= 1e-14 * a.abs().max(1e-300));
            }
        }
    }
}

//! Gauss–Legendre and Gauss–Lobatto rules on `[-1, 1]`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// A quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_a^b g` with the rule mapped affinely onto `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * g(m + r * x);
        }
        s * r
    }
}

/// `n`-point Gauss–Legendre rule (exact for degree `2n - 1`), nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, q) = legendre(n, x);
            dp = n as f64 * (x * p - q) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (p, q) = legendre(n, x);
        dp = if p.is_finite() && q.is_finite() {
            n as f64 * (x * p - q) / (x * x - 1.0)
        } else {
            dp
        };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// `n`-point Gauss–Lobatto nodes (including `±1`), ascending.
pub fn gauss_lobatto_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2, "Gauss–Lobatto needs at least the two endpoints");
    let m = n - 1;
    let mf = m as f64;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[m] = 1.0;
    for i in 1..=(m / 2) {
        // interior nodes are the roots of P_m'
        let mut x = libm::cos(PI * i as f64 / mf);
        for _ in 0..100 {
            let (p, q) = legendre(m, x);
            let d1 = mf * (q - x * p) / (1.0 - x * x);
            let d2 = (2.0 * x * d1 - mf * (mf + 1.0) * p) / (1.0 - x * x);
            let dx = d1 / d2;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - i] = x;
    }
    if n % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exactness() {
        for n in 1..=12 {
            let r = gauss_legendre(n);
            for d in 0..(2 * n) {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let got = r.integrate(-1.0, 1.0, |x| crate::expr::powi(x, d as i32));
                assert!((got - exact).abs() < 1e-14, "n={n} d={d}: {got} vs {exact}");
            }
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn large_rule_is_accurate() {
        let r = gauss_legendre(64);
        let got = r.integrate(0.0, PI, libm::sin);
        assert!((got - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lobatto_known_nodes() {
        assert_eq!(gauss_lobatto_nodes(2), [-1.0, 1.0]);
        assert_eq!(gauss_lobatto_nodes(3), [-1.0, 0.0, 1.0]);
        let n4 = gauss_lobatto_nodes(4);
        assert!((n4[2] - libm::sqrt(0.2)).abs() < 1e-15);
        assert!((n4[1] + libm::sqrt(0.2)).abs() < 1e-15);
        let n5 = gauss_lobatto_nodes(5);
        assert!((n5[3] - libm::sqrt(3.0 / 7.0)).abs() < 1e-15);
    }
}

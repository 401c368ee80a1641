//! Gauss–Legendre rules used for kernel assembly and chirped integrals.

use alloc::vec::Vec;

use crate::fmath;

/// A Gauss–Legendre rule of given order on the reference interval `[−1, 1]`.
///
/// Nodes are the roots of the Legendre polynomial `Pₙ`, found by Newton
/// iteration from the Chebyshev-like initial guesses; the rule integrates
/// polynomials up to degree `2n − 1` exactly.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be at least 1");
        let n = order;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = fmath::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if fmath::abs(dx) <= 1e-15 {
                    break;
                }
            }
            // Polish once more; the weight uses the final derivative.
            let (p, d) = legendre_with_derivative(n, x);
            x -= p / d;
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * d * d));
        }
        nodes.reverse();
        weights.reverse();
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// `∫ₐᵇ f` by a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(t, w)| w * f(t)).sum()
    }
}

/// `(Pₙ(x), Pₙ′(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

//! Tensor-product Gauss-Legendre rules on the unit square.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::cos;

use crate::math::{normal_cdf, normal_pdf, normal_quantile};

/// Default number of Gauss-Legendre nodes per axis.
pub const DEFAULT_NODES: usize = 200;

/// Width of the strip along the border of the unit square excluded from
/// density integrals.
pub const DEFAULT_CORNER_MARGIN: f64 = 1e-6;

/// Quadrature resolution for integrals over the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    /// Gauss-Legendre nodes per axis.
    pub nodes: usize,
    /// Density integrals run over `[margin, 1 - margin]^2`.
    pub corner_margin: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            nodes: DEFAULT_NODES,
            corner_margin: DEFAULT_CORNER_MARGIN,
        }
    }
}

impl Resolution {
    pub fn with_nodes(nodes: usize) -> Self {
        Resolution {
            nodes,
            ..Self::default()
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n.
        let mut z = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// One-dimensional rule on (part of) the unit interval; the square rule is
/// its tensor product with itself.
#[derive(Debug, Clone)]
pub struct AxisRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    /// Plain Gauss-Legendre on `[0, 1]`. Suited to bounded, continuous
    /// integrands such as copula CDFs.
    pub fn uniform(nodes: usize) -> AxisRule {
        let (x, w) = gauss_legendre(nodes);
        AxisRule {
            points: x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|&wi| 0.5 * wi).collect(),
        }
    }

    /// Gauss-Legendre in normal scores: `u = Phi(z)` with `z` spanning
    /// `[Phi^-1(margin), Phi^-1(1 - margin)]`.
    ///
    /// Integrates over `[margin, 1 - margin]` in `u`, with nodes crowded
    /// towards the border where copula densities concentrate.
    pub fn normal_scores(res: Resolution) -> AxisRule {
        let (x, w) = gauss_legendre(res.nodes);
        let hi = normal_quantile(1.0 - res.corner_margin);
        let lo = -hi;
        let half = 0.5 * (hi - lo);
        let mut points = Vec::with_capacity(res.nodes);
        let mut weights = Vec::with_capacity(res.nodes);
        for (&t, &wi) in x.iter().zip(&w) {
            let z = lo + half * (t + 1.0);
            points.push(normal_cdf(z));
            weights.push(wi * half * normal_pdf(z));
        }
        AxisRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `sum_i sum_j w_i w_j f(u_i, u_j)`.
    pub fn integrate_square(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (&u, &wu) in self.points.iter().zip(&self.weights) {
            let mut row = 0.0;
            for (&v, &wv) in self.points.iter().zip(&self.weights) {
                row += wv * f(u, v);
            }
            total += wu * row;
        }
        total
    }

    /// Same as [`integrate_square`](Self::integrate_square) for integrands
    /// with `f(u, v) = f(v, u)`, evaluating each unordered pair once.
    pub fn integrate_square_symmetric(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let n = self.points.len();
        let mut diag = 0.0;
        let mut off = 0.0;
        for i in 0..n {
            let (u, wu) = (self.points[i], self.weights[i]);
            diag += wu * wu * f(u, u);
            let mut row = 0.0;
            for j in (i + 1)..n {
                row += self.weights[j] * f(u, self.points[j]);
            }
            off += wu * row;
        }
        diag + 2.0 * off
    }
}

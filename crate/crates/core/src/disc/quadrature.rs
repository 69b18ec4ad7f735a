//! Gauss–Legendre rules and the polar product grid on the unit disc.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vekua::derivative::RadialStencils;
use crate::vekua::teodorescu::TeodorescuTables;

/// A Gauss–Legendre rule on `[0, 1]`, nodes ascending, weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut root = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, root);
                let step = p / dp;
                root -= step;
                deriv = dp;
                if step.abs() <= 1e-16 * root.abs().max(1.0) {
                    deriv = legendre_with_derivative(n, root).1;
                    break;
                }
            }
            let weight = 2.0 / ((1.0 - root * root) * deriv * deriv);
            // roots come out descending on [-1, 1]
            x[n - 1 - i] = root;
            x[i] = -root;
            w[n - 1 - i] = weight;
            w[i] = weight;
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        let nodes = x.iter().map(|&t| 0.5 * (t + 1.0)).collect();
        let weights = w.iter().map(|&t| 0.5 * t).collect();
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(a + h * t))
            .sum::<f64>()
            * h
    }

    /// Barycentric interpolation weights for the nodes (up to a common factor).
    pub fn barycentric_weights(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(i, (&s, &w))| {
                let x = 2.0 * s - 1.0;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((1.0 - x * x) * 2.0 * w).sqrt()
            })
            .collect()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Values of all Lagrange basis polynomials at `x` in barycentric form.
pub(crate) fn lagrange_basis(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(hit) = nodes.iter().position(|&s| s == x) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[hit] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for ((o, &s), &b) in out.iter_mut().zip(nodes).zip(bary) {
        let t = b / (x - s);
        *o = t;
        denom += t;
    }
    out.iter_mut().for_each(|v| *v /= denom);
}

/// Polar product grid on the unit disc for the normalized area measure `dA = dx dy / π`.
///
/// Rings sit at the Gauss–Legendre nodes of `s = r²` on `(0, 1)`; each ring carries
/// `n_theta` equally spaced angles starting at `θ = 0`. Node `i * n_theta + j` is
/// `r_i e^{2πi j / n_theta}` with weight `radial_weights[i] / n_theta`.
pub struct DiscGrid {
    radial_nodes: Vec<f64>,
    radial_weights: Vec<f64>,
    s_rule: GaussLegendre,
    barycentric: Vec<f64>,
    n_theta: usize,
    exactness_degree: usize,
    unit_roots: Vec<Complex64>,
    pub(crate) teodorescu: OnceLock<TeodorescuTables>,
    pub(crate) stencils: OnceLock<RadialStencils>,
}

/// Builds the polar grid with `n_r` rings and `n_theta` angles.
pub fn build_grid(n_r: usize, n_theta: usize) -> Result<Arc<DiscGrid>> {
    if n_r < 2 {
        return Err(Error::InvalidArgument(format!("n_r = {n_r} < 2")));
    }
    if n_theta < 4 {
        return Err(Error::InvalidArgument(format!("n_theta = {n_theta} < 4")));
    }
    let s_rule = GaussLegendre::new(n_r);
    let radial_nodes = s_rule.nodes.iter().map(|s| s.sqrt()).collect();
    let radial_weights = s_rule.weights.clone();
    let barycentric = s_rule.barycentric_weights();
    let unit_roots = (0..n_theta)
        .map(|q| Complex64::from_polar(1.0, 2.0 * PI * q as f64 / n_theta as f64))
        .collect();
    // z^m conj(z)^n integrates exactly when |m - n| < n_theta (trapezoid in θ) and,
    // on the diagonal, s^n has degree at most 2 n_r - 1.
    let exactness_degree = (n_theta - 1).min(4 * n_r - 1);
    Ok(Arc::new(DiscGrid {
        radial_nodes,
        radial_weights,
        s_rule,
        barycentric,
        n_theta,
        exactness_degree,
        unit_roots,
        teodorescu: OnceLock::new(),
        stencils: OnceLock::new(),
    }))
}

impl DiscGrid {
    pub fn n_r(&self) -> usize {
        self.radial_nodes.len()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.n_r() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    /// Mass carried by each ring; the ring masses sum to one.
    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    /// Ring positions in the variable `s = r²`.
    pub fn s_nodes(&self) -> &[f64] {
        &self.s_rule.nodes
    }

    pub(crate) fn barycentric(&self) -> &[f64] {
        &self.barycentric
    }

    /// Largest total degree `m + n` for which `∫ z^m z̄^n dA` is exact.
    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    /// Largest analytic truncation degree the grid supports.
    pub fn max_degree(&self) -> usize {
        self.exactness_degree / 2
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }

    /// `e^{2πi q / n_theta}` for any integer `q`.
    pub fn unit_root(&self, q: i64) -> Complex64 {
        self.unit_roots[q.rem_euclid(self.n_theta as i64) as usize]
    }

    pub fn ring_of(&self, idx: usize) -> usize {
        idx / self.n_theta
    }

    pub fn node(&self, idx: usize) -> Complex64 {
        let (i, j) = (idx / self.n_theta, idx % self.n_theta);
        self.unit_roots[j] * self.radial_nodes[i]
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.radial_weights[idx / self.n_theta] / self.n_theta as f64
    }

    /// All nodes in index order.
    pub fn nodes(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.len()).map(move |idx| self.node(idx))
    }

    /// Quadrature of `∫ g dA` for samples given in node order.
    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        values
            .chunks(self.n_theta)
            .zip(&self.radial_weights)
            .map(|(ring, &w)| ring.iter().sum::<Complex64>() * w)
            .sum::<Complex64>()
            / self.n_theta as f64
    }

    pub(crate) fn check_degree(&self, degree: usize) -> Result<()> {
        if degree > self.max_degree() {
            return Err(Error::DegreeTooLarge {
                degree,
                max: self.max_degree(),
            });
        }
        Ok(())
    }
}

impl PartialEq for DiscGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_r() == other.n_r() && self.n_theta == other.n_theta
    }
}

impl fmt::Debug for DiscGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscGrid")
            .field("n_r", &self.n_r())
            .field("n_theta", &self.n_theta)
            .field("exactness_degree", &self.exactness_degree)
            .finish()
    }
}

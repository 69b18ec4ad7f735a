//! Real quadratically constrained least squares in Gram form:
//!
//! minimize `xᵀG_K x − 2xᵀg_K` subject to `xᵀG_J x − 2xᵀg_J + ‖h_J‖² ≤ M²`,
//!
//! with `R = G_K + G_J` positive definite. Stationarity reads
//! `(R + (μ − 1) G_J) x = g_K + μ g_J` for the multiplier `μ ≥ 0`. Whitening by the
//! Cholesky factor of `R` and diagonalizing `L⁻¹ G_J L⁻ᵀ = Q D Qᵀ` decouples the system, and
//! the constraint value becomes an explicit rational function of `μ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Smallest multiplier tried; the same as `λ = −1 + 1e−9` for the BEP parameter `λ = μ − 1`.
pub(crate) const MU_LOWER: f64 = 1e-9;
const MAX_STEPS: usize = 200;

pub(crate) struct Qcqp {
    l: DMatrix<f64>,
    q: DMatrix<f64>,
    d: Vec<f64>,
    gk: Vec<f64>,
    gj: Vec<f64>,
    hj2: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct QcqpSolution {
    pub x: DVector<f64>,
    pub mu: f64,
    pub active: bool,
    pub iterations: usize,
}

impl Qcqp {
    pub fn new(r: &DMatrix<f64>, g_j: &DMatrix<f64>, b_k: &DVector<f64>, b_j: &DVector<f64>, hj2: f64) -> Result<Self> {
        let chol = r
            .clone()
            .cholesky()
            .ok_or_else(|| Error::IllConditioned(symmetric_eigen(r).map(|e| *e.0.last().unwrap_or(&0.0)).unwrap_or(0.0)))?;
        let l = chol.l();
        let linv_gj = l.solve_lower_triangular(g_j).expect("Cholesky factor is invertible");
        let s = l.solve_lower_triangular(&linv_gj.transpose()).expect("Cholesky factor is invertible");
        let s = (&s + s.transpose()) * 0.5;
        let (d, q) = symmetric_eigen(&s)?;
        let whiten = |b: &DVector<f64>| -> Vec<f64> {
            let y = l.solve_lower_triangular(b).expect("Cholesky factor is invertible");
            (q.transpose() * y).iter().copied().collect()
        };
        let gk = whiten(b_k);
        let gj = whiten(b_j);
        Ok(Qcqp { l, q, d, gk, gj, hj2 })
    }

    fn whitened(&self, mu: f64) -> Vec<f64> {
        self.d
            .iter()
            .zip(self.gk.iter().zip(&self.gj))
            .map(|(&d, (&a, &b))| (a + mu * b) / (1.0 + (mu - 1.0) * d))
            .collect()
    }

    /// Constraint value `φ(μ)` and its derivative.
    fn phi(&self, mu: f64) -> (f64, f64) {
        let mut value = self.hj2;
        let mut slope = 0.0;
        for ((&d, &b), y) in self.d.iter().zip(&self.gj).zip(self.whitened(mu)) {
            value += d * y * y - 2.0 * y * b;
            let r = b - d * y;
            slope -= 2.0 * r * r / (1.0 + (mu - 1.0) * d);
        }
        (value.max(0.0), slope)
    }

    /// Infimum of the constraint value over all `x`.
    pub fn distance_sqr(&self) -> f64 {
        let tail: f64 = self
            .d
            .iter()
            .zip(&self.gj)
            .filter(|(&d, _)| d > 1e-14 * self.d[0].max(1e-300))
            .map(|(&d, &b)| b * b / d)
            .sum();
        (self.hj2 - tail).max(0.0)
    }

    pub fn x_at(&self, mu: f64) -> DVector<f64> {
        let y = DVector::from_vec(self.whitened(mu));
        let v = &self.q * y;
        self.l.transpose().solve_upper_triangular(&v).expect("Cholesky factor is invertible")
    }

    /// Solves the problem for the level `m`.
    pub fn solve(&self, m: f64) -> Result<QcqpSolution> {
        let target = m * m;
        let tol = 1e-14 * m.max(1.0);
        let (phi_lo, _) = self.phi(MU_LOWER);
        if phi_lo <= target {
            return Ok(QcqpSolution { x: self.x_at(MU_LOWER), mu: MU_LOWER, active: false, iterations: 0 });
        }
        let dist2 = self.distance_sqr();
        if dist2 > target {
            return Err(Error::Infeasible { distance: dist2.sqrt(), m });
        }
        let mut lo = MU_LOWER.ln();
        let mut hi = 0.0f64;
        let mut expansions = 0;
        while self.phi(hi.exp()).0 > target {
            lo = hi;
            hi += std::f64::consts::LN_2;
            expansions += 1;
            if expansions > 2000 {
                return Err(Error::NoConvergence {
                    what: "secular equation",
                    detail: format!("no multiplier up to {:.3e} meets M = {m:.3e}", hi.exp()),
                });
            }
        }
        // Newton on ψ(t) = φ(e^t)^{-1/2} − 1/M, increasing in t, safeguarded by the bracket
        let mut t = hi;
        for step in 1..=MAX_STEPS {
            let mu = t.exp();
            let (value, slope) = self.phi(mu);
            let e = value.sqrt();
            if (e - m).abs() <= tol {
                return Ok(QcqpSolution { x: self.x_at(mu), mu, active: true, iterations: step });
            }
            if e > m {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
            let psi = 1.0 / e - 1.0 / m;
            let dpsi = -0.5 * value.powf(-1.5) * slope * mu;
            let mut next = if dpsi > 0.0 && value > 0.0 { t - psi / dpsi } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (hi - lo).abs() <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                let mu = next.exp();
                let value = self.phi(mu).0;
                if (value.sqrt() - m).abs() <= 1e-10 * m.max(1.0) {
                    return Ok(QcqpSolution { x: self.x_at(mu), mu, active: true, iterations: step });
                }
                break;
            }
            t = next;
        }
        Err(Error::NoConvergence {
            what: "secular equation",
            detail: format!("multiplier bracket [{:.6e}, {:.6e}] did not resolve M = {m:.3e}", lo.exp(), hi.exp()),
        })
    }
}

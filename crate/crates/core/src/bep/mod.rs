//! The bounded extremal problem in `A²(𝔻)`:
//!
//! minimize `‖h_K − g‖_{L²(K)}` over analytic `g` with `‖h_J − g‖_{L²(J)} ≤ M`,
//!
//! truncated to `g = Σ_{n ≤ N} c_n e_n`. For `λ > −1` the candidate
//! `g_λ = (I + λ P χ_J)⁻¹ P(h_K ∨ (λ+1) h_J)` is computed from the Gram system, and `λ` is
//! located so that the constraint is saturated.

mod oracle;

pub use oracle::solve_bep_oracle;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bergman::{project_values, AnalyticCoeffs, GramMatrix};
use crate::disc::{weighted_norm_sqr, DiscGrid, GridFunction, Region};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;

/// Lower end of the `λ` search, `−1 + 1e−9`.
pub const LAMBDA_LOWER: f64 = -1.0 + 1e-9;

/// Data of one bounded extremal problem; `J` is the complement of `K`.
#[derive(Debug, Clone)]
pub struct BepProblem {
    k: Region,
    j: Region,
    h_k: GridFunction,
    h_j: GridFunction,
    m: f64,
    degree: usize,
}

impl BepProblem {
    pub fn new(k: Region, h_k: GridFunction, h_j: GridFunction, m: f64, degree: usize) -> Result<Self> {
        h_k.check_grid(&h_j)?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("constraint level M = {m} must be positive")));
        }
        let grid = h_k.grid().clone();
        grid.check_degree(degree)?;
        k.node_mask(&grid)?;
        let j = k.complement();
        Ok(BepProblem { k, j, h_k, h_j, m, degree })
    }

    /// The same data at another constraint level.
    pub fn with_m(&self, m: f64) -> Result<Self> {
        Self::new(self.k.clone(), self.h_k.clone(), self.h_j.clone(), m, self.degree)
    }

    /// The same data truncated at another degree.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        Self::new(self.k.clone(), self.h_k.clone(), self.h_j.clone(), self.m, degree)
    }

    pub fn k(&self) -> &Region {
        &self.k
    }

    pub fn j(&self) -> &Region {
        &self.j
    }

    pub fn h_k(&self) -> &GridFunction {
        &self.h_k
    }

    pub fn h_j(&self) -> &GridFunction {
        &self.h_j
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        self.h_k.grid()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BepOptions {
    /// Bisection steps allowed once the bracket is found.
    pub max_iter: usize,
    /// Initial upper end of the `λ` bracket.
    pub lambda_hi: f64,
    /// Also solve at degree `N − 4` and report the coefficient change.
    pub truncation_check: bool,
}

impl Default for BepOptions {
    fn default() -> Self {
        BepOptions { max_iter: 200, lambda_hi: 1.0, truncation_check: true }
    }
}

#[derive(Debug, Clone)]
pub struct BepSolution {
    pub g0: AnalyticCoeffs,
    pub lambda: f64,
    pub err_k: f64,
    pub err_j: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Whether the constraint is saturated.
    pub active: bool,
    /// `‖g₀^{(N)} − g₀^{(N−4)}‖` when requested and available.
    pub truncation_delta: Option<f64>,
}

/// Result of [`feasibility_distance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub distance: f64,
    /// The Gram system was singular and a pseudo-inverse was used.
    pub regularized: bool,
}

/// Gram data of one problem on its grid.
pub(crate) struct BepSystem<'a> {
    pub problem: &'a BepProblem,
    pub g_j: DMatrix<Complex64>,
    pub b_k: DVector<Complex64>,
    pub b_j: DVector<Complex64>,
    pub mask_k: Vec<bool>,
    pub mask_j: Vec<bool>,
}

impl<'a> BepSystem<'a> {
    pub fn new(problem: &'a BepProblem) -> Result<Self> {
        let grid = problem.grid();
        let n = problem.degree;
        let g_j = GramMatrix::on_grid(&problem.j, n, grid)?.into_entries();
        let mask_k = problem.k.node_mask(grid)?;
        let mask_j = problem.j.node_mask(grid)?;
        let restrict = |values: &[Complex64], mask: &[bool]| -> Vec<Complex64> {
            values.iter().zip(mask).map(|(&v, &m)| if m { v } else { Complex64::new(0.0, 0.0) }).collect()
        };
        let b_k = DVector::from_vec(project_values(grid, &restrict(problem.h_k.values(), &mask_k), n));
        let b_j = DVector::from_vec(project_values(grid, &restrict(problem.h_j.values(), &mask_j), n));
        Ok(BepSystem { problem, g_j, b_k, b_j, mask_k, mask_j })
    }

    pub fn coeffs_at(&self, lambda: f64) -> Result<DVector<Complex64>> {
        if lambda.is_nan() || lambda <= -1.0 {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must exceed -1")));
        }
        let size = self.g_j.nrows();
        let a = DMatrix::<Complex64>::identity(size, size) + &self.g_j * Complex64::new(lambda, 0.0);
        let rhs = &self.b_k + &self.b_j * Complex64::new(lambda + 1.0, 0.0);
        let chol = a.cholesky().ok_or_else(|| Error::NoConvergence {
            what: "Cholesky factorization",
            detail: format!("I + λG_J not numerically positive definite at λ = {lambda:e}"),
        })?;
        Ok(chol.solve(&rhs))
    }

    /// `(‖g − h_K‖_K, ‖g − h_J‖_J)` by quadrature on the nodes.
    pub fn errors(&self, g: &GridFunction) -> (f64, f64) {
        let grid = self.problem.grid();
        let dk: Vec<Complex64> = g.values().iter().zip(self.problem.h_k.values()).map(|(a, b)| a - b).collect();
        let dj: Vec<Complex64> = g.values().iter().zip(self.problem.h_j.values()).map(|(a, b)| a - b).collect();
        (
            weighted_norm_sqr(grid, &dk, Some(&self.mask_k)).sqrt(),
            weighted_norm_sqr(grid, &dj, Some(&self.mask_j)).sqrt(),
        )
    }

    /// `‖(λ+1) P(χ_J g − 0∨h_J) + P(χ_K g − h_K∨0)‖`, assembled on the grid.
    pub fn kkt_residual(&self, g: &GridFunction, lambda: f64) -> f64 {
        let p = self.problem;
        let field: Vec<Complex64> = (0..g.values().len())
            .map(|idx| {
                let v = g.values()[idx];
                if self.mask_j[idx] {
                    (v - p.h_j.values()[idx]) * (lambda + 1.0)
                } else if self.mask_k[idx] {
                    v - p.h_k.values()[idx]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        project_values(p.grid(), &field, p.degree).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn finish(&self, c: DVector<Complex64>, lambda: f64, iterations: usize, active: bool) -> BepSolution {
        let g0 = AnalyticCoeffs::from_vec(c.iter().copied().collect());
        let values = g0.to_grid(self.problem.grid());
        let (err_k, err_j) = self.errors(&values);
        let kkt_residual = self.kkt_residual(&values, lambda);
        BepSolution { g0, lambda, err_k, err_j, kkt_residual, iterations, active, truncation_delta: None }
    }

    fn constraint(&self, lambda: f64) -> Result<(DVector<Complex64>, f64)> {
        let c = self.coeffs_at(lambda)?;
        let g = AnalyticCoeffs::from_vec(c.iter().copied().collect()).to_grid(self.problem.grid());
        Ok((c, self.errors(&g).1))
    }
}

/// `min_c ‖h_J − Σ c_n e_n‖_{L²(J)}` from the normal equations with the Gram matrix of `J`.
pub fn feasibility_distance(h_j: &GridFunction, j: &Region, degree: usize) -> Result<Feasibility> {
    let grid = h_j.grid();
    let g = GramMatrix::on_grid(j, degree, grid)?.into_entries();
    let mask = j.node_mask(grid)?;
    let restricted: Vec<Complex64> =
        h_j.values().iter().zip(&mask).map(|(&v, &m)| if m { v } else { Complex64::new(0.0, 0.0) }).collect();
    let b = DVector::from_vec(project_values(grid, &restricted, degree));
    let (c, regularized) = match g.clone().cholesky() {
        Some(chol) => (chol.solve(&b), false),
        None => {
            let eig = hermitian_eigen(&g)?;
            let cutoff = 1e-14 * eig.values[0].max(0.0);
            let mut y = eig.vectors.adjoint() * &b;
            for (k, v) in y.iter_mut().enumerate() {
                let d = eig.values[k];
                *v = if d > cutoff { *v / d } else { Complex64::new(0.0, 0.0) };
            }
            (&eig.vectors * y, true)
        }
    };
    let approx = AnalyticCoeffs::from_vec(c.iter().copied().collect());
    let diff: Vec<Complex64> = grid.nodes().zip(h_j.values()).map(|(z, &h)| h - approx.eval(z)).collect();
    let distance = weighted_norm_sqr(grid, &diff, Some(&mask)).sqrt();
    Ok(Feasibility { distance, regularized })
}

/// `g_λ`, the solution of `(I + λ G_J) c = P(h_K ∨ (λ+1) h_J)`.
pub fn solve_at_lambda(p: &BepProblem, lambda: f64) -> Result<AnalyticCoeffs> {
    let c = BepSystem::new(p)?.coeffs_at(lambda)?;
    Ok(AnalyticCoeffs::from_vec(c.iter().copied().collect()))
}

/// `e(λ) = ‖g_λ − h_J‖_{L²(J)}`.
pub fn constraint_error(p: &BepProblem, lambda: f64) -> Result<f64> {
    Ok(BepSystem::new(p)?.constraint(lambda)?.1)
}

/// Solves the problem with default options.
pub fn solve_bep(p: &BepProblem) -> Result<BepSolution> {
    solve_bep_with(p, &BepOptions::default())
}

/// Locates the saturating `λ` by bisection in `ln(1 + λ)`.
///
/// The constraint error is assumed non-increasing in `λ`; every new evaluation is checked
/// against the bracket ends and a violation beyond `1e−12` aborts with
/// [`Error::NonMonotone`].
pub fn solve_bep_with(p: &BepProblem, options: &BepOptions) -> Result<BepSolution> {
    let mut sol = solve_core(p, options)?;
    if options.truncation_check && p.degree >= 4 {
        let coarse = p.with_degree(p.degree - 4)?;
        let opts = BepOptions { truncation_check: false, ..options.clone() };
        match solve_core(&coarse, &opts) {
            Ok(c) => sol.truncation_delta = Some(sol.g0.distance(&c.g0)),
            Err(e) => log::debug!("no truncation diagnostic at degree {}: {e}", p.degree - 4),
        }
    }
    Ok(sol)
}

fn solve_core(p: &BepProblem, options: &BepOptions) -> Result<BepSolution> {
    let grid = p.grid();
    if p.k.node_count(grid)? == 0 {
        return Err(Error::EmptyRegion(p.k.to_string()));
    }
    if options.lambda_hi.is_nan() || options.lambda_hi <= LAMBDA_LOWER {
        return Err(Error::InvalidArgument(format!("lambda_hi = {} below the search range", options.lambda_hi)));
    }
    let m = p.m;
    let scale = m.max(1.0);
    let sys = BepSystem::new(p)?;

    let (c_lo, e_lo) = sys.constraint(LAMBDA_LOWER)?;
    if e_lo <= m {
        log::debug!("constraint inactive: e(λ_lo) = {e_lo:.6e} ≤ M = {m:.6e}");
        return Ok(sys.finish(c_lo, LAMBDA_LOWER, 0, false));
    }
    let feas = feasibility_distance(&p.h_j, &p.j, p.degree)?;
    if feas.distance > m {
        return Err(Error::Infeasible { distance: feas.distance, m });
    }

    let slack = 1e-12 * e_lo.max(1.0);
    let mut lo = (1.0 + LAMBDA_LOWER).ln();
    let mut hi = (1.0 + options.lambda_hi).ln();
    let (mut c_hi, mut e_hi) = sys.constraint(hi.exp() - 1.0)?;
    let mut e_lo = e_lo;
    let mut expansions = 0;
    while e_hi >= m {
        if e_hi > e_lo + slack {
            return Err(Error::NonMonotone(format!("e rises from {e_lo:.6e} to {e_hi:.6e} on expansion")));
        }
        if expansions == 200 {
            return Err(Error::NoConvergence {
                what: "lambda bracket expansion",
                detail: format!("e({:.3e}) = {e_hi:.6e} still above M = {m:.6e}", hi.exp() - 1.0),
            });
        }
        lo = hi;
        e_lo = e_hi;
        hi += std::f64::consts::LN_2;
        expansions += 1;
        (c_hi, e_hi) = sys.constraint(hi.exp() - 1.0)?;
    }

    let target = 1e-13 * scale;
    let mut best = (c_hi, hi, e_hi);
    let mut iterations = 0;
    while iterations < options.max_iter {
        if (best.2 - m).abs() <= target {
            break;
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (c_mid, e_mid) = sys.constraint(mid.exp() - 1.0)?;
        if e_mid > e_lo + slack || e_mid < e_hi - slack {
            return Err(Error::NonMonotone(format!(
                "e({:.6e}) = {e_mid:.6e} outside [{e_hi:.6e}, {e_lo:.6e}]",
                mid.exp() - 1.0
            )));
        }
        if (e_mid - m).abs() < (best.2 - m).abs() {
            best = (c_mid.clone(), mid, e_mid);
        }
        if e_mid > m {
            lo = mid;
            e_lo = e_mid;
        } else {
            hi = mid;
            e_hi = e_mid;
        }
    }
    let (c, t, e) = best;
    if (e - m).abs() > 1e-8 * scale {
        return Err(Error::NoConvergence {
            what: "lambda bisection",
            detail: format!("|e − M| = {:.3e} after {iterations} steps (λ = {:.6e})", (e - m).abs(), t.exp() - 1.0),
        });
    }
    Ok(sys.finish(c, t.exp() - 1.0, iterations, true))
}

//! Generalized analytic functions: solutions of the main Vekua equation `∂̄w = α_f w̄` with
//! `α_f = ∂̄f / f` for a real non-vanishing conductivity `f`.

pub(crate) mod derivative;
mod pde;
pub(crate) mod teodorescu;

pub use derivative::{dbar, dz, gradient};
pub use pde::{beltrami_residual, divergence_residual, metaharmonic_residuals};
pub use teodorescu::teodorescu;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bergman::{project, project_values, AnalyticCoeffs};
use crate::disc::{DiscGrid, GridFunction, Region};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// A scalar function of one variable with its derivative, `t ↦ (φ(t), φ'(t))`.
pub type Profile = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Closed forms for which `α_f` is known exactly.
#[derive(Clone)]
pub enum ClosedForm {
    Constant(f64),
    /// `f = e^{εx}`.
    ExpX { eps: f64 },
    /// `f = e^{εxy}`.
    ExpXY { eps: f64 },
    /// `f = ρ(x) / τ(y)`.
    Separable { rho: Profile, tau: Profile },
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::Constant(c) => write!(f, "Constant({c})"),
            ClosedForm::ExpX { eps } => write!(f, "ExpX({eps})"),
            ClosedForm::ExpXY { eps } => write!(f, "ExpXY({eps})"),
            ClosedForm::Separable { .. } => write!(f, "Separable"),
        }
    }
}

impl ClosedForm {
    fn value(&self, z: Complex64) -> f64 {
        match self {
            ClosedForm::Constant(c) => *c,
            ClosedForm::ExpX { eps } => (eps * z.re).exp(),
            ClosedForm::ExpXY { eps } => (eps * z.re * z.im).exp(),
            ClosedForm::Separable { rho, tau } => rho(z.re).0 / tau(z.im).0,
        }
    }

    fn alpha(&self, z: Complex64) -> Complex64 {
        match self {
            ClosedForm::Constant(_) => Complex64::new(0.0, 0.0),
            ClosedForm::ExpX { eps } => Complex64::new(0.5 * eps, 0.0),
            ClosedForm::ExpXY { eps } => Complex64::new(z.im, z.re) * (0.5 * eps),
            ClosedForm::Separable { rho, tau } => {
                let (r, dr) = rho(z.re);
                let (t, dt) = tau(z.im);
                Complex64::new(0.5 * dr / r, -0.5 * dt / t)
            }
        }
    }
}

/// A real conductivity `f` with `1/k ≤ |f| ≤ k` on the grid.
#[derive(Debug, Clone)]
pub struct Conductivity {
    f: GridFunction,
    k: f64,
    tag: Option<ClosedForm>,
}

impl Conductivity {
    /// Samples a closed form on `grid`.
    pub fn closed_form(grid: &Arc<DiscGrid>, form: ClosedForm) -> Result<Self> {
        let f = GridFunction::from_fn(grid, |z| Complex64::new(form.value(z), 0.0));
        let mut c = Self::sampled(f, None)?;
        c.tag = Some(form);
        Ok(c)
    }

    pub fn constant(grid: &Arc<DiscGrid>, value: f64) -> Result<Self> {
        Self::closed_form(grid, ClosedForm::Constant(value))
    }

    pub fn exp_x(grid: &Arc<DiscGrid>, eps: f64) -> Result<Self> {
        Self::closed_form(grid, ClosedForm::ExpX { eps })
    }

    pub fn exp_xy(grid: &Arc<DiscGrid>, eps: f64) -> Result<Self> {
        Self::closed_form(grid, ClosedForm::ExpXY { eps })
    }

    /// Grid samples without a closed form; `α_f` will be differentiated numerically.
    ///
    /// With `bound = None` the tightest `k` is computed from the samples.
    pub fn sampled(f: GridFunction, bound: Option<f64>) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (idx, v) in f.values().iter().enumerate() {
            if v.im.abs() > 1e-14 * v.re.abs().max(1.0) {
                return Err(Error::ConductivityBound(format!("non-real value {v} at node {idx}")));
            }
            lo = lo.min(v.re.abs());
            hi = hi.max(v.re.abs());
        }
        if lo == 0.0 {
            return Err(Error::ConductivityBound("f vanishes on the grid".into()));
        }
        let tight = hi.max(1.0 / lo);
        let k = match bound {
            Some(k) if k >= tight => k,
            Some(k) => {
                return Err(Error::ConductivityBound(format!("samples span [{lo:.3e}, {hi:.3e}], bound k = {k}")))
            }
            None => tight,
        };
        let f = f.map(|v| Complex64::new(v.re, 0.0));
        Ok(Conductivity { f, k, tag: None })
    }

    pub fn values(&self) -> &GridFunction {
        &self.f
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        self.f.grid()
    }

    pub fn bound(&self) -> f64 {
        self.k
    }

    pub fn tag(&self) -> Option<&ClosedForm> {
        self.tag.as_ref()
    }

    /// Whether `f` is constant, so that `A_f² = A²`.
    pub fn is_constant(&self) -> bool {
        matches!(self.tag, Some(ClosedForm::Constant(_)))
    }
}

/// `α_f = ∂̄f / f`, exact for closed forms and by numerical differentiation otherwise.
pub fn alpha_from_f(f: &Conductivity) -> Result<GridFunction> {
    let floor = 1.0 / f.k;
    if let Some(idx) = f.f.values().iter().position(|v| v.norm() < floor * (1.0 - 1e-12)) {
        return Err(Error::ConductivityBound(format!("|f| < 1/k at node {idx}")));
    }
    match &f.tag {
        Some(form) => Ok(GridFunction::from_fn(f.grid(), |z| form.alpha(z))),
        None => dbar(&f.f)?.zip_with(&f.f, |d, v| d / v),
    }
}

/// A grid function together with the coefficient `α` of the Vekua equation it solves.
#[derive(Debug, Clone)]
pub struct VekuaFunction {
    pub w: GridFunction,
    pub alpha: GridFunction,
    /// `vekua_residual(w, alpha, degree)`.
    pub residual: f64,
    pub degree: usize,
    /// Whether the construction met its tolerance.
    pub converged: bool,
    pub iterations: usize,
    /// Norms `‖w^{k+1} − w^k‖` of the lifting iteration.
    pub steps: Vec<f64>,
}

impl VekuaFunction {
    /// Wraps an existing function and measures its residual at degree `degree`.
    pub fn new(w: GridFunction, alpha: GridFunction, degree: usize) -> Result<Self> {
        let residual = vekua_residual(&w, &alpha, degree)?;
        Ok(VekuaFunction { w, alpha, residual, degree, converged: true, iterations: 0, steps: Vec::new() })
    }

    /// Ratios of consecutive step norms of the lifting iteration.
    pub fn step_ratios(&self) -> Vec<f64> {
        self.steps.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}

fn vekua_part(w: &GridFunction, alpha: &GridFunction) -> Result<GridFunction> {
    Ok(teodorescu(&alpha.zip_with(w, |a, v| a * v.conj())?))
}

/// `‖u − P_N u‖` with `u = w − T[α w̄]`; zero exactly when `u` is a polynomial of degree ≤ `N`.
pub fn vekua_residual(w: &GridFunction, alpha: &GridFunction, degree: usize) -> Result<f64> {
    let u = w - &vekua_part(w, alpha)?;
    let p = project(&u, degree)?;
    Ok((&u - &p.to_grid(u.grid())).norm())
}

/// Solves `w = seed + T[α w̄]` by fixed-point iteration.
///
/// Stops once a step is at most `tol` in `L²(𝔻)`. Three consecutive growing steps abort with
/// [`Error::Divergence`]; running out of iterations returns the last iterate with
/// `converged = false`.
pub fn vekua_lift(seed: &AnalyticCoeffs, alpha: &GridFunction, tol: f64, max_iter: usize) -> Result<VekuaFunction> {
    lift_labelled(seed, alpha, tol, max_iter, || format!("{:?}", seed.coeffs()))
}

fn lift_labelled(
    seed: &AnalyticCoeffs,
    alpha: &GridFunction,
    tol: f64,
    max_iter: usize,
    label: impl Fn() -> String,
) -> Result<VekuaFunction> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let grid = alpha.grid();
    grid.check_degree(seed.degree())?;
    let base = seed.to_grid(grid);
    let mut w = base.clone();
    let mut steps: Vec<f64> = Vec::new();
    let mut growth = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        let next = &base + &vekua_part(&w, alpha)?;
        let step = (&next - &w).norm();
        if steps.last().is_some_and(|&last| step > last) {
            growth += 1;
        } else {
            growth = 0;
        }
        steps.push(step);
        w = next;
        if growth >= 3 {
            return Err(Error::Divergence { seed: label(), steps });
        }
        if step <= tol {
            converged = true;
            break;
        }
    }
    let residual = vekua_residual(&w, alpha, seed.degree())?;
    let iterations = steps.len();
    if !converged {
        log::info!("lift of {} stopped after {iterations} steps, last step {:.3e}", label(), steps.last().unwrap_or(&0.0));
    }
    Ok(VekuaFunction { w, alpha: alpha.clone(), residual, degree: seed.degree(), converged, iterations, steps })
}

/// The factorization `w = e^s F` of the similarity principle.
#[derive(Debug, Clone)]
pub struct Similarity {
    /// `s = T[α w̄ / w]`.
    pub s: GridFunction,
    /// `F = w e^{−s}`, analytic up to discretization.
    pub analytic_factor: GridFunction,
    pub s_sup: f64,
    pub alpha_sup: f64,
    /// `‖s‖_∞ ≤ 4‖α‖_∞ + 1e−8`.
    pub within_bound: bool,
    /// `‖∂̄F‖ / ‖F‖`.
    pub dbar_residual: f64,
}

/// Builds `s = T[α w̄ / w]` and `F = w e^{−s}` for a non-vanishing `w`.
pub fn similarity_factor(w: &VekuaFunction) -> Result<Similarity> {
    let scale = w.w.sup_norm();
    if let Some(idx) = w.w.values().iter().position(|v| v.norm() <= 1e-300_f64.max(1e-14 * scale)) {
        return Err(Error::VanishingFunction(idx));
    }
    let ratio = w.alpha.zip_with(&w.w, |a, v| a * v.conj() / v)?;
    let s = teodorescu(&ratio);
    let analytic_factor = w.w.zip_with(&s, |v, s| v * (-s).exp())?;
    let dbar_residual = dbar(&analytic_factor)?.norm() / analytic_factor.norm();
    let s_sup = s.sup_norm();
    let alpha_sup = w.alpha.sup_norm();
    let within_bound = s_sup <= 4.0 * alpha_sup + 1e-8;
    if !within_bound {
        log::info!("similarity bound violated: ‖s‖∞ = {s_sup:.6e} > 4‖α‖∞ = {:.6e}", 4.0 * alpha_sup);
    }
    Ok(Similarity { s, analytic_factor, s_sup, alpha_sup, within_bound, dbar_residual })
}

/// `P w + (I − P) T[α w̄]` with `P` the degree-`N` Bergman projection; the identity on `A_f²`.
pub fn pf_restricted(w: &VekuaFunction, degree: usize) -> Result<GridFunction> {
    let grid = w.w.grid();
    grid.check_degree(degree)?;
    let tw = vekua_part(&w.w, &w.alpha)?;
    let pw = AnalyticCoeffs::from_vec(project_values(grid, w.w.values(), degree)).to_grid(grid);
    let ptw = AnalyticCoeffs::from_vec(project_values(grid, tw.values(), degree)).to_grid(grid);
    Ok(&pw + &(&tw - &ptw))
}

/// Real inner product `Re⟨g, h⟩_Ω` by node-wise quadrature.
pub fn real_inner(g: &GridFunction, h: &GridFunction, region: &Region) -> Result<f64> {
    Ok(crate::disc::inner_product(g, h, region)?.re)
}

/// Lifts of `e_0, …, e_N, i e_0, …, i e_N`: a real spanning family of the truncated `A_f²`.
#[derive(Debug, Clone)]
pub struct VekuaBasis {
    alpha: GridFunction,
    degree: usize,
    elements: Vec<VekuaFunction>,
    gram: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl VekuaBasis {
    /// Lifts all `2(N+1)` seeds, in parallel.
    pub fn build(alpha: &GridFunction, degree: usize, tol: f64, max_iter: usize) -> Result<Self> {
        alpha.grid().check_degree(degree)?;
        let seeds: Vec<(usize, bool)> =
            (0..=degree).map(|n| (n, false)).chain((0..=degree).map(|n| (n, true))).collect();
        let elements = seeds
            .par_iter()
            .map(|&(n, imaginary)| {
                let mut seed = AnalyticCoeffs::zeros(degree);
                let mut coeffs = seed.coeffs().to_vec();
                coeffs[n] = if imaginary { Complex64::i() } else { Complex64::new(1.0, 0.0) };
                seed = AnalyticCoeffs::from_vec(coeffs);
                lift_labelled(&seed, alpha, tol, max_iter, || seed_label(n, imaginary))
            })
            .collect::<Result<Vec<_>>>()?;
        let gram = real_gram(&elements, &Region::disc())?;
        let (eig, _) = symmetric_eigen(&gram)?;
        let min_eigenvalue = *eig.last().expect("basis is non-empty");
        Ok(VekuaBasis { alpha: alpha.clone(), degree, elements, gram, min_eigenvalue })
    }

    pub fn alpha(&self) -> &GridFunction {
        &self.alpha
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn elements(&self) -> &[VekuaFunction] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        self.alpha.grid()
    }

    /// `Re⟨w_l, w_m⟩_𝔻`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Smallest eigenvalue of the real Gram matrix over `𝔻`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// `Re⟨w_l, w_m⟩_Ω`.
    pub fn gram_on(&self, region: &Region) -> Result<DMatrix<f64>> {
        real_gram(&self.elements, region)
    }

    /// `(Re⟨h, w_m⟩_Ω)_m`.
    pub fn moments(&self, h: &GridFunction, region: &Region) -> Result<DVector<f64>> {
        let values = self.elements.iter().map(|e| real_inner(h, &e.w, region)).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(values))
    }

    /// `Σ a_m w_m`.
    pub fn combine(&self, coeffs: &[f64]) -> GridFunction {
        assert_eq!(coeffs.len(), self.elements.len(), "one coefficient per basis element");
        let grid = self.grid();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (a, e) in coeffs.iter().zip(&self.elements) {
            for (v, w) in values.iter_mut().zip(e.w.values()) {
                *v += w * a;
            }
        }
        GridFunction::new(grid.clone(), values).expect("finite combination of finite samples")
    }

    /// Orthogonal projection onto the real span in `L²(𝔻)`: coefficients and the projected function.
    pub fn project(&self, h: &GridFunction) -> Result<(Vec<f64>, GridFunction)> {
        let b = self.moments(h, &Region::disc())?;
        let coeffs = solve_spd(&self.gram, &b)?;
        let v: Vec<f64> = coeffs.iter().copied().collect();
        let g = self.combine(&v);
        Ok((v, g))
    }
}

fn seed_label(n: usize, imaginary: bool) -> String {
    if imaginary {
        format!("i·e_{n}")
    } else {
        format!("e_{n}")
    }
}

pub(crate) fn real_gram(elements: &[VekuaFunction], region: &Region) -> Result<DMatrix<f64>> {
    let n = elements.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = real_inner(&elements[i].w, &elements[j].w, region)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Symmetric positive (semi)definite solve: Cholesky, falling back to a truncated
/// eigen-decomposition.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    let (vals, vecs) = symmetric_eigen(a)?;
    let cutoff = 1e-13 * vals[0].max(0.0);
    let mut y = vecs.transpose() * b;
    for (k, v) in y.iter_mut().enumerate() {
        *v = if vals[k] > cutoff { *v / vals[k] } else { 0.0 };
    }
    Ok(vecs * y)
}

//! The truncated Bergman space: expansions in `e_n(z) = √(n+1) zⁿ`, the orthogonal projection,
//! the reproducing kernel and Gram matrices of characteristic-function Toeplitz operators.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::disc::{DiscGrid, GridFunction, Region, Shape};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A polynomial `Σ_{n ≤ N} c_n e_n` of degree `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCoeffs {
    coeffs: Vec<Complex64>,
}

impl AnalyticCoeffs {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("need at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(AnalyticCoeffs { coeffs })
    }

    pub(crate) fn from_vec(coeffs: Vec<Complex64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        AnalyticCoeffs { coeffs }
    }

    pub fn zeros(degree: usize) -> Self {
        AnalyticCoeffs { coeffs: vec![ZERO; degree + 1] }
    }

    /// The basis element `e_k` viewed at degree `degree`.
    pub fn unit(degree: usize, k: usize) -> Self {
        assert!(k <= degree, "basis index {k} above degree {degree}");
        let mut c = Self::zeros(degree);
        c.coeffs[k] = Complex64::new(1.0, 0.0);
        c
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `‖g‖_{A²}` by Parseval.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest coefficient-wise difference; missing coefficients count as zero.
    pub fn sup_distance(&self, other: &AnalyticCoeffs) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or(ZERO);
                let b = other.coeffs.get(k).copied().unwrap_or(ZERO);
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `A²` distance; missing coefficients count as zero.
    pub fn distance(&self, other: &AnalyticCoeffs) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or(ZERO);
                let b = other.coeffs.get(k).copied().unwrap_or(ZERO);
                (a - b).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `Σ c_n e_n(z)` by Horner's rule on `zⁿ`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(ZERO, |acc, (n, c)| acc * z + c * ((n + 1) as f64).sqrt())
    }

    /// Samples at every node of `grid`.
    pub fn to_grid(&self, grid: &Arc<DiscGrid>) -> GridFunction {
        GridFunction::from_fn(grid, |z| self.eval(z))
    }
}

/// The Bergman projection truncated at degree `n`: `c_k = ⟨g, e_k⟩_𝔻`.
pub fn project(g: &GridFunction, n: usize) -> Result<AnalyticCoeffs> {
    let grid = g.grid();
    grid.check_degree(n)?;
    Ok(AnalyticCoeffs::from_vec(project_values(grid, g.values(), n)))
}

pub(crate) fn project_values(grid: &DiscGrid, values: &[Complex64], n: usize) -> Vec<Complex64> {
    let n_theta = grid.n_theta();
    let mut coeffs = vec![ZERO; n + 1];
    let mut ring = vec![ZERO; n + 1];
    for (i, &w) in grid.radial_weights().iter().enumerate() {
        ring.iter_mut().for_each(|c| *c = ZERO);
        for (idx, &v) in values.iter().enumerate().skip(i * n_theta).take(n_theta) {
            let zc = grid.node(idx).conj();
            let mut p = v;
            for c in ring.iter_mut() {
                *c += p;
                p *= zc;
            }
        }
        for (c, r) in coeffs.iter_mut().zip(&ring) {
            *c += r * w;
        }
    }
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= ((k + 1) as f64).sqrt() / n_theta as f64;
    }
    coeffs
}

/// `K(z, ζ) = 1 / (1 − z̄ζ)²`.
pub fn kernel_eval(z: Complex64, zeta: Complex64) -> Result<Complex64> {
    let d = Complex64::new(1.0, 0.0) - z.conj() * zeta;
    if d.norm() == 0.0 {
        return Err(Error::KernelPole);
    }
    Ok((d * d).inv())
}

/// `Σ_{n ≤ degree} conj(e_n(z)) e_n(ζ)`.
pub fn truncated_kernel(z: Complex64, zeta: Complex64, degree: usize) -> Complex64 {
    let q = z.conj() * zeta;
    let mut p = Complex64::new(1.0, 0.0);
    let mut sum = ZERO;
    for n in 0..=degree {
        sum += p * (n + 1) as f64;
        p *= q;
    }
    sum
}

/// `P g(z) = ∫ g(ζ) conj(K(z, ζ)) dA(ζ)` by direct quadrature.
///
/// Independent of [`project`]; meant as a cross-check away from the boundary, where the
/// kernel stays smooth on the grid.
pub fn kernel_projection(g: &GridFunction, z: Complex64) -> Result<Complex64> {
    let grid = g.grid();
    let mut values = Vec::with_capacity(grid.len());
    for (zeta, &gv) in grid.nodes().zip(g.values()) {
        values.push(gv * kernel_eval(z, zeta)?.conj());
    }
    Ok(grid.integrate(&values))
}

/// The matrix `G_mn = ⟨χ_Ω e_n, e_m⟩` of the Toeplitz operator `P(χ_Ω ·)` on degree ≤ `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    region: Region,
    degree: usize,
    entries: DMatrix<Complex64>,
}

impl GramMatrix {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    /// Quadrature Gram with node-wise membership on `grid`, consistent with
    /// [`crate::disc::inner_product`] on the same grid.
    pub fn on_grid(region: &Region, degree: usize, grid: &DiscGrid) -> Result<Self> {
        grid.check_degree(degree)?;
        let mask = region.node_mask(grid)?;
        let n_theta = grid.n_theta();
        let size = degree + 1;
        let mut entries = DMatrix::<Complex64>::zeros(size, size);
        // per ring, Σ_j χ e^{i d θ_j} for d = n − m ∈ [0, N]
        let mut moments = vec![ZERO; size];
        for (i, (&r, &w)) in grid.radial_nodes().iter().zip(grid.radial_weights()).enumerate() {
            moments.iter_mut().for_each(|c| *c = ZERO);
            for j in 0..n_theta {
                if mask[i * n_theta + j] {
                    for (d, c) in moments.iter_mut().enumerate() {
                        *c += grid.unit_root((d * j) as i64);
                    }
                }
            }
            let w = w / n_theta as f64;
            let powers: Vec<f64> = (0..=2 * degree).map(|k| r.powi(k as i32)).collect();
            for n in 0..size {
                for m in 0..=n {
                    entries[(m, n)] += moments[n - m] * (w * powers[n + m]);
                }
            }
        }
        for n in 0..size {
            for m in 0..=n {
                let scale = (((m + 1) * (n + 1)) as f64).sqrt();
                entries[(m, n)] *= scale;
            }
        }
        hermitian_from_upper(&mut entries);
        Ok(GramMatrix { region: region.clone(), degree, entries })
    }
}

fn hermitian_from_upper(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            a[(j, i)] = a[(i, j)].conj();
        }
    }
}

/// Gram matrix of `region` at degree `N`, from closed forms when the shape has them.
///
/// * `a𝔻`: diagonal with `G_nn = a^{2(n+1)}`;
/// * sector `|arg z| < θ`: `G_mn = √((m+1)(n+1))/(m+n+2) · 2 sin((n−m)θ)/((n−m)π)`, `G_nn = θ/π`;
/// * complements: `I − G`;
/// * masks: quadrature on the mask's own grid, limited to its exact degree.
pub fn gram(region: &Region, degree: usize) -> Result<GramMatrix> {
    let size = degree + 1;
    let mut entries = match region.shape() {
        Shape::Disc => DMatrix::identity(size, size),
        Shape::RadialDisc { a } => {
            let a2 = a * a;
            DMatrix::from_fn(size, size, |m, n| {
                if m == n {
                    Complex64::new(a2.powi(n as i32 + 1), 0.0)
                } else {
                    ZERO
                }
            })
        }
        Shape::Sector { theta } => DMatrix::from_fn(size, size, |m, n| {
            if m == n {
                return Complex64::new(theta / PI, 0.0);
            }
            // symmetric in (m, n): the sine is odd and so is its denominator
            let d = n as f64 - m as f64;
            let v = (((m + 1) * (n + 1)) as f64).sqrt() / (m + n + 2) as f64 * 2.0 * (d * theta).sin()
                / (d * PI);
            Complex64::new(v, 0.0)
        }),
        Shape::Mask { grid, .. } => {
            let masked = Region::mask(grid.clone(), region.node_mask(grid)?)?;
            let g = GramMatrix::on_grid(&masked, degree, grid)?;
            return Ok(GramMatrix { region: region.clone(), degree, entries: g.entries });
        }
    };
    if region.is_complement() {
        entries = DMatrix::<Complex64>::identity(size, size) - entries;
    }
    Ok(GramMatrix { region: region.clone(), degree, entries })
}

/// Eigenvalues of a Gram matrix, sorted descending.
pub fn spectrum(g: &GramMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(&g.entries)?.values)
}

//! Complex samples on a [`DiscGrid`] and the area inner product.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::quadrature::DiscGrid;
use super::region::Region;
use crate::error::{Error, Result};

/// A function on the disc, sampled at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<DiscGrid>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Arc<DiscGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Arc<DiscGrid>, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = grid.nodes().map(f).collect();
        GridFunction { grid: grid.clone(), values }
    }

    pub fn constant(grid: &Arc<DiscGrid>, c: Complex64) -> Self {
        GridFunction { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: &Arc<DiscGrid>) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub(crate) fn from_raw(grid: Arc<DiscGrid>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GridFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination with the node position available.
    pub fn map_with_node(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let values = self.values.iter().enumerate().map(|(idx, &v)| f(self.grid.node(idx), v)).collect();
        GridFunction { grid: self.grid.clone(), values }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { grid: self.grid.clone(), values })
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// Zero outside `region`.
    pub fn restrict(&self, region: &Region) -> Result<Self> {
        let mask = region.node_mask(&self.grid)?;
        let values = self.values.iter().zip(&mask).map(|(&v, &m)| if m { v } else { Complex64::new(0.0, 0.0) }).collect();
        Ok(GridFunction { grid: self.grid.clone(), values })
    }

    /// `‖g‖_{L²(𝔻)}` by quadrature.
    pub fn norm(&self) -> f64 {
        weighted_norm_sqr(&self.grid, &self.values, None).sqrt()
    }

    /// `‖g‖_{L²(Ω)}` by quadrature.
    pub fn norm_on(&self, region: &Region) -> Result<f64> {
        let mask = region.node_mask(&self.grid)?;
        Ok(weighted_norm_sqr(&self.grid, &self.values, Some(&mask)).sqrt())
    }

    /// Largest modulus over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn weighted_norm_sqr(grid: &DiscGrid, values: &[Complex64], mask: Option<&[bool]>) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(idx, _)| mask.is_none_or(|m| m[*idx]))
        .map(|(idx, v)| grid.weight(idx) * v.norm_sqr())
        .sum()
}

fn binary(a: &GridFunction, b: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> GridFunction {
    a.zip_with(b, f).expect("grid functions on different grids")
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        binary(self, rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        binary(self, rhs, |a, b| a - b)
    }
}

/// Pointwise product.
impl Mul for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        binary(self, rhs, |a, b| a * b)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.map(|v| -v)
    }
}

/// `⟨g, h⟩_Ω = ∫_Ω g h̄ dA` by node-wise quadrature.
pub fn inner_product(g: &GridFunction, h: &GridFunction, region: &Region) -> Result<Complex64> {
    g.check_grid(h)?;
    let grid = g.grid();
    let mask = region.node_mask(grid)?;
    let n_theta = grid.n_theta();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, &w) in grid.radial_weights().iter().enumerate() {
        let ring_nodes = i * n_theta..(i + 1) * n_theta;
        let mut ring = Complex64::new(0.0, 0.0);
        for ((a, b), &inside) in g.values[ring_nodes.clone()].iter().zip(&h.values[ring_nodes.clone()]).zip(&mask[ring_nodes]) {
            if inside {
                ring += a * b.conj();
            }
        }
        total += ring * w;
    }
    Ok(total / n_theta as f64)
}

/// `h_K ∨ h_J`: equal to `h_K` on the nodes of `K` and to `h_J` elsewhere.
pub fn glue(h_k: &GridFunction, h_j: &GridFunction, k: &Region) -> Result<GridFunction> {
    h_k.check_grid(h_j)?;
    let mask = k.node_mask(h_k.grid())?;
    let values = mask
        .iter()
        .zip(h_k.values.iter().zip(&h_j.values))
        .map(|(&m, (&a, &b))| if m { a } else { b })
        .collect();
    Ok(GridFunction::from_raw(h_k.grid.clone(), values))
}

/// The orthonormal basis `e_n(z) = √(n+1) zⁿ` of `A²(𝔻)`.
pub fn eval_basis(n: usize, z: Complex64) -> Complex64 {
    z.powu(n as u32) * ((n + 1) as f64).sqrt()
}

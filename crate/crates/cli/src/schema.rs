//! JSON interchange formats. Complex numbers are `[re, im]` pairs.

use std::sync::Arc;

use bergbep::bep::BepOptions;
use bergbep::bergman::AnalyticCoeffs;
use bergbep::disc::{build_grid, DiscGrid, GridFunction, Region};
use bergbep::vekua::Conductivity;
use bergbep::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};

/// Bumped whenever a field of either file format changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const LAMBDA_CONVENTION: &str =
    "(I + lambda G_J) c = b_K + (lambda + 1) b_J with lambda > -1; the constraint weight on J is lambda + 1";

pub type Pair = [f64; 2];

pub fn to_pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

pub fn from_pair(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<DiscGrid>> {
        build_grid(self.n_r, self.n_theta)
    }
}

/// Closed-form data functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Builtin {
    Const { value: Pair },
    ZBar,
    Abs2,
    ExpX { eps: f64 },
    ExpXy { eps: f64 },
    Basis { n: usize },
}

impl Builtin {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Builtin::Const { value } => from_pair(value),
            Builtin::ZBar => z.conj(),
            Builtin::Abs2 => Complex64::new(z.norm_sqr(), 0.0),
            Builtin::ExpX { eps } => Complex64::new((eps * z.re).exp(), 0.0),
            Builtin::ExpXy { eps } => Complex64::new((eps * z.re * z.im).exp(), 0.0),
            Builtin::Basis { n } => bergbep::disc::eval_basis(*n, z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// Coefficients in the orthonormal basis `e_n = √(n+1) zⁿ`.
    Coeffs { coeffs: Vec<Pair> },
    Builtin(Builtin),
    /// One value per node, in grid order.
    Grid { values: Vec<Pair> },
}

impl FunctionSpec {
    pub fn sample(&self, grid: &Arc<DiscGrid>) -> Result<GridFunction> {
        match self {
            FunctionSpec::Coeffs { coeffs } => {
                check_finite(coeffs.iter().flatten().copied())?;
                Ok(AnalyticCoeffs::new(coeffs.iter().map(from_pair).collect())?.to_grid(grid))
            }
            FunctionSpec::Builtin(b) => Ok(GridFunction::from_fn(grid, |z| b.eval(z))),
            FunctionSpec::Grid { values } => {
                if values.len() != grid.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{} grid values for a grid of {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
                GridFunction::new(grid.clone(), values.iter().map(from_pair).collect())
            }
        }
    }
}

fn check_finite(values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite coefficient {v}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    Disc,
    RadialDisc { a: f64 },
    Annulus { a: f64 },
    Sector { theta: f64 },
    /// Per-node membership on the problem grid.
    Mask { inside: Vec<bool> },
    Complement { of: Box<RegionSpec> },
}

impl RegionSpec {
    pub fn build(&self, grid: &Arc<DiscGrid>) -> Result<Region> {
        match self {
            RegionSpec::Disc => Ok(Region::disc()),
            RegionSpec::RadialDisc { a } => Region::radial_disc(*a),
            RegionSpec::Annulus { a } => Region::annulus(*a),
            RegionSpec::Sector { theta } => Region::sector(*theta),
            RegionSpec::Mask { inside } => Region::mask(grid.clone(), inside.clone()),
            RegionSpec::Complement { of } => Ok(of.build(grid)?.complement()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConductivitySpec {
    Constant { value: f64 },
    ExpX { eps: f64 },
    ExpXy { eps: f64 },
    /// Real samples in grid order, with an optional bound `k`.
    Grid { values: Vec<f64>, bound: Option<f64> },
}

impl ConductivitySpec {
    pub fn build(&self, grid: &Arc<DiscGrid>) -> Result<Conductivity> {
        match self {
            ConductivitySpec::Constant { value } => Conductivity::constant(grid, *value),
            ConductivitySpec::ExpX { eps } => Conductivity::exp_x(grid, *eps),
            ConductivitySpec::ExpXy { eps } => Conductivity::exp_xy(grid, *eps),
            ConductivitySpec::Grid { values, bound } => {
                let f = FunctionSpec::Grid { values: values.iter().map(|&v| [v, 0.0]).collect() };
                Conductivity::sampled(f.sample(grid)?, *bound)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iter: usize,
    pub lambda_hi: f64,
    pub truncation_check: bool,
    /// Stopping tolerance of the Vekua lifts.
    pub lift_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = BepOptions::default();
        SolverSpec { max_iter: o.max_iter, lambda_hi: o.lambda_hi, truncation_check: o.truncation_check, lift_tol: 1e-13 }
    }
}

impl SolverSpec {
    pub fn bep_options(&self) -> BepOptions {
        BepOptions { max_iter: self.max_iter, lambda_hi: self.lambda_hi, truncation_check: self.truncation_check }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub grid: GridSpec,
    /// The region `K` carrying the data to fit; `J` is its complement.
    pub region: RegionSpec,
    pub h_k: FunctionSpec,
    pub h_j: FunctionSpec,
    pub m: f64,
    pub degree: usize,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conductivity: Option<ConductivitySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub active: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vekua_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kept: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub version: u32,
    pub tool_version: String,
    pub lambda_convention: String,
    pub degree: usize,
    pub grid: GridSpec,
    /// Complex coefficients in `e_n` for the analytic problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Pair>>,
    /// Real coefficients over the lifts of `e_0, …, e_N, i e_0, …, i e_N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_coefficients: Option<Vec<f64>>,
    pub lambda: f64,
    pub err_k: f64,
    pub err_j: f64,
    pub kkt_residual: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub version: u32,
    pub degree: usize,
    pub coefficients: Vec<Pair>,
}

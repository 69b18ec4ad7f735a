//! The subcommands, independent of argument parsing.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use bergbep::bep::{solve_bep_oracle, solve_bep_with, BepProblem, BepSolution};
use bergbep::bergman::{gram, project as bergman_project, spectrum as gram_spectrum};
use bergbep::disc::{DiscGrid, GridFunction, Region, Shape};
use bergbep::fbep::{solve_fbep, FbepProblem};
use bergbep::vekua::teodorescu as teodorescu_transform;
use bergbep::Error;

use crate::schema::{
    to_pair, Builtin, CoefficientFile, Diagnostics, FunctionSpec, GridSpec, ProblemFile, SolutionFile, LAMBDA_CONVENTION,
    SCHEMA_VERSION,
};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Input = 1,
    Infeasible = 2,
    NoConvergence = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: ExitCode::Input, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible { .. } => ExitCode::Infeasible,
            Error::IllConditioned(_) => ExitCode::NoConvergence,
            e if e.is_convergence_failure() => ExitCode::NoConvergence,
            _ => ExitCode::Input,
        };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A function given either as a JSON file holding a [`FunctionSpec`] or as a builtin name.
#[derive(Debug, Clone)]
pub enum FunctionInput {
    File(PathBuf),
    Builtin(Builtin),
}

impl FunctionInput {
    fn spec(&self) -> CliResult<FunctionSpec> {
        match self {
            FunctionInput::File(path) => read_json(path),
            FunctionInput::Builtin(b) => Ok(FunctionSpec::Builtin(b.clone())),
        }
    }
}

/// Parses `const:RE[,IM]`, `z_bar`, `abs2`, `exp_x:EPS`, `exp_xy:EPS` and `basis:N`.
impl FromStr for Builtin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let arg = || arg.ok_or_else(|| format!("builtin `{name}` needs a parameter"));
        let real = |a: &str| a.trim().parse::<f64>().map_err(|e| format!("`{a}`: {e}"));
        match name {
            "z_bar" => Ok(Builtin::ZBar),
            "abs2" => Ok(Builtin::Abs2),
            "const" => {
                let a = arg()?;
                let (re, im) = a.split_once(',').unwrap_or((a, "0"));
                Ok(Builtin::Const { value: [real(re)?, real(im)?] })
            }
            "exp_x" => Ok(Builtin::ExpX { eps: real(arg()?)? }),
            "exp_xy" => Ok(Builtin::ExpXy { eps: real(arg()?)? }),
            "basis" => Ok(Builtin::Basis { n: arg()?.trim().parse().map_err(|e| format!("basis index: {e}"))? }),
            _ => Err(format!("unknown builtin `{name}`")),
        }
    }
}

/// Parses `NRxNT`.
impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once('x').ok_or_else(|| format!("grid `{s}` is not of the form NRxNT"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("grid `{s}`: {e}"));
        Ok(GridSpec { n_r: parse(a)?, n_theta: parse(b)? })
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::input(format!("stdout: {e}"))),
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("schema types serialize");
    text.push('\n');
    emit(out, text.as_bytes())
}

fn emit_csv(out: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::input(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(format!("csv: {e}")))?;
    emit(out, &bytes)
}

struct Loaded {
    file: ProblemFile,
    grid: Arc<DiscGrid>,
    k: Region,
    h_k: GridFunction,
    h_j: GridFunction,
}

fn load(path: &Path) -> CliResult<Loaded> {
    let file: ProblemFile = read_json(path)?;
    if file.version != SCHEMA_VERSION {
        return Err(CliError::input(format!("schema version {} is not {SCHEMA_VERSION}", file.version)));
    }
    let grid = file.grid.build()?;
    let k = file.region.build(&grid)?;
    let h_k = file.h_k.sample(&grid)?;
    let h_j = file.h_j.sample(&grid)?;
    Ok(Loaded { file, grid, k, h_k, h_j })
}

fn bep_problem(l: &Loaded, m: f64) -> CliResult<BepProblem> {
    Ok(BepProblem::new(l.k.clone(), l.h_k.clone(), l.h_j.clone(), m, l.file.degree)?)
}

fn bep_solution(file: &ProblemFile, sol: &BepSolution, oracle_delta: Option<f64>) -> SolutionFile {
    SolutionFile {
        version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        lambda_convention: LAMBDA_CONVENTION.to_string(),
        degree: file.degree,
        grid: file.grid,
        coefficients: Some(sol.g0.coeffs().iter().map(|&c| to_pair(c)).collect()),
        real_coefficients: None,
        lambda: sol.lambda,
        err_k: sol.err_k,
        err_j: sol.err_j,
        kkt_residual: sol.kkt_residual,
        diagnostics: Diagnostics {
            iterations: sol.iterations,
            active: sol.active,
            truncation_delta: sol.truncation_delta,
            oracle_delta,
            vekua_residual: None,
            kept: None,
        },
    }
}

pub fn solve_bep(problem: &Path, out: Option<&Path>, oracle: bool) -> CliResult<()> {
    let l = load(problem)?;
    if l.file.conductivity.is_some() {
        return Err(CliError::input("problem carries a conductivity; use solve-fbep"));
    }
    let p = bep_problem(&l, l.file.m)?;
    let sol = solve_bep_with(&p, &l.file.solver.bep_options())?;
    log::info!("lambda = {:.6e} after {} iterations, err_J = {:.6e}", sol.lambda, sol.iterations, sol.err_j);
    let delta = if oracle {
        let check = solve_bep_oracle(&p)?;
        let d = sol.g0.sup_distance(&check.g0);
        log::info!("oracle cross-check: coefficient difference {d:.3e}");
        Some(d)
    } else {
        None
    };
    emit_json(out, &bep_solution(&l.file, &sol, delta))
}

pub fn solve_fbep_cmd(problem: &Path, out: Option<&Path>) -> CliResult<()> {
    let l = load(problem)?;
    let spec = l.file.conductivity.as_ref().ok_or_else(|| CliError::input("f-BEP problem needs a conductivity"))?;
    let f = spec.build(&l.grid)?;
    let p = FbepProblem::new(f, l.k.clone(), l.h_k.clone(), l.h_j.clone(), l.file.m, l.file.degree, l.file.solver.lift_tol)?;
    let sol = solve_fbep(&p)?;
    log::info!("lambda = {:.6e}, err_J = {:.6e}, {} of {} basis elements kept", sol.lambda, sol.err_j, sol.kept.len(), sol.coeffs.len());
    let file = SolutionFile {
        version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        lambda_convention: LAMBDA_CONVENTION.to_string(),
        degree: l.file.degree,
        grid: l.file.grid,
        coefficients: None,
        real_coefficients: Some(sol.coeffs.clone()),
        lambda: sol.lambda,
        err_k: sol.err_k,
        err_j: sol.err_j,
        kkt_residual: sol.kkt_residual,
        diagnostics: Diagnostics {
            iterations: sol.iterations,
            active: sol.active,
            truncation_delta: None,
            oracle_delta: None,
            vekua_residual: Some(sol.vekua_residual),
            kept: Some(sol.kept.clone()),
        },
    };
    emit_json(out, &file)
}

/// Closed-form eigenvalues, sorted descending, for regions that have them.
///
/// The first list uses the normalized area measure, `a^{2(n+1)}` on `a𝔻`; the second is
/// `a^{n+1}`, the same family with `a` read as the area fraction `a²`.
fn closed_forms(region: &Region, degree: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let powers = |base: f64| -> Vec<f64> { (0..=degree).map(|n| base.powi(n as i32 + 1)).collect() };
    let (mut a, mut b) = match region.shape() {
        Shape::Disc => (vec![1.0; degree + 1], vec![1.0; degree + 1]),
        Shape::RadialDisc { a } => (powers(a * a), powers(*a)),
        _ => return None,
    };
    if region.is_complement() {
        a.iter_mut().for_each(|v| *v = 1.0 - *v);
        b.iter_mut().for_each(|v| *v = 1.0 - *v);
    }
    a.sort_by(|x, y| y.total_cmp(x));
    b.sort_by(|x, y| y.total_cmp(x));
    Some((a, b))
}

pub fn spectrum(region: &str, degree: usize, out: Option<&Path>) -> CliResult<()> {
    let region: Region = region.parse()?;
    let eig = gram_spectrum(&gram(&region, degree)?)?;
    let forms = closed_forms(&region, degree);
    let rows = eig.iter().enumerate().map(|(i, v)| {
        let (a, b) = match &forms {
            Some((a, b)) => (a[i].to_string(), b[i].to_string()),
            None => (String::new(), String::new()),
        };
        vec![i.to_string(), v.to_string(), a, b]
    });
    emit_csv(out, &["index", "eigenvalue", "closed_form", "closed_form_radius_power"], rows)
}

pub fn project(function: &FunctionInput, grid: GridSpec, degree: usize, out: Option<&Path>) -> CliResult<()> {
    let g = function.spec()?.sample(&grid.build()?)?;
    let c = bergman_project(&g, degree)?;
    let file = CoefficientFile { version: SCHEMA_VERSION, degree, coefficients: c.coeffs().iter().map(|&z| to_pair(z)).collect() };
    emit_json(out, &file)
}

pub fn teodorescu(function: &FunctionInput, grid: GridSpec, out: Option<&Path>) -> CliResult<()> {
    let g = function.spec()?.sample(&grid.build()?)?;
    let t = teodorescu_transform(&g);
    let rows = t.grid().nodes().zip(t.values()).map(|(z, v)| {
        vec![z.re.to_string(), z.im.to_string(), v.re.to_string(), v.im.to_string()]
    });
    emit_csv(out, &["x", "y", "re", "im"], rows)
}

pub fn lambda_sweep(problem: &Path, m_values: &[f64], out: Option<&Path>) -> CliResult<()> {
    let l = load(problem)?;
    let options = l.file.solver.bep_options();
    let mut rows = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let sol = solve_bep_with(&bep_problem(&l, m)?, &options)?;
        rows.push(vec![m.to_string(), sol.lambda.to_string(), sol.err_k.to_string(), sol.err_j.to_string()]);
    }
    emit_csv(out, &["M", "lambda", "err_K", "err_J"], rows)
}

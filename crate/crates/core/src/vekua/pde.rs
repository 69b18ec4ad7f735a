//! Strong-form residuals of the equations satisfied by the components of a Vekua solution.

use num_complex::Complex64;

use super::derivative::{dbar, dz};
use super::{Conductivity, VekuaFunction};
use crate::disc::{weighted_norm_sqr, GridFunction};
use crate::error::{Error, Result};

/// Nodes with `r ≤ 1 − 2/n_r`, away from the one-sided stencils.
fn interior(grid: &crate::disc::DiscGrid) -> Vec<bool> {
    let cut = 1.0 - 2.0 / grid.n_r() as f64;
    (0..grid.len()).map(|idx| grid.radial_nodes()[grid.ring_of(idx)] <= cut).collect()
}

fn norm_on(g: &GridFunction, mask: &[bool]) -> f64 {
    weighted_norm_sqr(g.grid(), g.values(), Some(mask)).sqrt()
}

fn real_part(g: &GridFunction) -> GridFunction {
    g.map(|v| Complex64::new(v.re, 0.0))
}

/// Relative interior residual of `∇·(σ∇u) = 0` for real `u` and `σ`:
/// `‖∂_x V₁ + ∂_y V₂‖ / (‖∂_x V₁‖ + ‖∂_y V₂‖ + ‖σu‖)` with `V = σ∇u`.
pub fn divergence_residual(u: &GridFunction, sigma: &GridFunction) -> Result<f64> {
    u.check_grid(sigma)?;
    let mask = interior(u.grid());
    if !mask.iter().any(|&m| m) {
        return Err(Error::InvalidArgument("grid has no interior nodes".into()));
    }
    let u = real_part(u);
    // for real u, 2∂̄u = ∂_x u + i ∂_y u
    let v = dbar(&u)?.zip_with(sigma, |d, s| d * 2.0 * s.re)?;
    let v1 = real_part(&v);
    let v2 = v.map(|x| Complex64::new(x.im, 0.0));
    let dx_v1 = dbar(&v1)?.map(|d| Complex64::new(2.0 * d.re, 0.0));
    let dy_v2 = dbar(&v2)?.map(|d| Complex64::new(2.0 * d.im, 0.0));
    let div = &dx_v1 + &dy_v2;
    let scale = norm_on(&dx_v1, &mask) + norm_on(&dy_v2, &mask) + norm_on(&u.zip_with(sigma, |a, s| a * s.re)?, &mask);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(norm_on(&div, &mask) / scale)
}

/// Residuals of `∇·(f²∇(w₀/f)) = 0` and `∇·(f⁻²∇(f w₁)) = 0`.
pub fn metaharmonic_residuals(w: &VekuaFunction, f: &Conductivity) -> Result<(f64, f64)> {
    let fv = f.values();
    let u0 = w.w.zip_with(fv, |v, f| Complex64::new(v.re / f.re, 0.0))?;
    let u1 = w.w.zip_with(fv, |v, f| Complex64::new(v.im * f.re, 0.0))?;
    let f2 = fv.map(|f| Complex64::new(f.re * f.re, 0.0));
    let f_2 = fv.map(|f| Complex64::new(1.0 / (f.re * f.re), 0.0));
    Ok((divergence_residual(&u0, &f2)?, divergence_residual(&u1, &f_2)?))
}

/// Residual of the conjugate Beltrami equation `∂̄G = ν conj(∂G)` for `G = w₀/f + i f w₁`,
/// `ν = (1 − f²)/(1 + f²)`, relative to `‖∂̄G‖ + ‖∂G‖ + ‖G‖` on interior nodes.
pub fn beltrami_residual(w: &VekuaFunction, f: &Conductivity) -> Result<f64> {
    let fv = f.values();
    let g = w.w.zip_with(fv, |v, f| Complex64::new(v.re / f.re, v.im * f.re))?;
    let nu = fv.map(|f| Complex64::new((1.0 - f.re * f.re) / (1.0 + f.re * f.re), 0.0));
    let db = dbar(&g)?;
    let d = dz(&g)?;
    let lhs = &db - &(&nu * &d.conj());
    let mask = interior(g.grid());
    let scale = norm_on(&db, &mask) + norm_on(&d, &mask) + norm_on(&g, &mask);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(norm_on(&lhs, &mask) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::AnalyticCoeffs;
    use crate::disc::build_grid;
    use crate::vekua::{alpha_from_f, vekua_lift};

    #[test]
    fn classical_case_is_harmonic() {
        let grid = build_grid(32, 64).unwrap();
        let f = Conductivity::constant(&grid, 1.0).unwrap();
        for n in [1, 3] {
            let w = VekuaFunction::new(GridFunction::from_fn(&grid, |z| z.powu(n)), GridFunction::zeros(&grid), 8).unwrap();
            let (a, b) = metaharmonic_residuals(&w, &f).unwrap();
            assert!(a < 1e-3 && b < 1e-3, "{a} {b}");
            assert!(beltrami_residual(&w, &f).unwrap() < 1e-3);
        }
    }

    #[test]
    fn conductivity_itself_has_zero_residual() {
        let grid = build_grid(32, 64).unwrap();
        let f = Conductivity::exp_x(&grid, 1.0).unwrap();
        let alpha = alpha_from_f(&f).unwrap();
        let w = VekuaFunction::new(f.values().clone(), alpha, 8).unwrap();
        let (a, b) = metaharmonic_residuals(&w, &f).unwrap();
        assert!(a < 1e-12 && b == 0.0);
    }

    #[test]
    fn lifted_function_satisfies_both_equations() {
        let grid = build_grid(48, 96).unwrap();
        let f = Conductivity::exp_x(&grid, 0.5).unwrap();
        let alpha = alpha_from_f(&f).unwrap();
        let seed = AnalyticCoeffs::new(vec![Complex64::new(0.3, 0.0), Complex64::new(1.0, 0.5)]).unwrap();
        let w = vekua_lift(&seed, &alpha, 1e-13, 100).unwrap();
        let (a, b) = metaharmonic_residuals(&w, &f).unwrap();
        assert!(a < 1e-2 && b < 1e-2, "{a} {b}");
        assert!(beltrami_residual(&w, &f).unwrap() < 1e-2);
    }
}

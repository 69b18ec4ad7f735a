//! Independent solution path: the truncated problem as a real trust-region problem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{BepProblem, BepSolution, BepSystem};
use crate::bergman::GramMatrix;
use crate::disc::weighted_norm_sqr;
use crate::error::{Error, Result};
use crate::qcqp::Qcqp;

/// Real form `[[Re A, −Im A], [Im A, Re A]]` of a complex matrix.
pub(crate) fn realify(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let v = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    })
}

pub(crate) fn realify_vec(b: &DVector<Complex64>) -> DVector<f64> {
    let n = b.len();
    DVector::from_fn(2 * n, |i, _| if i < n { b[i].re } else { b[i - n].im })
}

/// Solves the truncated problem as `min ‖A_K c − h_K‖² s.t. ‖A_J c − h_J‖² ≤ M²` by
/// diagonalizing the `J`-Gram and solving the secular equation for the multiplier.
///
/// Shares no code with the `λ` bisection except Gram assembly; the multiplier `μ` of the
/// secular equation relates to the BEP parameter by `λ = μ − 1`.
pub fn solve_bep_oracle(p: &BepProblem) -> Result<BepSolution> {
    let grid = p.grid();
    if p.k().node_count(grid)? == 0 {
        return Err(Error::EmptyRegion(p.k().to_string()));
    }
    let sys = BepSystem::new(p)?;
    let g_k = GramMatrix::on_grid(p.k(), p.degree(), grid)?.into_entries();
    let r = realify(&(&g_k + &sys.g_j));
    let hj2 = weighted_norm_sqr(grid, p.h_j().values(), Some(&sys.mask_j));
    let qcqp = Qcqp::new(&r, &realify(&sys.g_j), &realify_vec(&sys.b_k), &realify_vec(&sys.b_j), hj2)?;
    let sol = qcqp.solve(p.m())?;
    let n = p.degree() + 1;
    let c = DVector::from_fn(n, |i, _| Complex64::new(sol.x[i], sol.x[i + n]));
    Ok(sys.finish(c, sol.mu - 1.0, sol.iterations, sol.active))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bep::solve_bep;
    use crate::disc::{build_grid, GridFunction, Region};

    #[test]
    fn realify_preserves_quadratic_forms() {
        let a = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(2.0, 0.0),
            Complex64::new(0.3, 0.4),
            Complex64::new(0.3, -0.4),
            Complex64::new(1.0, 0.0),
        ]);
        let c = DVector::from_vec(vec![Complex64::new(0.1, -0.7), Complex64::new(1.2, 0.5)]);
        let complex = (c.adjoint() * &a * &c)[(0, 0)];
        let x = realify_vec(&c);
        let real = (x.transpose() * realify(&a) * &x)[(0, 0)];
        assert!((complex.re - real).abs() < 1e-14);
    }

    #[test]
    fn oracle_agrees_with_bisection() {
        let grid = build_grid(24, 64).unwrap();
        let k = Region::sector(1.2).unwrap();
        let h_k = GridFunction::from_fn(&grid, |z| (z * Complex64::new(0.5, 1.0)).exp());
        let h_j = GridFunction::from_fn(&grid, |z| z.conj() * 0.3);
        for m in [0.3, 0.6, 5.0] {
            let p = BepProblem::new(k.clone(), h_k.clone(), h_j.clone(), m, 10).unwrap();
            let a = solve_bep(&p).unwrap();
            let b = solve_bep_oracle(&p).unwrap();
            assert_eq!(a.active, b.active);
            assert!(a.g0.sup_distance(&b.g0) < 1e-6, "M = {m}: {}", a.g0.sup_distance(&b.g0));
            assert!((a.lambda - b.lambda).abs() < 1e-6 * (1.0 + a.lambda.abs()));
        }
    }
}

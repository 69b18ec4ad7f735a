//! Small dense helpers: cyclic Jacobi for Hermitian matrices and a pivoted
//! Cholesky pass for picking a well-conditioned subset of a Gram matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigen-decomposition `A = V diag(values) V*` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues, sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<Complex64>,
    pub sweeps: usize,
}

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

fn off_diagonal_norm(a: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal unitary and then
/// applies the real Jacobi rotation of the resulting symmetric 2×2 block. Iteration stops once
/// the off-diagonal Frobenius norm falls below `1e-13` times the Frobenius norm of `A`
/// (or below `1e-300` for the zero matrix).
pub fn hermitian_eigen(a: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidArgument("eigenproblem needs a square matrix".into()));
    }
    let mut a = a.clone();
    // symmetrize against rounding in the caller's construction
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    let scale = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let threshold = (JACOBI_TOL * scale).max(1e-300);
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let mut sweeps = 0;
    while off_diagonal_norm(&a) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigensolver",
                detail: format!("off-diagonal norm {:.3e} after {sweeps} sweeps", off_diagonal_norm(&a)),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, conj(phase)) · [[c, s], [-s, c]] restricted to (p, q)
                let u_pp = Complex64::new(c, 0.0);
                let u_pq = Complex64::new(s, 0.0);
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors, sweeps })
}

/// Jacobi eigen-decomposition of a real symmetric matrix; eigenvectors are real.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = hermitian_eigen(&a.map(|x| Complex64::new(x, 0.0)))?;
    Ok((eig.values, eig.vectors.map(|z| z.re)))
}

/// Greedy pivoted Cholesky on the unit-diagonal scaling of a Gram matrix.
///
/// Returns the indices (ascending) whose pivots stay above `rel_tol`; the rest are
/// numerically dependent on the kept ones.
pub fn independent_subset(gram: &DMatrix<f64>, rel_tol: f64) -> Vec<usize> {
    let n = gram.nrows();
    let diag: Vec<f64> = (0..n).map(|i| gram[(i, i)].max(0.0)).collect();
    let mut scaled = DMatrix::from_fn(n, n, |i, j| {
        let d = (diag[i] * diag[j]).sqrt();
        if d > 0.0 {
            gram[(i, j)] / d
        } else {
            0.0
        }
    });
    let mut remaining: Vec<usize> = (0..n).filter(|&i| diag[i] > 0.0).collect();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        let (pos, &piv) = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| scaled[(*a.1, *a.1)].total_cmp(&scaled[(*b.1, *b.1)]))
            .expect("non-empty");
        let d = scaled[(piv, piv)];
        if d <= rel_tol {
            break;
        }
        remaining.swap_remove(pos);
        kept.push(piv);
        let col: Vec<f64> = (0..n).map(|i| scaled[(i, piv)]).collect();
        for &i in &remaining {
            for &j in &remaining {
                scaled[(i, j)] -= col[i] * col[j] / d;
            }
        }
    }
    kept.sort_unstable();
    kept
}

/// Solves `A x = b` for Hermitian positive definite `A`.
pub fn cholesky_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        &b + b.adjoint()
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        for (n, seed) in [(1, 1), (2, 2), (7, 3), (20, 4)] {
            let a = random_hermitian(n, seed);
            let eig = hermitian_eigen(&a).unwrap();
            let d = DMatrix::from_diagonal(&DVector::from_iterator(
                n,
                eig.values.iter().map(|&x| Complex64::new(x, 0.0)),
            ));
            let rebuilt = &eig.vectors * d * eig.vectors.adjoint();
            assert!((rebuilt - &a).norm() < 1e-12 * a.norm().max(1.0));
            let ortho = eig.vectors.adjoint() * &eig.vectors;
            assert!((ortho - DMatrix::identity(n, n)).norm() < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn jacobi_on_diagonal_and_zero() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.2, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]));
        let eig = hermitian_eigen(&a).unwrap();
        assert_eq!(eig.values, vec![3.0, 0.2, -1.0]);
        assert_eq!(eig.sweeps, 0);
        let z = DMatrix::<Complex64>::zeros(3, 3);
        assert_eq!(hermitian_eigen(&z).unwrap().values, vec![0.0; 3]);
    }

    #[test]
    fn symmetric_real_case() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        let s = 2f64.sqrt();
        for (got, want) in vals.iter().zip([2.0 + s, 2.0, 2.0 - s]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((vecs.transpose() * &vecs - DMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn subset_drops_dependent_columns() {
        let basis = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0]);
        let gram = basis.transpose() * &basis;
        let kept = independent_subset(&gram, 1e-10);
        assert_eq!(kept.len(), 2);
        let identity = DMatrix::<f64>::identity(3, 3);
        assert_eq!(independent_subset(&identity, 1e-10), vec![0, 1, 2]);
    }
}

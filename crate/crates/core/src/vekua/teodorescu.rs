//! The Teodorescu transform `T[w](z) = ∫_𝔻 w(ζ) / (z − ζ) dA(ζ)` on the polar grid.
//!
//! Splitting `w` into angular modes `ŵ_k(ρ) e^{ikφ}` and expanding the kernel inside and
//! outside `|ζ| = |z|` reduces the area integral to one radial integral per mode:
//!
//! * `k ≤ 0`: `T = 2 z^{k−1} ∫_0^r ŵ_k(ρ) ρ^{1−k} dρ`,
//! * `k ≥ 1`: `T = −2 z^{k−1} ∫_r^1 ŵ_k(ρ) ρ^{1−k} dρ`.
//!
//! With `s = ρ²` and `ŵ_k = ρ^p Q_k(s)`, `p = |k| mod 2`, both integrals act on a smooth
//! function of `s`, which is interpolated through the ring values. The resulting linear maps
//! from ring values to ring values are tabulated once per grid. The singularity of the
//! kernel never enters the discretization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::disc::{lagrange_basis, DiscGrid, GaussLegendre, GridFunction};

pub(crate) struct TeodorescuTables {
    /// `A^{(a)}_{j,i} = ∫_0^1 t^a ℓ_i(s_j t) dt`, indexed `[a]` then row-major `(j, i)`.
    inner: Vec<DMatrix<f64>>,
    /// `B^{(b)}_{j,i} = ∫_{s_j}^1 (s_j / s)^b ℓ_i(s) ds`.
    outer: Vec<DMatrix<f64>>,
}

fn modes(n_theta: usize) -> usize {
    n_theta / 2
}

impl TeodorescuTables {
    fn new(grid: &DiscGrid) -> Self {
        let n_r = grid.n_r();
        let s = grid.s_nodes();
        let bary = grid.barycentric();
        let top = modes(grid.n_theta());
        let a_max = top.div_ceil(2);
        let b_max = top / 2;

        // inner tables: the integrand is a polynomial of degree a + n_r − 1 in t
        let rule = GaussLegendre::new((n_r + a_max) / 2 + 2);
        let rows: Vec<DMatrix<f64>> = (0..n_r)
            .into_par_iter()
            .map(|j| {
                let q = rule.nodes.len();
                let mut basis = DMatrix::<f64>::zeros(q, n_r);
                let mut buf = vec![0.0; n_r];
                for (g, &t) in rule.nodes.iter().enumerate() {
                    lagrange_basis(s, bary, s[j] * t, &mut buf);
                    basis.row_mut(g).copy_from_slice(&buf);
                }
                let weights = DMatrix::from_fn(a_max + 1, q, |a, g| rule.weights[g] * rule.nodes[g].powi(a as i32));
                weights * basis
            })
            .collect();
        let inner = (0..=a_max)
            .map(|a| DMatrix::from_fn(n_r, n_r, |j, i| rows[j][(a, i)]))
            .collect();

        // outer tables: geometric panels [σ, 2σ] from s_j up to 1 keep (s_j/s)^b resolved
        let panel = GaussLegendre::new(n_r / 2 + 30);
        let rows: Vec<DMatrix<f64>> = (0..n_r)
            .into_par_iter()
            .map(|j| {
                let mut points = Vec::new();
                let mut weights = Vec::new();
                let mut left = s[j];
                while left < 1.0 {
                    let right = (2.0 * left).min(1.0);
                    for (&t, &w) in panel.nodes.iter().zip(&panel.weights) {
                        points.push(left + (right - left) * t);
                        weights.push(w * (right - left));
                    }
                    left = right;
                }
                let mut basis = DMatrix::<f64>::zeros(points.len(), n_r);
                let mut buf = vec![0.0; n_r];
                for (g, &x) in points.iter().enumerate() {
                    lagrange_basis(s, bary, x, &mut buf);
                    basis.row_mut(g).copy_from_slice(&buf);
                }
                let kernel = DMatrix::from_fn(b_max + 1, points.len(), |b, g| weights[g] * (s[j] / points[g]).powi(b as i32));
                kernel * basis
            })
            .collect();
        let outer = (0..=b_max)
            .map(|b| DMatrix::from_fn(n_r, n_r, |j, i| rows[j][(b, i)]))
            .collect();
        TeodorescuTables { inner, outer }
    }
}

/// `T[g]` at every node.
pub fn teodorescu(g: &GridFunction) -> GridFunction {
    let grid = g.grid();
    let tables = grid.teodorescu.get_or_init(|| TeodorescuTables::new(grid));
    let n_r = grid.n_r();
    let n = grid.n_theta();
    let top = modes(n) as i64;
    let r = grid.radial_nodes();
    let values = g.values();

    // spectra[i][k + top] = ŵ_k(r_i) / r_i^p
    let spectra: Vec<Vec<Complex64>> = (0..n_r)
        .into_par_iter()
        .map(|i| {
            let ring = &values[i * n..(i + 1) * n];
            (-top..=top)
                .map(|k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (l, &v) in ring.iter().enumerate() {
                        acc += v * grid.unit_root(-k * l as i64);
                    }
                    let mut c = acc / n as f64;
                    if n.is_multiple_of(2) && k.unsigned_abs() as usize == n / 2 {
                        c *= 0.5;
                    }
                    if k % 2 != 0 {
                        c /= r[i];
                    }
                    c
                })
                .collect()
        })
        .collect();

    // radial[k + top][j]: coefficient of e^{i(k−1)θ} at ring j
    let radial: Vec<Vec<Complex64>> = (-top..=top)
        .into_par_iter()
        .map(|k| {
            let col = (k + top) as usize;
            let p = (k.rem_euclid(2)) as i32;
            let (table, sign, power) = if k <= 0 {
                (&tables.inner[(-k as usize).div_ceil(2)], 1.0, p + 1)
            } else {
                (&tables.outer[k as usize / 2], -1.0, p - 1)
            };
            (0..n_r)
                .map(|j| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..n_r {
                        acc += spectra[i][col] * table[(j, i)];
                    }
                    acc * (sign * r[j].powi(power))
                })
                .collect()
        })
        .collect();

    let out: Vec<Complex64> = (0..n_r)
        .into_par_iter()
        .flat_map_iter(|j| {
            let radial = &radial;
            (0..n).map(move |l| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (col, k) in (-top..=top).enumerate() {
                    acc += radial[col][j] * grid.unit_root((k - 1) * l as i64);
                }
                acc
            })
        })
        .collect();
    GridFunction::new(grid.clone(), out).expect("Teodorescu transform of finite data is finite")
}

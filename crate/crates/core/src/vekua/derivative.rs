//! `∂̄` and `∂` on the polar grid: spectral in `θ`, five-point finite differences in `r`.

use num_complex::Complex64;

use crate::disc::{DiscGrid, GridFunction};
use crate::error::{Error, Result};

const STENCIL: usize = 5;

/// Differentiation tables of one grid.
pub(crate) struct RadialStencils {
    /// First index and weights of the `d/dr` stencil at each ring.
    radial: Vec<(usize, [f64; STENCIL])>,
    /// `d(q)`: the `θ`-derivative is the circulant product `Σ_m d(l − m) g_m`.
    angular: Vec<f64>,
}

/// Weights of the first derivative at `x0` over `xs` (Fornberg's recursion).
fn first_derivative_weights(x0: f64, xs: &[f64]) -> [f64; STENCIL] {
    let n = xs.len();
    debug_assert_eq!(n, STENCIL);
    // c[j][k]: weight of node j for derivative order k
    let mut c = [[0.0f64; 2]; STENCIL];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    let mut out = [0.0; STENCIL];
    for (o, row) in out.iter_mut().zip(&c) {
        *o = row[1];
    }
    out
}

impl RadialStencils {
    fn new(grid: &DiscGrid) -> Self {
        let r = grid.radial_nodes();
        let n_r = r.len();
        let radial = (0..n_r)
            .map(|i| {
                let start = i.saturating_sub(STENCIL / 2).min(n_r - STENCIL);
                (start, first_derivative_weights(r[i], &r[start..start + STENCIL]))
            })
            .collect();
        let n = grid.n_theta();
        // highest resolved mode; the Nyquist mode has no well-defined derivative
        let top = n.div_ceil(2) - 1;
        let angular = (0..n)
            .map(|q| {
                let theta = grid.angle(q);
                -2.0 / n as f64 * (1..=top).map(|k| k as f64 * (k as f64 * theta).sin()).sum::<f64>()
            })
            .collect();
        RadialStencils { radial, angular }
    }
}

fn stencils(grid: &DiscGrid) -> Result<&RadialStencils> {
    if grid.n_r() < STENCIL || grid.n_theta() < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid {}x{} too coarse for differentiation (need n_r ≥ {STENCIL}, n_theta ≥ 8)",
            grid.n_r(),
            grid.n_theta()
        )));
    }
    Ok(grid.stencils.get_or_init(|| RadialStencils::new(grid)))
}

/// `(∂_r g, ∂_θ g)` at every node.
fn polar_gradient(g: &GridFunction) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let grid = g.grid();
    let st = stencils(grid)?;
    let n = grid.n_theta();
    let v = g.values();
    let mut dr = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut dt = vec![Complex64::new(0.0, 0.0); v.len()];
    for (i, (start, w)) in st.radial.iter().enumerate() {
        for j in 0..n {
            dr[i * n + j] = w.iter().enumerate().map(|(s, &c)| v[(start + s) * n + j] * c).sum();
        }
        let ring = &v[i * n..(i + 1) * n];
        for l in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &x) in ring.iter().enumerate() {
                acc += x * st.angular[(l + n - m) % n];
            }
            dt[i * n + l] = acc;
        }
    }
    Ok((dr, dt))
}

/// `∂̄g = ½(∂_x + i∂_y) g = (e^{iθ}/2)(∂_r + (i/r) ∂_θ) g`.
pub fn dbar(g: &GridFunction) -> Result<GridFunction> {
    let (dr, dt) = polar_gradient(g)?;
    let grid = g.grid();
    let n = grid.n_theta();
    let values = (0..grid.len())
        .map(|idx| {
            let r = grid.radial_nodes()[idx / n];
            let e = grid.unit_root((idx % n) as i64);
            e * 0.5 * (dr[idx] + Complex64::i() * dt[idx] / r)
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// `∂g = ½(∂_x − i∂_y) g = (e^{−iθ}/2)(∂_r − (i/r) ∂_θ) g`.
pub fn dz(g: &GridFunction) -> Result<GridFunction> {
    let (dr, dt) = polar_gradient(g)?;
    let grid = g.grid();
    let n = grid.n_theta();
    let values = (0..grid.len())
        .map(|idx| {
            let r = grid.radial_nodes()[idx / n];
            let e = grid.unit_root(-((idx % n) as i64));
            e * 0.5 * (dr[idx] - Complex64::i() * dt[idx] / r)
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// `(∂_x g, ∂_y g)`.
pub fn gradient(g: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    let a = dz(g)?;
    let b = dbar(g)?;
    let dx = &a + &b;
    let dy = (&a - &b).scale(Complex64::i());
    Ok((dx, dy))
}

//! Bounded extremal problems in the Bergman space `A²(𝔻)` and in Bergman-Vekua spaces
//! `A_f²(𝔻)` on the unit disc.
//!
//! The crate is layered bottom-up:
//!
//! * [`disc`]: polar quadrature, regions and the area inner product for `dA = dx dy / π`;
//! * [`bergman`]: truncated expansions in `e_n(z) = √(n+1) zⁿ`, the Bergman projection,
//!   the reproducing kernel and Toeplitz (Gram) matrices of characteristic symbols;
//! * [`bep`]: the bounded extremal problem, solved through the Lagrange parameter `λ`,
//!   with an independent secular-equation oracle;
//! * [`vekua`]: `α_f = ∂̄f / f`, the Teodorescu transform, Neumann lifting of analytic seeds,
//!   the similarity principle and PDE diagnostics;
//! * [`fbep`]: the bounded extremal problem over a lifted Vekua basis.
//!
//! ```
//! use bergbep::bergman::{gram, spectrum};
//! use bergbep::disc::Region;
//!
//! let g = gram(&Region::radial_disc(0.5)?, 4)?;
//! let eig = spectrum(&g)?;
//! assert!((eig[0] - 0.25).abs() < 1e-14);
//! # Ok::<(), bergbep::Error>(())
//! ```

pub mod bep;
pub mod bergman;
pub mod disc;
mod error;
pub mod fbep;
pub mod linalg;
mod qcqp;
pub mod vekua;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/quadrature.md")]
    struct Quadrature;
    #[doc = include_str!("../../../book/src/bergman.md")]
    struct Bergman;
    #[doc = include_str!("../../../book/src/bep.md")]
    struct Bep;
    #[doc = include_str!("../../../book/src/vekua.md")]
    struct Vekua;
    #[doc = include_str!("../../../book/src/fbep.md")]
    struct Fbep;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}

//! Quadrature, regions and inner products on the unit disc with `dA = dx dy / π`.

mod function;
mod quadrature;
mod region;

pub use function::{eval_basis, glue, inner_product, GridFunction};
pub(crate) use function::weighted_norm_sqr;
pub use quadrature::{build_grid, DiscGrid, GaussLegendre};
pub(crate) use quadrature::lagrange_basis;
pub use region::{Region, Shape};

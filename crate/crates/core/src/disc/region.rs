//! Measurable subsets of the disc, resolved node-wise on a grid.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::quadrature::DiscGrid;
use crate::error::{Error, Result};

/// The underlying set before any complement is taken.
#[derive(Debug, Clone)]
pub enum Shape {
    /// The whole disc.
    Disc,
    /// `a𝔻 = {|z| < a}`.
    RadialDisc { a: f64 },
    /// `{-θ < arg z < θ}`.
    Sector { theta: f64 },
    /// Arbitrary per-node membership on one grid.
    Mask { grid: Arc<DiscGrid>, inside: Arc<[bool]> },
}

impl PartialEq for Shape {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Shape::Disc, Shape::Disc) => true,
            (Shape::RadialDisc { a }, Shape::RadialDisc { a: b }) => a == b,
            (Shape::Sector { theta }, Shape::Sector { theta: t }) => theta == t,
            (Shape::Mask { grid, inside }, Shape::Mask { grid: g, inside: i }) => grid == g && inside == i,
            _ => false,
        }
    }
}

/// A region `Ω ⊂ 𝔻`: a shape, optionally complemented.
///
/// A node belongs to `Ω` iff its center satisfies the defining inequality, so a region
/// and its complement partition the nodes of every grid exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    shape: Shape,
    complement: bool,
}

impl Region {
    pub fn disc() -> Self {
        Region { shape: Shape::Disc, complement: false }
    }

    pub fn radial_disc(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidArgument(format!("radius {a} outside (0, 1)")));
        }
        Ok(Region { shape: Shape::RadialDisc { a }, complement: false })
    }

    /// `𝔻 \ closure(a𝔻)`.
    pub fn annulus(a: f64) -> Result<Self> {
        Ok(Self::radial_disc(a)?.complement())
    }

    pub fn sector(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::InvalidArgument(format!("half-angle {theta} outside (0, π)")));
        }
        Ok(Region { shape: Shape::Sector { theta }, complement: false })
    }

    pub fn mask(grid: Arc<DiscGrid>, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "mask has {} entries, grid has {} nodes",
                inside.len(),
                grid.len()
            )));
        }
        Ok(Region { shape: Shape::Mask { grid, inside: inside.into() }, complement: false })
    }

    /// Mask of all nodes satisfying a predicate.
    pub fn from_predicate(grid: Arc<DiscGrid>, pred: impl Fn(num_complex::Complex64) -> bool) -> Self {
        let inside: Vec<bool> = grid.nodes().map(pred).collect();
        Region { shape: Shape::Mask { grid, inside: inside.into() }, complement: false }
    }

    pub fn complement(&self) -> Self {
        Region { shape: self.shape.clone(), complement: !self.complement }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn is_complement(&self) -> bool {
        self.complement
    }

    /// Whether the node at `idx` of `grid` lies in the region.
    pub fn contains_node(&self, grid: &DiscGrid, idx: usize) -> bool {
        let inside = match &self.shape {
            Shape::Disc => true,
            Shape::RadialDisc { a } => grid.radial_nodes()[grid.ring_of(idx)] < *a,
            Shape::Sector { theta } => {
                let j = idx % grid.n_theta();
                let mut phi = grid.angle(j);
                if phi > PI {
                    phi -= 2.0 * PI;
                }
                phi.abs() < *theta
            }
            Shape::Mask { inside, .. } => inside[idx],
        };
        inside != self.complement
    }

    /// Membership of every node of `grid`.
    pub fn node_mask(&self, grid: &DiscGrid) -> Result<Vec<bool>> {
        if let Shape::Mask { grid: own, .. } = &self.shape {
            if **own != *grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok((0..grid.len()).map(|idx| self.contains_node(grid, idx)).collect())
    }

    /// Normalized area from the closed form, when the shape has one.
    pub fn exact_area(&self) -> Option<f64> {
        let area = match &self.shape {
            Shape::Disc => 1.0,
            Shape::RadialDisc { a } => a * a,
            Shape::Sector { theta } => theta / PI,
            Shape::Mask { .. } => return None,
        };
        Some(if self.complement { 1.0 - area } else { area })
    }

    /// Normalized area by grid quadrature.
    pub fn grid_area(&self, grid: &DiscGrid) -> Result<f64> {
        let mask = self.node_mask(grid)?;
        Ok(mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(idx, _)| grid.weight(idx))
            .sum())
    }

    pub fn node_count(&self, grid: &DiscGrid) -> Result<usize> {
        Ok(self.node_mask(grid)?.into_iter().filter(|&m| m).count())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.shape, self.complement) {
            (Shape::Disc, false) => write!(f, "disc"),
            (Shape::Disc, true) => write!(f, "empty"),
            (Shape::RadialDisc { a }, false) => write!(f, "radial:{a}"),
            (Shape::RadialDisc { a }, true) => write!(f, "annulus:{a}"),
            (Shape::Sector { theta }, c) => write!(f, "{}sector:{theta}", if c { "!" } else { "" }),
            (Shape::Mask { .. }, c) => write!(f, "{}mask", if c { "!" } else { "" }),
        }
    }
}

/// Parses `disc`, `radial:A`, `annulus:A`, `sector:THETA`, optionally prefixed by `!`
/// for the complement.
impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('!') {
            return Ok(rest.parse::<Region>()?.complement());
        }
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let number = |arg: Option<&str>| -> Result<f64> {
            arg.ok_or_else(|| Error::InvalidArgument(format!("region `{s}` needs a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("region `{s}`: {e}")))
        };
        match kind {
            "disc" | "full" => Ok(Region::disc()),
            "radial" | "radial_disc" => Region::radial_disc(number(arg)?),
            "annulus" => Region::annulus(number(arg)?),
            "sector" => Region::sector(number(arg)?),
            _ => Err(Error::InvalidArgument(format!("unknown region `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::build_grid;

    #[test]
    fn complement_partitions_nodes() {
        let grid = build_grid(12, 32).unwrap();
        let regions = [
            Region::disc(),
            Region::radial_disc(0.4).unwrap(),
            Region::sector(1.1).unwrap(),
            Region::from_predicate(grid.clone(), |z| z.re > 0.2),
        ];
        for region in &regions {
            let a = region.node_mask(&grid).unwrap();
            let b = region.complement().node_mask(&grid).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| x != y));
        }
    }

    #[test]
    fn exact_areas() {
        assert_eq!(Region::radial_disc(0.5).unwrap().exact_area(), Some(0.25));
        assert_eq!(Region::annulus(0.5).unwrap().exact_area(), Some(0.75));
        let s = Region::sector(PI / 2.0).unwrap();
        assert!((s.exact_area().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sector_area_under_quadrature() {
        // sector boundary on grid angles counts as outside; pick θ between angles
        let grid = build_grid(8, 64).unwrap();
        let theta = 2.0 * PI * 10.5 / 64.0;
        let region = Region::sector(theta).unwrap();
        // 21 angles inside out of 64
        let area = region.grid_area(&grid).unwrap();
        assert!((area - 21.0 / 64.0).abs() < 1e-14);
    }

    #[test]
    fn parse_and_display() {
        for spec in ["disc", "radial:0.5", "annulus:0.25", "sector:1.5"] {
            let r: Region = spec.parse().unwrap();
            assert_eq!(r.to_string(), spec);
        }
        assert!("radial:1.5".parse::<Region>().is_err());
        assert!("blob".parse::<Region>().is_err());
        assert_eq!("!radial:0.5".parse::<Region>().unwrap(), Region::annulus(0.5).unwrap());
    }

    #[test]
    fn mask_on_wrong_grid() {
        let g1 = build_grid(4, 8).unwrap();
        let g2 = build_grid(5, 8).unwrap();
        let r = Region::from_predicate(g1, |_| true);
        assert_eq!(r.node_mask(&g2), Err(Error::GridMismatch));
    }
}

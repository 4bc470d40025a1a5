//! Separator lattice and per-point stencil radii.
//!
//! Separators are the hyperplanes where some coordinate is a multiple of the
//! spacing `B`. A point's radius `t_j` is the largest value for which its
//! stencil never reaches across a separator, i.e. no separator coordinate lies
//! strictly between `j` and any point it couples to.

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Hard cap on stencil radius.
pub const MAX_RADIUS: usize = 4;

/// Position of a grid point relative to the separator lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointKind {
    /// Inside a leaf box: no coordinate on a separator.
    Box,
    /// On some but not all separator hyperplanes (edges in 2D, faces/edges in 3D).
    Edge,
    /// On a separator hyperplane in every dimension.
    Vertex,
}

pub(crate) fn validate_spacing(grid: GridSpec, spacing: usize) -> Result<()> {
    let n = grid.n();
    let reason = if spacing < 2 {
        Some("spacing must be at least 2")
    } else if n % spacing != 0 {
        Some("spacing must divide n")
    } else if !(n / spacing).is_power_of_two() {
        Some("n / spacing must be a power of two")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(Error::InvalidSpacing { spacing, n, reason }),
        None => Ok(()),
    }
}

/// Distance score of one coordinate: `B` on a separator, else the distance to
/// the nearest separator.
#[inline]
fn coordinate_reach(c: usize, spacing: usize) -> usize {
    let r = c % spacing;
    if r == 0 {
        spacing
    } else {
        r.min(spacing - r)
    }
}

pub fn classify(grid: GridSpec, spacing: usize, j: usize) -> PointKind {
    let c = grid.coords(j);
    let on = (0..grid.dim()).filter(|&k| c[k] % spacing == 0).count();
    match on {
        0 => PointKind::Box,
        x if x == grid.dim() => PointKind::Vertex,
        _ => PointKind::Edge,
    }
}

/// Per-point stencil radius for separator spacing `spacing`, capped at `t_max`.
pub fn t_assignment(grid: GridSpec, spacing: usize, t_max: usize) -> Result<Vec<usize>> {
    validate_spacing(grid, spacing)?;
    if t_max == 0 || t_max > spacing || t_max > MAX_RADIUS {
        return Err(Error::InvalidSpacing {
            spacing,
            n: grid.n(),
            reason: "t_max must satisfy 1 <= t_max <= min(B, 4)",
        });
    }
    Ok((0..grid.len())
        .map(|j| {
            let c = grid.coords(j);
            (0..grid.dim())
                .map(|k| coordinate_reach(c[k], spacing))
                .min()
                .unwrap()
                .min(t_max)
        })
        .collect())
}

/// Whether a separator coordinate lies strictly between `j` and `i` in some
/// dimension, measured along the minimal periodic displacement.
pub fn crosses_separator(grid: GridSpec, spacing: usize, j: usize, i: usize) -> bool {
    let n = grid.n() as isize;
    let cj = grid.coords(j);
    let ci = grid.coords(i);
    (0..grid.dim()).any(|k| {
        let mut delta = (ci[k] as isize - cj[k] as isize).rem_euclid(n);
        if delta > n / 2 {
            delta -= n;
        }
        let step = delta.signum();
        (1..delta.abs()).any(|s| (cj[k] as isize + step * s).rem_euclid(n) % spacing as isize == 0)
    })
}

/// Separator spacing, radius cap and the resulting radius map.
#[derive(Debug, Clone)]
pub struct NdGeometry {
    pub spacing: usize,
    pub t_max: usize,
    pub t_map: Vec<usize>,
}

impl NdGeometry {
    pub fn new(grid: GridSpec, spacing: usize, t_max: usize) -> Result<Self> {
        let t_map = t_assignment(grid, spacing, t_max)?;
        Ok(Self {
            spacing,
            t_max,
            t_map,
        })
    }
}

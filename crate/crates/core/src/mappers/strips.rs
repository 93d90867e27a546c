//! Stencil Strips.
//!
//! The grid is tiled into strips that run the full length of its largest
//! dimension `L`. Across every other dimension a strip is `s_i` cells wide,
//! where the widths approximate the side lengths of an `n`-cell box stretched
//! by the stencil's distortion factors. Ranks fill the strips one after the
//! other, slice by slice along `L`, alternating direction so that consecutive
//! ranks stay adjacent.

use super::{advance, check_stencil, Algorithm, RankMapping};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stencil::Stencil;

/// Per-dimension stretch of the stencil's bounding box relative to a cube of
/// equal volume. Dimensions the stencil never reaches get 0.
pub fn distortion_factors(stencil: &Stencil) -> Vec<f64> {
    let ext = stencil.extensions();
    let spanned = ext.iter().filter(|&&e| e != 0).count();
    let volume: f64 = ext
        .iter()
        .map(|&e| if e == 0 { 1.0 } else { e as f64 })
        .product();
    let side = volume.powf(1.0 / spanned as f64);
    ext.iter().map(|&e| e as f64 / side).collect()
}

/// Strip geometry for one grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripLayout {
    /// The dimension strips run along.
    pub long_dim: usize,
    /// Dimensions crossed by strips, ascending.
    pub cross_dims: Vec<usize>,
    /// Nominal strip width per cross dimension.
    pub widths: Vec<usize>,
    /// Strips per cross dimension; the last one absorbs the remainder.
    pub counts: Vec<usize>,
    dims: Vec<usize>,
}

impl StripLayout {
    /// Width of strip `j` along cross dimension number `a`.
    pub fn strip_width(&self, a: usize, j: usize) -> usize {
        let extent = self.dims[self.cross_dims[a]];
        if j + 1 < self.counts[a] {
            self.widths[a]
        } else {
            extent - self.widths[a] * (self.counts[a] - 1)
        }
    }

    /// All strip widths along cross dimension number `a`.
    pub fn tiling(&self, a: usize) -> Vec<usize> {
        (0..self.counts[a])
            .map(|j| self.strip_width(a, j))
            .collect()
    }
}

pub fn strip_layout(dims: &[usize], stencil: &Stencil, n: usize) -> StripLayout {
    let alpha = distortion_factors(stencil);
    let d = dims.len();
    // Largest dimension, lowest index on ties.
    let long_dim = (0..d).fold(0, |best, i| if dims[i] > dims[best] { i } else { best });
    let cross_dims: Vec<usize> = (0..d).filter(|&i| i != long_dim).collect();
    let mut fixed = 1.0;
    let mut widths = Vec::with_capacity(cross_dims.len());
    for (m, &i) in cross_dims.iter().enumerate() {
        let ideal = (alpha[i] * n as f64 / fixed).powf(1.0 / (d - m) as f64);
        let w = ((ideal + 0.5).floor() as usize).clamp(1, dims[i]);
        fixed *= w as f64;
        widths.push(w);
    }
    let counts = cross_dims
        .iter()
        .zip(&widths)
        .map(|(&i, &w)| dims[i] / w)
        .collect();
    StripLayout {
        long_dim,
        cross_dims,
        widths,
        counts,
        dims: dims.to_vec(),
    }
}

fn check(grid: &Grid, stencil: &Stencil, n: usize) -> Result<()> {
    check_stencil(grid, stencil)?;
    if n == 0 {
        return Err(Error::InvalidNodes(
            "processes per node must be at least 1".into(),
        ));
    }
    Ok(())
}

/// New coordinate of `rank` by mixed-radix arithmetic over the strip tiling.
pub fn strips_coord(grid: &Grid, stencil: &Stencil, n: usize, rank: usize) -> Result<Vec<usize>> {
    check(grid, stencil, n)?;
    if rank >= grid.size() {
        return Err(Error::RankOutOfRange {
            rank,
            size: grid.size(),
        });
    }
    let dims = grid.dims();
    let layout = strip_layout(dims, stencil, n);
    let long = dims[layout.long_dim];
    let k = layout.cross_dims.len();

    let mut local = rank;
    let mut strip = vec![0; k];
    let mut fixed = 1;
    for (a, digit) in strip.iter_mut().enumerate() {
        // Cells per unit of width here: widths already chosen times the full
        // extent of the cross dimensions still open, times the long dimension.
        let rest: usize = fixed
            * long
            * layout.cross_dims[a + 1..]
                .iter()
                .map(|&i| dims[i])
                .product::<usize>();
        let block = layout.widths[a] * rest;
        let j = (local / block).min(layout.counts[a] - 1);
        local -= j * block;
        *digit = j;
        fixed *= layout.strip_width(a, j);
    }
    let widths: Vec<usize> = (0..k).map(|a| layout.strip_width(a, strip[a])).collect();
    let slice: usize = widths.iter().product();
    let step = local / slice;
    let mut within = local % slice;
    if step % 2 == 1 {
        within = slice - 1 - within;
    }

    let mut coord = vec![0; dims.len()];
    coord[layout.long_dim] = if strip.iter().sum::<usize>() % 2 == 1 {
        long - 1 - step
    } else {
        step
    };
    for a in (0..k).rev() {
        coord[layout.cross_dims[a]] = strip[a] * layout.widths[a] + within % widths[a];
        within /= widths[a];
    }
    Ok(coord)
}

/// Batch mapping by walking strips, slices and cells in visiting order.
pub fn strips_map(grid: &Grid, stencil: &Stencil, n: usize) -> Result<RankMapping> {
    check(grid, stencil, n)?;
    let dims = grid.dims();
    let layout = strip_layout(dims, stencil, n);
    let long = dims[layout.long_dim];
    let k = layout.cross_dims.len();
    let mut coords = Vec::with_capacity(grid.size());

    let mut strip = vec![0; k];
    loop {
        let widths: Vec<usize> = (0..k).map(|a| layout.strip_width(a, strip[a])).collect();
        let mut cells = Vec::new();
        let mut cell = vec![0; k];
        loop {
            cells.push(cell.clone());
            if !advance(&mut cell, &widths) {
                break;
            }
        }
        let reversed = strip.iter().sum::<usize>() % 2 == 1;
        for step in 0..long {
            let mut coord = vec![0; dims.len()];
            coord[layout.long_dim] = if reversed { long - 1 - step } else { step };
            let visit: Box<dyn Iterator<Item = &Vec<usize>>> = if step % 2 == 1 {
                Box::new(cells.iter().rev())
            } else {
                Box::new(cells.iter())
            };
            for c in visit {
                for a in 0..k {
                    coord[layout.cross_dims[a]] = strip[a] * layout.widths[a] + c[a];
                }
                coords.push(coord.clone());
            }
        }
        if !advance(&mut strip, &layout.counts) {
            break;
        }
    }
    Ok(RankMapping::new(grid, coords, Algorithm::Strips, None))
}

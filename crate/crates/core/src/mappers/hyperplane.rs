//! Recursive bisection into node-sized parts.
//!
//! A grid of `C·n` cells is cut by an axis-aligned hyperplane so that both
//! halves hold a multiple of `n` cells. Candidate dimensions are tried from the
//! most stencil-orthogonal (smallest summed squared cosine) to the least; the
//! cut position moves outward from the middle of the dimension. Grids of at
//! most `2n` cells are not cut: their cells are numbered along the dimension
//! the stencil uses most, so the first `n` cells form one node.

use std::cmp::Ordering;

use super::{advance, check_stencil, Algorithm, RankMapping, SplitRecord, SplitTrace};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stencil::Stencil;

/// Splits of the whole recursion tree, with the depth of the deepest leaf.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HyperplaneTree {
    pub splits: Vec<SplitRecord>,
    pub depth: usize,
}

/// Chooses `(dim, left_extent, right_extent)` for a grid of `C·n` cells, `C ≥ 2`.
///
/// `pref` holds the stencil's per-dimension cosine preference.
pub fn find_split(dims: &[usize], pref: &[f64], n: usize) -> Result<(usize, usize, usize)> {
    let size: usize = dims.iter().product();
    for i in split_order(dims, pref) {
        let extent = dims[i];
        let rest = size / extent;
        let centre = extent / 2;
        // centre, centre-1, centre+1, centre-2, ...
        for step in 0..2 * extent {
            let offset = step.div_ceil(2);
            let cut = if step % 2 == 1 {
                centre.checked_sub(offset)
            } else {
                Some(centre + offset)
            };
            let Some(cut) = cut.filter(|&c| c >= 1 && c < extent) else {
                continue;
            };
            if (cut * rest).is_multiple_of(n) && ((extent - cut) * rest).is_multiple_of(n) {
                return Ok((i, cut, extent - cut));
            }
        }
    }
    Err(Error::NoSplit {
        dims: dims.to_vec(),
        n,
    })
}

/// Ascending preference, then larger extent, then lower index.
fn split_order(dims: &[usize], pref: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dims.len()).collect();
    order.sort_by(|&a, &b| {
        pref[a]
            .partial_cmp(&pref[b])
            .unwrap_or(Ordering::Equal)
            .then(dims[b].cmp(&dims[a]))
            .then(a.cmp(&b))
    });
    order
}

/// Base-case numbering: fastest-varying dimension first. Highest preference
/// varies fastest, ties go to the smaller extent, then the lower index.
fn base_order(dims: &[usize], pref: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dims.len()).collect();
    order.sort_by(|&a, &b| {
        pref[b]
            .partial_cmp(&pref[a])
            .unwrap_or(Ordering::Equal)
            .then(dims[a].cmp(&dims[b]))
            .then(a.cmp(&b))
    });
    order
}

fn check(grid: &Grid, stencil: &Stencil, n: usize) -> Result<()> {
    check_stencil(grid, stencil)?;
    if n == 0 || !grid.size().is_multiple_of(n) {
        return Err(Error::NotDivisible { p: grid.size(), n });
    }
    Ok(())
}

/// New coordinate of `rank`, plus the splits on its path.
pub fn hyperplane_coord(
    grid: &Grid,
    stencil: &Stencil,
    n: usize,
    rank: usize,
) -> Result<(Vec<usize>, SplitTrace)> {
    check(grid, stencil, n)?;
    if rank >= grid.size() {
        return Err(Error::RankOutOfRange {
            rank,
            size: grid.size(),
        });
    }
    let pref = stencil.cosine_preference();
    let mut dims = grid.dims().to_vec();
    let mut origin = vec![0; dims.len()];
    let mut local = rank;
    let mut trace = Vec::new();
    loop {
        let size: usize = dims.iter().product();
        if size <= 2 * n {
            for i in base_order(&dims, &pref) {
                origin[i] += local % dims[i];
                local /= dims[i];
            }
            return Ok((origin, trace));
        }
        let (i, left_extent, right_extent) = find_split(&dims, &pref, n)?;
        let left = size / dims[i] * left_extent;
        trace.push(SplitRecord {
            dim: i,
            left,
            right: size - left,
        });
        if local < left {
            dims[i] = left_extent;
        } else {
            local -= left;
            origin[i] += left_extent;
            dims[i] = right_extent;
        }
    }
}

pub fn hyperplane_map(grid: &Grid, stencil: &Stencil, n: usize) -> Result<RankMapping> {
    hyperplane_map_traced(grid, stencil, n).map(|(m, _)| m)
}

/// Batch mapping together with every split of the recursion tree.
pub fn hyperplane_map_traced(
    grid: &Grid,
    stencil: &Stencil,
    n: usize,
) -> Result<(RankMapping, HyperplaneTree)> {
    check(grid, stencil, n)?;
    let pref = stencil.cosine_preference();
    let mut coords = Vec::with_capacity(grid.size());
    let mut tree = HyperplaneTree::default();
    fill(
        grid.dims().to_vec(),
        vec![0; grid.ndims()],
        &pref,
        n,
        0,
        &mut coords,
        &mut tree,
    )?;
    Ok((
        RankMapping::new(grid, coords, Algorithm::Hyperplane, None),
        tree,
    ))
}

// Left subtree before right subtree, so ranks come out in order.
fn fill(
    dims: Vec<usize>,
    origin: Vec<usize>,
    pref: &[f64],
    n: usize,
    depth: usize,
    out: &mut Vec<Vec<usize>>,
    tree: &mut HyperplaneTree,
) -> Result<()> {
    let size: usize = dims.iter().product();
    if size <= 2 * n {
        tree.depth = tree.depth.max(depth);
        let order = base_order(&dims, pref);
        // Odometer over the permuted dimensions: order[0] varies fastest.
        let permuted: Vec<usize> = order.iter().rev().map(|&i| dims[i]).collect();
        let mut digits = vec![0; dims.len()];
        loop {
            let mut c = origin.clone();
            for (pos, &i) in order.iter().rev().enumerate() {
                c[i] += digits[pos];
            }
            out.push(c);
            if !advance(&mut digits, &permuted) {
                return Ok(());
            }
        }
    }
    let (i, left_extent, right_extent) = find_split(&dims, pref, n)?;
    let left = size / dims[i] * left_extent;
    tree.splits.push(SplitRecord {
        dim: i,
        left,
        right: size - left,
    });
    let mut left_dims = dims.clone();
    left_dims[i] = left_extent;
    fill(left_dims, origin.clone(), pref, n, depth + 1, out, tree)?;
    let mut right_dims = dims;
    right_dims[i] = right_extent;
    let mut right_origin = origin;
    right_origin[i] += left_extent;
    fill(right_dims, right_origin, pref, n, depth + 1, out, tree)
}

//! Node-size-oblivious recursive halving.
//!
//! Each step halves the dimension with the largest extent per unit of stencil
//! traffic crossing it (`d_i / f_i`). The left half keeps `⌊d_i/2⌋` cells along
//! that dimension and the lower local ranks, so consecutive ranks stay
//! spatially clustered at every scale.

use std::cmp::Ordering;

use super::{check_stencil, Algorithm, RankMapping, SplitRecord, SplitTrace};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stencil::Stencil;

/// Dimension to halve, or `None` once a single cell is left.
///
/// Dimensions of extent 1 cannot be halved and are never chosen. A dimension no
/// offset crosses (`f_i = 0`) outranks every other; among those the larger
/// extent wins. Remaining ties go to the lower index.
pub fn kdtree_split_dim(dims: &[usize], weights: &[usize]) -> Option<usize> {
    let better = |a: usize, b: usize| -> Ordering {
        match (weights[a], weights[b]) {
            (0, 0) => dims[a].cmp(&dims[b]),
            (0, _) => Ordering::Greater,
            (_, 0) => Ordering::Less,
            (fa, fb) => (dims[a] * fb).cmp(&(dims[b] * fa)),
        }
    };
    (0..dims.len())
        .filter(|&i| dims[i] > 1)
        .fold(None, |best, i| match best {
            Some(b) if better(i, b) != Ordering::Greater => Some(b),
            _ => Some(i),
        })
}

pub fn kdtree_coord(
    grid: &Grid,
    stencil: &Stencil,
    rank: usize,
) -> Result<(Vec<usize>, SplitTrace)> {
    check_stencil(grid, stencil)?;
    if rank >= grid.size() {
        return Err(Error::RankOutOfRange {
            rank,
            size: grid.size(),
        });
    }
    let weights = stencil.comm_weights();
    let mut dims = grid.dims().to_vec();
    let mut coord = vec![0; dims.len()];
    let mut local = rank;
    let mut trace = Vec::new();
    while let Some(i) = kdtree_split_dim(&dims, &weights) {
        let size: usize = dims.iter().product();
        let half = dims[i] / 2;
        let left = size / dims[i] * half;
        trace.push(SplitRecord {
            dim: i,
            left,
            right: size - left,
        });
        if local < left {
            dims[i] = half;
        } else {
            local -= left;
            coord[i] += half;
            dims[i] -= half;
        }
    }
    Ok((coord, trace))
}

pub fn kdtree_map(grid: &Grid, stencil: &Stencil) -> Result<RankMapping> {
    check_stencil(grid, stencil)?;
    let weights = stencil.comm_weights();
    let mut coords = Vec::with_capacity(grid.size());
    fill(
        grid.dims().to_vec(),
        vec![0; grid.ndims()],
        &weights,
        &mut coords,
    );
    Ok(RankMapping::new(grid, coords, Algorithm::KdTree, None))
}

fn fill(dims: Vec<usize>, origin: Vec<usize>, weights: &[usize], out: &mut Vec<Vec<usize>>) {
    let Some(i) = kdtree_split_dim(&dims, weights) else {
        out.push(origin);
        return;
    };
    let half = dims[i] / 2;
    let mut left = dims.clone();
    left[i] = half;
    fill(left, origin.clone(), weights, out);
    let mut right = dims;
    right[i] -= half;
    let mut right_origin = origin;
    right_origin[i] += half;
    fill(right, right_origin, weights, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::Builtin;

    #[test]
    fn tie_goes_to_lower_index() {
        let g = Grid::new(vec![4, 4]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighbor, 2).unwrap();
        assert_eq!(kdtree_split_dim(g.dims(), &s.comm_weights()), Some(0));
        for r in 0..16 {
            let (c, trace) = kdtree_coord(&g, &s, r).unwrap();
            assert_eq!(
                trace[0],
                SplitRecord {
                    dim: 0,
                    left: 8,
                    right: 8
                }
            );
            assert_eq!(c[0] < 2, r < 8, "rank {r}");
        }
    }

    #[test]
    fn single_cell() {
        let g = Grid::new(vec![1, 1]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighbor, 2).unwrap();
        assert_eq!(kdtree_coord(&g, &s, 0).unwrap(), (vec![0, 0], vec![]));
    }

    #[test]
    fn uncrossed_dimension_first() {
        let s = Stencil::builtin(Builtin::Component, 2).unwrap();
        assert_eq!(s.comm_weights(), vec![2, 0]);
        let g = Grid::new(vec![3, 6]).unwrap();
        let (_, trace) = kdtree_coord(&g, &s, 0).unwrap();
        assert_eq!(
            trace[0],
            SplitRecord {
                dim: 1,
                left: 9,
                right: 9
            }
        );
        // Extent-1 dimensions are skipped even if uncrossed.
        assert_eq!(kdtree_split_dim(&[5, 1], &[2, 0]), Some(0));
        assert_eq!(kdtree_split_dim(&[1, 1], &[2, 0]), None);
    }

    #[test]
    fn weighted_ratio() {
        // hops: f = [6, 2]; 12/6 = 2 < 6/2 = 3, so dimension 1 is split.
        assert_eq!(kdtree_split_dim(&[12, 6], &[6, 2]), Some(1));
        assert_eq!(kdtree_split_dim(&[18, 6], &[6, 2]), Some(0));
    }

    #[test]
    fn per_rank_matches_batch() {
        let g = Grid::new(vec![7, 5, 3]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighborHops, 3).unwrap();
        let m = kdtree_map(&g, &s).unwrap();
        m.validate(&g).unwrap();
        for r in 0..g.size() {
            assert_eq!(kdtree_coord(&g, &s, r).unwrap().0, m.coord(r));
        }
    }
}

//! Baseline: factor the grid into a grid of nodes times a per-node box.
//!
//! Our own reconstruction of the prime-factor scheme: prime factors of `n`,
//! largest first, go to the dimension with the largest remaining outer extent
//! that they divide.

use super::{Algorithm, RankMapping};
use crate::error::{Error, Result};
use crate::grid::{prime_factors, unrank, Grid};

/// Extents of the box each node occupies; their product is `n` and each divides
/// the matching grid extent.
pub fn nodecart_inner_dims(dims: &[usize], n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidNodes(
            "processes per node must be at least 1".into(),
        ));
    }
    let mut inner = vec![1; dims.len()];
    for factor in prime_factors(n as u64).into_iter().rev() {
        let factor = factor as usize;
        let target = (0..dims.len())
            .filter(|&i| (dims[i] / inner[i]).is_multiple_of(factor))
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dims[b] / inner[b] >= dims[i] / inner[i] => Some(b),
                _ => Some(i),
            })
            .ok_or_else(|| Error::DecompositionInfeasible {
                dims: dims.to_vec(),
                n,
                factor,
            })?;
        inner[target] *= factor;
    }
    Ok(inner)
}

fn compose(dims: &[usize], inner: &[usize], n: usize, rank: usize) -> Vec<usize> {
    let outer: Vec<usize> = dims.iter().zip(inner).map(|(d, i)| d / i).collect();
    let node = unrank(&outer, rank / n);
    let cell = unrank(inner, rank % n);
    node.iter()
        .zip(&cell)
        .zip(inner)
        .map(|((q, c), i)| q * i + c)
        .collect()
}

pub fn nodecart_coord(grid: &Grid, n: usize, rank: usize) -> Result<Vec<usize>> {
    if rank >= grid.size() {
        return Err(Error::RankOutOfRange {
            rank,
            size: grid.size(),
        });
    }
    let inner = nodecart_inner_dims(grid.dims(), n)?;
    Ok(compose(grid.dims(), &inner, n, rank))
}

pub fn nodecart_map(grid: &Grid, n: usize) -> Result<RankMapping> {
    let inner = nodecart_inner_dims(grid.dims(), n)?;
    let coords = (0..grid.size())
        .map(|r| compose(grid.dims(), &inner, n, r))
        .collect();
    Ok(RankMapping::new(grid, coords, Algorithm::Nodecart, None))
}

//! Rank reordering algorithms.
//!
//! Every algorithm is a pure function of `(grid, stencil, n, rank)`: a process
//! can compute its own new coordinate without talking to anyone. The batch
//! entry points walk the recursion (or tiling) once and fill every rank, and
//! are tested against the per-rank routines.

mod hyperplane;
mod kdtree;
mod nodecart;
mod strips;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{rank_of, unrank, Grid};
use crate::stencil::Stencil;

pub use hyperplane::{
    find_split, hyperplane_coord, hyperplane_map, hyperplane_map_traced, HyperplaneTree,
};
pub use kdtree::{kdtree_coord, kdtree_map, kdtree_split_dim};
pub use nodecart::{nodecart_coord, nodecart_inner_dims, nodecart_map};
pub use strips::{distortion_factors, strip_layout, strips_coord, strips_map, StripLayout};

/// One recursive split: dimension index and the sizes (process counts) of both halves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitRecord {
    pub dim: usize,
    pub left: usize,
    pub right: usize,
}

/// Splits visited on the way from the full grid down to one rank's leaf.
pub type SplitTrace = Vec<SplitRecord>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Mean,
    Min,
    Max,
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregate::Mean),
            "min" => Ok(Aggregate::Min),
            "max" => Ok(Aggregate::Max),
            other => Err(Error::InvalidNodes(format!(
                "unknown aggregate rule '{other}' (expected mean, min or max)"
            ))),
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregate::Mean => "mean",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
        })
    }
}

/// Processes per compute node. Node `i` owns the `sizes[i]` ranks following
/// those of nodes `0..i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeConfig {
    sizes: Vec<usize>,
    rule: Aggregate,
    prefix: Vec<usize>,
}

impl NodeConfig {
    pub fn new(sizes: Vec<usize>, rule: Aggregate) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidNodes("no nodes".into()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidNodes(format!("node {i} has no processes")));
        }
        let prefix = sizes
            .iter()
            .scan(0, |acc, &s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            sizes,
            rule,
            prefix,
        })
    }

    pub fn homogeneous(nodes: usize, per_node: usize) -> Result<Self> {
        Self::new(vec![per_node; nodes], Aggregate::Mean)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn rule(&self) -> Aggregate {
        self.rule
    }

    pub fn node_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn total(&self) -> usize {
        *self.prefix.last().unwrap()
    }

    /// The single `n` handed to the algorithms; mean is rounded half up.
    pub fn aggregate_n(&self) -> usize {
        match self.rule {
            Aggregate::Mean => {
                let (sum, count) = (self.total(), self.sizes.len());
                ((2 * sum + count) / (2 * count)).max(1)
            }
            Aggregate::Min => *self.sizes.iter().min().unwrap(),
            Aggregate::Max => *self.sizes.iter().max().unwrap(),
        }
    }

    pub fn owner_of(&self, rank: usize) -> Result<usize> {
        if rank >= self.total() {
            return Err(Error::RankOutOfRange {
                rank,
                size: self.total(),
            });
        }
        Ok(self.prefix.partition_point(|&end| end <= rank))
    }

    /// Owner of every rank, in rank order.
    pub fn owners(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(node, &s)| std::iter::repeat_n(node, s))
            .collect()
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.total() != grid.size() {
            return Err(Error::InvalidNodes(format!(
                "node sizes sum to {} but the grid has {} processes",
                self.total(),
                grid.size()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Blocked,
    Random,
    Hyperplane,
    KdTree,
    Strips,
    Nodecart,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Blocked,
        Algorithm::Random,
        Algorithm::Hyperplane,
        Algorithm::KdTree,
        Algorithm::Strips,
        Algorithm::Nodecart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Blocked => "blocked",
            Algorithm::Random => "random",
            Algorithm::Hyperplane => "hyperplane",
            Algorithm::KdTree => "kdtree",
            Algorithm::Strips => "strips",
            Algorithm::Nodecart => "nodecart",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .or(match s {
                "kd-tree" | "kd_tree" => Some(Algorithm::KdTree),
                "stencil-strips" => Some(Algorithm::Strips),
                _ => None,
            })
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// New grid coordinate of every original rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankMapping {
    dims: Vec<usize>,
    coords: Vec<Vec<usize>>,
    algorithm: Algorithm,
    seed: Option<u64>,
}

impl RankMapping {
    /// Wraps coordinates without checking them; see [`RankMapping::validate`].
    pub fn new(
        grid: &Grid,
        coords: Vec<Vec<usize>>,
        algorithm: Algorithm,
        seed: Option<u64>,
    ) -> Self {
        Self {
            dims: grid.dims().to_vec(),
            coords,
            algorithm,
            seed,
        }
    }

    /// Builds a mapping from new ranks instead of coordinates.
    pub fn from_new_ranks(
        grid: &Grid,
        new_ranks: &[usize],
        algorithm: Algorithm,
        seed: Option<u64>,
    ) -> Result<Self> {
        let coords = new_ranks
            .iter()
            .map(|&r| grid.rank_to_coord(r))
            .collect::<Result<Vec<_>>>()?;
        let m = Self::new(grid, coords, algorithm, seed);
        m.validate(grid)?;
        Ok(m)
    }

    pub fn coords(&self) -> &[Vec<usize>] {
        &self.coords
    }

    pub fn coord(&self, rank: usize) -> &[usize] {
        &self.coords[rank]
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// New rank of every original rank.
    pub fn new_ranks(&self) -> Vec<usize> {
        self.coords.iter().map(|c| rank_of(&self.dims, c)).collect()
    }

    pub(crate) fn relabel(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    /// Checks that the mapping is a permutation of all coordinates of `grid`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.dims != grid.dims() {
            return Err(Error::NotBijective(format!(
                "mapping built for dims {:?}, grid has {:?}",
                self.dims,
                grid.dims()
            )));
        }
        if self.coords.len() != grid.size() {
            return Err(Error::NotBijective(format!(
                "{} entries for {} processes",
                self.coords.len(),
                grid.size()
            )));
        }
        let mut seen = vec![usize::MAX; grid.size()];
        for (r, c) in self.coords.iter().enumerate() {
            let target = grid
                .coord_to_rank(c)
                .map_err(|e| Error::NotBijective(format!("rank {r}: {e}")))?;
            if seen[target] != usize::MAX {
                return Err(Error::NotBijective(format!(
                    "ranks {} and {r} both map to {c:?}",
                    seen[target]
                )));
            }
            seen[target] = r;
        }
        Ok(())
    }
}

/// Identity reordering: rank `r` keeps grid position `r`.
pub fn blocked_map(grid: &Grid) -> RankMapping {
    let coords = (0..grid.size()).map(|r| unrank(grid.dims(), r)).collect();
    RankMapping::new(grid, coords, Algorithm::Blocked, None)
}

/// Uniform random permutation from a ChaCha8 stream seeded with `seed`.
pub fn random_map(grid: &Grid, seed: u64) -> RankMapping {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..grid.size()).collect();
    perm.shuffle(&mut rng);
    let coords = perm.into_iter().map(|r| unrank(grid.dims(), r)).collect();
    RankMapping::new(grid, coords, Algorithm::Random, Some(seed))
}

pub(crate) fn check_stencil(grid: &Grid, stencil: &Stencil) -> Result<()> {
    if stencil.ndims() != grid.ndims() {
        return Err(Error::DimensionMismatch {
            stencil: stencil.ndims(),
            grid: grid.ndims(),
        });
    }
    Ok(())
}

/// Why an algorithm did not produce its own mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Flag {
    /// No mapping; the algorithm's precondition does not hold.
    Skipped(String),
    /// The mapping is the blocked one.
    BlockedFallback(String),
}

impl Flag {
    /// Short machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Flag::Skipped(_) => "skipped",
            Flag::BlockedFallback(_) => "blocked-fallback",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::Skipped(why) => write!(f, "skipped:{why}"),
            Flag::BlockedFallback(why) => write!(f, "blocked-fallback:{why}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MappingOutcome {
    pub algorithm: Algorithm,
    pub mapping: Option<RankMapping>,
    pub flags: Vec<Flag>,
}

/// Runs one algorithm with the routing rules of the batch driver: hyperplane is
/// skipped when `p` is not a multiple of `n`; nodecart falls back to blocked
/// when no node box decomposition exists.
pub fn run_one(
    algorithm: Algorithm,
    grid: &Grid,
    stencil: &Stencil,
    nodes: &NodeConfig,
    seed: u64,
) -> Result<MappingOutcome> {
    check_stencil(grid, stencil)?;
    nodes.check_grid(grid)?;
    let n = nodes.aggregate_n();
    let mut flags = Vec::new();
    let mapping = match algorithm {
        Algorithm::Blocked => Some(blocked_map(grid)),
        Algorithm::Random => Some(random_map(grid, seed)),
        Algorithm::Hyperplane => match hyperplane_map(grid, stencil, n) {
            Ok(m) => Some(m),
            Err(e @ Error::NotDivisible { .. }) => {
                flags.push(Flag::Skipped(e.to_string()));
                None
            }
            Err(e) => return Err(e),
        },
        Algorithm::KdTree => Some(kdtree_map(grid, stencil)?),
        Algorithm::Strips => Some(strips_map(grid, stencil, n)?),
        Algorithm::Nodecart => match nodecart_map(grid, n) {
            Ok(m) => Some(m),
            Err(e @ Error::DecompositionInfeasible { .. }) => {
                flags.push(Flag::BlockedFallback(e.to_string()));
                Some(blocked_map(grid).relabel(Algorithm::Nodecart))
            }
            Err(e) => return Err(e),
        },
    };
    if let Some(m) = &mapping {
        m.validate(grid)?;
    }
    Ok(MappingOutcome {
        algorithm,
        mapping,
        flags,
    })
}

/// All six algorithms on one instance, in [`Algorithm::ALL`] order.
pub fn run_all(
    grid: &Grid,
    stencil: &Stencil,
    nodes: &NodeConfig,
    seed: u64,
) -> Result<Vec<MappingOutcome>> {
    Algorithm::ALL
        .into_iter()
        .map(|a| run_one(a, grid, stencil, nodes, seed))
        .collect()
}

/// Row-major odometer step over `dims`; returns false after the last cell.
pub(crate) fn advance(coord: &mut [usize], dims: &[usize]) -> bool {
    for (c, &d) in coord.iter_mut().zip(dims).rev() {
        *c += 1;
        if *c < d {
            return true;
        }
        *c = 0;
    }
    false
}

//! Cartesian grid geometry.
//!
//! Ranks are laid out row-major: the last dimension varies fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `d`-dimensional process grid with optional periodic wrap per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dims: Vec<usize>,
    periods: Vec<bool>,
}

impl Grid {
    /// Non-periodic grid.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let periods = vec![false; dims.len()];
        Self::with_periods(dims, periods)
    }

    pub fn with_periods(dims: Vec<usize>, periods: Vec<bool>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidGrid("at least one dimension required".into()));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidGrid(format!("dimension {i} has size 0")));
        }
        if periods.len() != dims.len() {
            return Err(Error::InvalidGrid(format!(
                "{} period flags for {} dimensions",
                periods.len(),
                dims.len()
            )));
        }
        let mut size: u64 = 1;
        for &d in &dims {
            size = size
                .checked_mul(d as u64)
                .ok_or_else(|| Error::InvalidGrid("process count overflows u64".into()))?;
        }
        if usize::try_from(size).is_err() {
            return Err(Error::InvalidGrid("process count exceeds usize".into()));
        }
        Ok(Self { dims, periods })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn periods(&self) -> &[bool] {
        &self.periods
    }

    pub fn ndims(&self) -> usize {
        self.dims.len()
    }

    /// Number of processes `p`.
    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn rank_to_coord(&self, rank: usize) -> Result<Vec<usize>> {
        let size = self.size();
        if rank >= size {
            return Err(Error::RankOutOfRange { rank, size });
        }
        Ok(unrank(&self.dims, rank))
    }

    pub fn coord_to_rank(&self, coord: &[usize]) -> Result<usize> {
        if coord.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                stencil: coord.len(),
                grid: self.dims.len(),
            });
        }
        for (index, (&value, &extent)) in coord.iter().zip(&self.dims).enumerate() {
            if value >= extent {
                return Err(Error::CoordOutOfRange {
                    index,
                    value,
                    extent,
                });
            }
        }
        Ok(rank_of(&self.dims, coord))
    }
}

/// Row-major decomposition of `rank` over `dims`. No range check.
pub(crate) fn unrank(dims: &[usize], mut rank: usize) -> Vec<usize> {
    let mut coord = vec![0; dims.len()];
    for (c, &d) in coord.iter_mut().zip(dims).rev() {
        *c = rank % d;
        rank /= d;
    }
    coord
}

/// Row-major linearisation of `coord` over `dims`. No range check.
pub(crate) fn rank_of(dims: &[usize], coord: &[usize]) -> usize {
    coord.iter().zip(dims).fold(0, |acc, (&c, &d)| acc * d + c)
}

/// Prime factors of `x` in ascending order, with multiplicity. `1` has none.
pub fn prime_factors(mut x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= x {
        while x.is_multiple_of(f) {
            out.push(f);
            x /= f;
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if x > 1 {
        out.push(x);
    }
    out
}

/// Balanced factorisation of `p` into `d` factors, sorted non-increasing.
///
/// Among all factorisations, picks the one with the smallest spread
/// `max - min`; ties go to the lexicographically smallest vector.
pub fn dims_create(p: usize, d: usize) -> Vec<usize> {
    assert!(p >= 1 && d >= 1, "dims_create needs p >= 1 and d >= 1");
    let mut best: Option<Vec<usize>> = None;
    let mut current = Vec::with_capacity(d);
    descend(p, d, p, &mut current, &mut best);
    best.expect("the factorisation [p, 1, ..., 1] always exists")
}

fn descend(
    remaining: usize,
    slots: usize,
    cap: usize,
    current: &mut Vec<usize>,
    best: &mut Option<Vec<usize>>,
) {
    if slots == 1 {
        if remaining > cap {
            return;
        }
        current.push(remaining);
        let better = match best {
            None => true,
            Some(b) => {
                let spread = |v: &[usize]| v[0] - v[v.len() - 1];
                let (s_new, s_old) = (spread(current), spread(b));
                s_new < s_old || (s_new == s_old && current.as_slice() < b.as_slice())
            }
        };
        if better {
            *best = Some(current.clone());
        }
        current.pop();
        return;
    }
    // The largest remaining factor must be at least the slots-th root of what is left.
    for f in (1..=cap.min(remaining)).rev() {
        if !remaining.is_multiple_of(f) {
            continue;
        }
        if (f as u128).pow(slots as u32) < remaining as u128 {
            break;
        }
        current.push(f);
        descend(remaining / f, slots - 1, f, current, best);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_to_coord_examples() {
        let g = Grid::new(vec![5, 4]).unwrap();
        assert_eq!(g.rank_to_coord(0).unwrap(), vec![0, 0]);
        assert_eq!(g.rank_to_coord(7).unwrap(), vec![1, 3]);
        let g = Grid::new(vec![3, 2, 2]).unwrap();
        assert_eq!(g.rank_to_coord(11).unwrap(), vec![2, 1, 1]);
    }

    #[test]
    fn coord_to_rank_examples() {
        let g = Grid::new(vec![5, 4]).unwrap();
        assert_eq!(g.coord_to_rank(&[0, 0]).unwrap(), 0);
        assert_eq!(g.coord_to_rank(&[1, 3]).unwrap(), 7);
        let g = Grid::new(vec![2, 2]).unwrap();
        assert_eq!(g.coord_to_rank(&[1, 1]).unwrap(), 3);
    }

    #[test]
    fn range_errors() {
        let g = Grid::new(vec![5, 4]).unwrap();
        assert_eq!(
            g.rank_to_coord(20),
            Err(Error::RankOutOfRange { rank: 20, size: 20 })
        );
        assert!(matches!(
            g.coord_to_rank(&[0, 4]),
            Err(Error::CoordOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn invalid_grids() {
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::new(vec![3, 0]).is_err());
        assert!(Grid::with_periods(vec![3, 2], vec![true]).is_err());
        assert!(Grid::new(vec![usize::MAX, 2]).is_err());
    }

    #[test]
    fn prime_factor_examples() {
        assert_eq!(prime_factors(1), Vec::<u64>::new());
        assert_eq!(prime_factors(48), vec![2, 2, 2, 2, 3]);
        assert_eq!(prime_factors(50), vec![2, 5, 5]);
        assert_eq!(prime_factors(97), vec![97]);
    }

    #[test]
    fn prime_factors_multiply_back() {
        for x in 1..=1_000_000u64 {
            let f = prime_factors(x);
            assert_eq!(f.iter().product::<u64>(), x);
            assert!(f.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    /// Exhaustive reference: every ordered d-tuple of divisors, sorted and ranked.
    fn dims_create_oracle(p: usize, d: usize) -> Vec<usize> {
        fn all(p: usize, d: usize) -> Vec<Vec<usize>> {
            if d == 1 {
                return vec![vec![p]];
            }
            let mut out = Vec::new();
            for f in 1..=p {
                if p.is_multiple_of(f) {
                    for mut rest in all(p / f, d - 1) {
                        rest.insert(0, f);
                        out.push(rest);
                    }
                }
            }
            out
        }
        all(p, d)
            .into_iter()
            .map(|mut v| {
                v.sort_unstable_by(|a, b| b.cmp(a));
                v
            })
            .min_by(|a, b| (a[0] - a[d - 1], a.clone()).cmp(&(b[0] - b[d - 1], b.clone())))
            .unwrap()
    }

    #[test]
    fn dims_create_examples() {
        assert_eq!(dims_create(2400, 2), vec![50, 48]);
        assert_eq!(dims_create(4800, 2), vec![75, 64]);
        assert_eq!(dims_create(12, 3), vec![3, 2, 2]);
        assert_eq!(dims_create(7, 1), vec![7]);
        assert_eq!(dims_create(1, 3), vec![1, 1, 1]);
    }

    #[test]
    fn dims_create_matches_exhaustive_search() {
        for p in 1..=120 {
            for d in 1..=4 {
                assert_eq!(dims_create(p, d), dims_create_oracle(p, d), "p={p} d={d}");
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(dims in prop::collection::vec(1usize..12, 1..4)) {
            let g = Grid::new(dims).unwrap();
            prop_assume!(g.size() <= 10_000);
            for r in 0..g.size() {
                let c = g.rank_to_coord(r).unwrap();
                prop_assert_eq!(g.coord_to_rank(&c).unwrap(), r);
            }
        }

        #[test]
        fn dims_create_multiplies_back(p in 1usize..5000, d in 1usize..4) {
            let dims = dims_create(p, d);
            prop_assert_eq!(dims.len(), d);
            prop_assert_eq!(dims.iter().product::<usize>(), p);
            prop_assert!(dims.windows(2).all(|w| w[0] >= w[1]));
            if d == 1 {
                prop_assert_eq!(dims, vec![p]);
            }
        }
    }
}

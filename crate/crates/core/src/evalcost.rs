//! Inter-node communication cost of a mapping.
//!
//! Edges are directed: every (process, offset) pair whose target exists is one
//! send. An undirected cut between two processes that both talk to each other
//! therefore counts twice in `j_sum`.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{rank_of, unrank, Grid};
use crate::mappers::{check_stencil, NodeConfig, RankMapping};
use crate::stencil::Stencil;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    /// Directed edges whose endpoints live on different nodes.
    pub j_sum: u64,
    /// Largest per-node count of outgoing cut edges.
    pub j_max: u64,
    pub per_node: Vec<u64>,
    /// First node attaining `j_max`.
    pub bottleneck_node: usize,
    /// Fingerprint of (grid, stencil, node sizes) this report was computed on.
    pub instance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reduction {
    pub sum_ratio: f64,
    pub max_ratio: f64,
}

/// Stable hex digest identifying a (grid, stencil, node sizes) triple.
pub fn instance_fingerprint(grid: &Grid, stencil: &Stencil, nodes: &NodeConfig) -> String {
    let canonical = serde_json::json!({
        "dims": grid.dims(),
        "periods": grid.periods(),
        "offsets": stencil.offsets(),
        "sizes": nodes.sizes(),
    });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Node owning original rank `rank`.
pub fn owner_of(nodes: &NodeConfig, rank: usize) -> Result<usize> {
    nodes.owner_of(rank)
}

/// Directed edges `(source rank, target rank)` of the communication graph in
/// grid order: all offsets of rank 0, then rank 1, and so on. Targets outside a
/// non-periodic dimension are dropped; periodic ones wrap.
pub fn induced_edges<'a>(
    grid: &'a Grid,
    stencil: &'a Stencil,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    let dims = grid.dims();
    let periods = grid.periods();
    (0..grid.size()).flat_map(move |u| {
        let coord = unrank(dims, u);
        stencil.offsets().iter().filter_map(move |off| {
            let mut target = Vec::with_capacity(dims.len());
            for ((&c, &o), (&d, &periodic)) in coord.iter().zip(off).zip(dims.iter().zip(periods)) {
                let t = c as i64 + o;
                let d = d as i64;
                if periodic {
                    target.push(t.rem_euclid(d) as usize);
                } else if (0..d).contains(&t) {
                    target.push(t as usize);
                } else {
                    return None;
                }
            }
            Some((u, rank_of(dims, &target)))
        })
    })
}

/// Cost of `mapping`: the process at original rank `r` runs on the node owning
/// `r` and sits at grid position `mapping.coord(r)`.
pub fn evaluate(
    grid: &Grid,
    stencil: &Stencil,
    mapping: &RankMapping,
    nodes: &NodeConfig,
) -> Result<CostReport> {
    check_stencil(grid, stencil)?;
    nodes.check_grid(grid)?;
    mapping.validate(grid)?;
    let owners = nodes.owners();
    let mut owner_at = vec![0; grid.size()];
    for (r, cell) in mapping.new_ranks().into_iter().enumerate() {
        owner_at[cell] = owners[r];
    }
    Ok(cost_of_cells(grid, stencil, &owner_at, nodes))
}

/// Cost given the owning node of every grid cell directly.
pub(crate) fn cost_of_cells(
    grid: &Grid,
    stencil: &Stencil,
    owner_at: &[usize],
    nodes: &NodeConfig,
) -> CostReport {
    let mut per_node = vec![0u64; nodes.node_count()];
    for (u, v) in induced_edges(grid, stencil) {
        if owner_at[u] != owner_at[v] {
            per_node[owner_at[u]] += 1;
        }
    }
    let j_sum = per_node.iter().sum();
    let (bottleneck_node, &j_max) = per_node
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|&(_, c)| c)
        .unwrap();
    CostReport {
        j_sum,
        j_max,
        per_node,
        bottleneck_node,
        instance: instance_fingerprint(grid, stencil, nodes),
    }
}

fn ratio(x: u64, base: u64) -> f64 {
    match (x, base) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        _ => x as f64 / base as f64,
    }
}

/// `x` relative to `baseline`; `0/0` is 1, anything else over 0 is infinite.
pub fn reduction(x: &CostReport, baseline: &CostReport) -> Result<Reduction> {
    if x.instance != baseline.instance {
        return Err(Error::InstanceMismatch);
    }
    Ok(Reduction {
        sum_ratio: ratio(x.j_sum, baseline.j_sum),
        max_ratio: ratio(x.j_max, baseline.j_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappers::{blocked_map, random_map, Aggregate};
    use crate::stencil::Builtin;
    use proptest::prelude::*;

    fn nn(d: usize) -> Stencil {
        Stencil::builtin(Builtin::NearestNeighbor, d).unwrap()
    }

    #[test]
    fn owner_examples() {
        let nc = NodeConfig::homogeneous(2, 4).unwrap();
        assert_eq!(owner_of(&nc, 5).unwrap(), 1);
        let nc = NodeConfig::new(vec![3, 5], Aggregate::Mean).unwrap();
        assert_eq!(owner_of(&nc, 3).unwrap(), 1);
        let nc = NodeConfig::homogeneous(1, 8).unwrap();
        assert!((0..8).all(|r| owner_of(&nc, r).unwrap() == 0));
        assert!(owner_of(&nc, 8).is_err());
    }

    #[test]
    fn edge_examples() {
        let g = Grid::new(vec![2, 2]).unwrap();
        assert_eq!(induced_edges(&g, &nn(2)).count(), 8);

        let ring = Grid::with_periods(vec![3], vec![true]).unwrap();
        let right = Stencil::new(1, vec![vec![1]]).unwrap();
        let edges: Vec<_> = induced_edges(&ring, &right).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2), (2, 0)]);

        let g = Grid::new(vec![1, 5]).unwrap();
        let comp = Stencil::builtin(Builtin::Component, 2).unwrap();
        assert_eq!(induced_edges(&g, &comp).count(), 0);
    }

    #[test]
    fn periodic_self_loops_are_kept_but_free() {
        let g = Grid::with_periods(vec![2], vec![true]).unwrap();
        let s = Stencil::new(1, vec![vec![2], vec![1]]).unwrap();
        let edges: Vec<_> = induced_edges(&g, &s).collect();
        assert_eq!(edges, vec![(0, 0), (0, 1), (1, 1), (1, 0)]);
        let nc = NodeConfig::homogeneous(2, 1).unwrap();
        let rep = evaluate(&g, &s, &blocked_map(&g), &nc).unwrap();
        assert_eq!(rep.j_sum, 2);
    }

    #[test]
    fn blocked_two_by_two() {
        let g = Grid::new(vec![2, 2]).unwrap();
        let nc = NodeConfig::homogeneous(2, 2).unwrap();
        let rep = evaluate(&g, &nn(2), &blocked_map(&g), &nc).unwrap();
        assert_eq!(rep.j_sum, 4);
        assert_eq!(rep.j_max, 2);
        assert_eq!(rep.per_node, vec![2, 2]);
        assert_eq!(rep.bottleneck_node, 0);
    }

    #[test]
    fn single_node_costs_nothing() {
        let g = Grid::new(vec![3, 4]).unwrap();
        let nc = NodeConfig::homogeneous(1, 12).unwrap();
        for seed in 0..5 {
            let rep = evaluate(&g, &nn(2), &random_map(&g, seed), &nc).unwrap();
            assert_eq!((rep.j_sum, rep.j_max), (0, 0));
        }
    }

    #[test]
    fn three_way_yes_assignment() {
        // Rows of [3,6] filled by {6}, {3,3}, {2,2,2}: blocked order does exactly that.
        let g = Grid::new(vec![3, 6]).unwrap();
        let s = Stencil::new(2, vec![vec![0, -1], vec![0, 1]]).unwrap();
        let nc = NodeConfig::new(vec![6, 3, 3, 2, 2, 2], Aggregate::Mean).unwrap();
        let rep = evaluate(&g, &s, &blocked_map(&g), &nc).unwrap();
        assert_eq!(rep.j_sum, 6);
    }

    #[test]
    fn non_bijective_rejected() {
        let g = Grid::new(vec![2, 2]).unwrap();
        let nc = NodeConfig::homogeneous(2, 2).unwrap();
        let bad = RankMapping::new(
            &g,
            vec![vec![0, 0]; 4],
            crate::mappers::Algorithm::Blocked,
            None,
        );
        assert!(matches!(
            evaluate(&g, &nn(2), &bad, &nc),
            Err(Error::NotBijective(_))
        ));
    }

    #[test]
    fn reduction_rules() {
        let g = Grid::new(vec![2, 2]).unwrap();
        let nc = NodeConfig::homogeneous(2, 2).unwrap();
        let base = evaluate(&g, &nn(2), &blocked_map(&g), &nc).unwrap();
        let r = reduction(&base, &base).unwrap();
        assert_eq!((r.sum_ratio, r.max_ratio), (1.0, 1.0));

        let mk = |j_sum, j_max| CostReport {
            j_sum,
            j_max,
            per_node: vec![],
            bottleneck_node: 0,
            instance: "x".into(),
        };
        assert_eq!(reduction(&mk(96, 2), &mk(192, 4)).unwrap().sum_ratio, 0.5);
        let r = reduction(&mk(0, 0), &mk(0, 0)).unwrap();
        assert_eq!((r.sum_ratio, r.max_ratio), (1.0, 1.0));
        assert_eq!(
            reduction(&mk(3, 1), &mk(0, 0)).unwrap().sum_ratio,
            f64::INFINITY
        );

        let other = CostReport {
            instance: "y".into(),
            ..mk(1, 1)
        };
        assert_eq!(reduction(&mk(1, 1), &other), Err(Error::InstanceMismatch));
    }

    proptest! {
        #[test]
        fn symmetric_stencil_cut_is_even(
            dims in prop::collection::vec(1usize..6, 2..4),
            nodes in 1usize..5,
            seed in any::<u64>(),
        ) {
            let g = Grid::new(dims).unwrap();
            let p = g.size();
            // Split p as evenly as possible over `nodes` nodes.
            let nodes = nodes.min(p);
            let sizes: Vec<usize> = (0..nodes).map(|i| p / nodes + usize::from(i < p % nodes)).collect();
            let nc = NodeConfig::new(sizes, Aggregate::Mean).unwrap();
            let s = Stencil::builtin(Builtin::NearestNeighborHops, g.ndims()).unwrap();
            let rep = evaluate(&g, &s, &random_map(&g, seed), &nc).unwrap();
            prop_assert_eq!(rep.j_sum % 2, 0);
            prop_assert_eq!(rep.per_node.iter().sum::<u64>(), rep.j_sum);
            prop_assert_eq!(rep.j_max, *rep.per_node.iter().max().unwrap());
            prop_assert!(rep.j_sum <= (p * s.len()) as u64);
        }

        #[test]
        fn relabelling_equal_nodes_keeps_j_sum(seed in any::<u64>(), swap in 0usize..3) {
            // Four nodes of 3 on a 4x3 grid; swapping two equal rank blocks
            // is the same partition with node labels exchanged.
            let g = Grid::new(vec![4, 3]).unwrap();
            let nc = NodeConfig::homogeneous(4, 3).unwrap();
            let m = random_map(&g, seed);
            let mut coords = m.coords().to_vec();
            let (a, b) = (swap * 3, (swap + 1) * 3);
            for i in 0..3 {
                coords.swap(a + i, b + i);
            }
            let swapped = RankMapping::new(&g, coords, m.algorithm(), m.seed());
            let s = nn(2);
            prop_assert_eq!(
                evaluate(&g, &s, &m, &nc).unwrap().j_sum,
                evaluate(&g, &s, &swapped, &nc).unwrap().j_sum
            );
        }
    }
}

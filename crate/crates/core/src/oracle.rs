//! Exact minimum-`j_sum` partitioning for tiny grids, and the reduction from
//! 3-way number partitioning that yields instances with a known optimum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evalcost::induced_edges;
use crate::grid::{unrank, Grid};
use crate::mappers::{check_stencil, Aggregate, Algorithm, NodeConfig, RankMapping};
use crate::stencil::Stencil;

pub const DEFAULT_LIMIT: usize = 12;

/// Grid partitioning instance built from a 3-way partition multiset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NpInstance {
    pub multiset: Vec<usize>,
    pub grid: Grid,
    pub stencil: Stencil,
    pub node_sizes: Vec<usize>,
    /// Directed cut threshold reached exactly by yes-instances.
    pub q: u64,
}

impl NpInstance {
    pub fn nodes(&self) -> NodeConfig {
        NodeConfig::new(self.node_sizes.clone(), Aggregate::Mean)
            .expect("multiset entries are positive")
    }
}

/// Three rows of length `sum/3`, communication along the rows only, one node
/// per multiset entry. Rows filled by the three equal-sum subsets cut
/// `|I| - 3` row edges, i.e. `2|I| - 6` directed edges.
pub fn three_way_to_grid(multiset: &[usize]) -> Result<NpInstance> {
    if multiset.contains(&0) {
        return Err(Error::InvalidPartitionInstance(
            "entries must be positive".into(),
        ));
    }
    let sum: usize = multiset.iter().sum();
    if sum == 0 || !sum.is_multiple_of(3) {
        return Err(Error::InvalidPartitionInstance(format!(
            "sum {sum} is not a positive multiple of 3"
        )));
    }
    if multiset.len() < 3 {
        return Err(Error::InvalidPartitionInstance(format!(
            "{} entries give a negative threshold; at least 3 are needed",
            multiset.len()
        )));
    }
    Ok(NpInstance {
        multiset: multiset.to_vec(),
        grid: Grid::new(vec![3, sum / 3])?,
        stencil: Stencil::new(2, vec![vec![0, -1], vec![0, 1]])?,
        node_sizes: multiset.to_vec(),
        q: 2 * multiset.len() as u64 - 6,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub optimal_j_sum: u64,
    /// Node of every grid cell, in row-major cell order.
    pub witness: Vec<usize>,
    pub nodes_expanded: u64,
}

impl OracleResult {
    /// The witness as a rank mapping: node `i`'s ranks take its cells in grid order.
    pub fn witness_mapping(&self, grid: &Grid, nodes: &NodeConfig) -> Result<RankMapping> {
        let mut cells_of: Vec<Vec<usize>> = vec![Vec::new(); nodes.node_count()];
        for (cell, &node) in self.witness.iter().enumerate() {
            cells_of[node].push(cell);
        }
        let coords = cells_of
            .into_iter()
            .flatten()
            .map(|cell| unrank(grid.dims(), cell))
            .collect();
        let m = RankMapping::new(grid, coords, Algorithm::Blocked, None);
        m.validate(grid)?;
        Ok(m)
    }
}

struct Search<'a> {
    /// For every cell, earlier cells it shares directed edges with, and how many.
    back_edges: Vec<Vec<(usize, u64)>>,
    sizes: &'a [usize],
    remaining: Vec<usize>,
    assign: Vec<usize>,
    best: Option<(u64, Vec<usize>)>,
    /// Prune anything costing more than this before a first solution exists.
    ceiling: u64,
    expanded: u64,
}

impl Search<'_> {
    fn run(&mut self, cell: usize, cost: u64) {
        self.expanded += 1;
        if cell == self.assign.len() {
            if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                self.best = Some((cost, self.assign.clone()));
            }
            return;
        }
        for node in 0..self.sizes.len() {
            if self.remaining[node] == 0 {
                continue;
            }
            // Equal-size nodes are interchangeable: open them in index order.
            if self.remaining[node] == self.sizes[node]
                && (0..node).any(|j| {
                    self.sizes[j] == self.sizes[node] && self.remaining[j] == self.sizes[j]
                })
            {
                continue;
            }
            let added: u64 = self.back_edges[cell]
                .iter()
                .filter(|&&(u, _)| self.assign[u] != node)
                .map(|&(_, w)| w)
                .sum();
            let next = cost + added;
            let bound = match &self.best {
                Some((b, _)) => next >= *b,
                None => next > self.ceiling,
            };
            if bound {
                continue;
            }
            self.assign[cell] = node;
            self.remaining[node] -= 1;
            self.run(cell + 1, next);
            self.remaining[node] += 1;
            self.assign[cell] = usize::MAX;
        }
    }
}

/// Minimum directed `j_sum` over all assignments of cells to nodes with the
/// given sizes. Cells are assigned in row-major order and nodes in index order,
/// so the witness is the lexicographically smallest optimal assignment.
pub fn brute_force_optimal(
    grid: &Grid,
    stencil: &Stencil,
    sizes: &[usize],
    limit: usize,
) -> Result<OracleResult> {
    brute_force_with_ceiling(grid, stencil, sizes, limit, u64::MAX)
}

/// Like [`brute_force_optimal`], but told that some assignment costs at most
/// `ceiling` (for instance a heuristic's value), which prunes the search early.
/// A ceiling below the true optimum is detected and retried without it.
pub fn brute_force_with_ceiling(
    grid: &Grid,
    stencil: &Stencil,
    sizes: &[usize],
    limit: usize,
    ceiling: u64,
) -> Result<OracleResult> {
    check_stencil(grid, stencil)?;
    let p = grid.size();
    if p > limit {
        return Err(Error::OracleLimit { p, limit });
    }
    let nodes = NodeConfig::new(sizes.to_vec(), Aggregate::Mean)?;
    nodes.check_grid(grid)?;

    let mut back_edges: Vec<Vec<(usize, u64)>> = vec![Vec::new(); p];
    for (u, v) in induced_edges(grid, stencil) {
        if u == v {
            continue;
        }
        let (early, late) = (u.min(v), u.max(v));
        let list = &mut back_edges[late];
        match list.iter_mut().find(|(w, _)| *w == early) {
            Some((_, c)) => *c += 1,
            None => list.push((early, 1)),
        }
    }
    let mut search = Search {
        back_edges,
        sizes,
        remaining: sizes.to_vec(),
        assign: vec![usize::MAX; p],
        best: None,
        ceiling,
        expanded: 0,
    };
    search.run(0, 0);
    let expanded = search.expanded;
    match search.best {
        Some((optimal_j_sum, witness)) => Ok(OracleResult {
            optimal_j_sum,
            witness,
            nodes_expanded: expanded,
        }),
        None => {
            let mut again = brute_force_with_ceiling(grid, stencil, sizes, limit, u64::MAX)?;
            again.nodes_expanded += expanded;
            Ok(again)
        }
    }
}

/// Solves the generated grid instance exactly.
pub fn solve_np_instance(inst: &NpInstance, limit: usize) -> Result<OracleResult> {
    // Chunking each row greedily is always feasible; its cost seeds the bound.
    let chunked = crate::evalcost::evaluate(
        &inst.grid,
        &inst.stencil,
        &crate::mappers::blocked_map(&inst.grid),
        &inst.nodes(),
    )?;
    brute_force_with_ceiling(
        &inst.grid,
        &inst.stencil,
        &inst.node_sizes,
        limit,
        chunked.j_sum,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalcost::evaluate;
    use crate::stencil::Builtin;

    #[test]
    fn one_node_is_free() {
        let g = Grid::new(vec![3, 3]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighborHops, 2).unwrap();
        let res = brute_force_optimal(&g, &s, &[9], DEFAULT_LIMIT).unwrap();
        assert_eq!(res.optimal_j_sum, 0);
        assert_eq!(res.witness, vec![0; 9]);
    }

    /// Every balanced assignment of a 2x2 grid, enumerated by hand-rolled bitmask.
    #[test]
    fn two_by_two_matches_enumeration() {
        let g = Grid::new(vec![2, 2]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighbor, 2).unwrap();
        let edges: Vec<_> = induced_edges(&g, &s).collect();
        let best = (0u32..16)
            .filter(|m| m.count_ones() == 2)
            .map(|m| {
                edges
                    .iter()
                    .filter(|&&(u, v)| (m >> u & 1) != (m >> v & 1))
                    .count()
            })
            .min()
            .unwrap();
        assert_eq!(best, 4);
        let res = brute_force_optimal(&g, &s, &[2, 2], DEFAULT_LIMIT).unwrap();
        assert_eq!(res.optimal_j_sum, 4);
        assert_eq!(res.witness, vec![0, 0, 1, 1]);
    }

    #[test]
    fn minimal_yes_instance() {
        let inst = three_way_to_grid(&[2, 2, 2]).unwrap();
        assert_eq!(inst.grid.dims(), &[3, 2]);
        assert_eq!(inst.q, 0);
        let res = brute_force_optimal(&inst.grid, &inst.stencil, &inst.node_sizes, DEFAULT_LIMIT)
            .unwrap();
        assert_eq!(res.optimal_j_sum, 0);
    }

    #[test]
    fn construction_of_six_entry_example() {
        let inst = three_way_to_grid(&[6, 3, 3, 2, 2, 2]).unwrap();
        assert_eq!(inst.grid.dims(), &[3, 6]);
        assert_eq!(inst.q, 6);
        assert_eq!(inst.stencil.offsets(), &[vec![0, -1], vec![0, 1]]);
    }

    #[test]
    fn construction_rejections() {
        assert!(three_way_to_grid(&[1, 2]).is_err());
        assert!(three_way_to_grid(&[1, 1, 2]).is_err());
        assert!(three_way_to_grid(&[0, 3, 3]).is_err());
    }

    #[test]
    fn refuses_above_limit() {
        let g = Grid::new(vec![4, 4]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighbor, 2).unwrap();
        assert_eq!(
            brute_force_optimal(&g, &s, &[8, 8], DEFAULT_LIMIT),
            Err(Error::OracleLimit { p: 16, limit: 12 })
        );
    }

    #[test]
    fn witness_is_sound() {
        let g = Grid::new(vec![3, 4]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighborHops, 2).unwrap();
        let sizes = [5, 4, 3];
        let res = brute_force_optimal(&g, &s, &sizes, DEFAULT_LIMIT).unwrap();
        let nodes = NodeConfig::new(sizes.to_vec(), Aggregate::Mean).unwrap();
        let m = res.witness_mapping(&g, &nodes).unwrap();
        assert_eq!(
            evaluate(&g, &s, &m, &nodes).unwrap().j_sum,
            res.optimal_j_sum
        );
        for (node, &size) in sizes.iter().enumerate() {
            assert_eq!(res.witness.iter().filter(|&&w| w == node).count(), size);
        }
    }

    #[test]
    fn low_ceiling_is_recovered() {
        let g = Grid::new(vec![2, 3]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighbor, 2).unwrap();
        let exact = brute_force_optimal(&g, &s, &[3, 3], DEFAULT_LIMIT).unwrap();
        let seeded = brute_force_with_ceiling(&g, &s, &[3, 3], DEFAULT_LIMIT, 0).unwrap();
        assert_eq!(exact.optimal_j_sum, seeded.optimal_j_sum);
        assert_eq!(exact.witness, seeded.witness);
    }
}

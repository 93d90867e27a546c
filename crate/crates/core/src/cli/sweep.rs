//! Reduction sweep over a grid of (nodes, processes per node, dimensions).

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evalcost::{evaluate, reduction};
use crate::grid::{dims_create, Grid};
use crate::mappers::{blocked_map, run_all, Algorithm, NodeConfig};
use crate::stencil::{Builtin, Stencil};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub node_counts: Vec<usize>,
    pub procs_per_node: Vec<usize>,
    pub dims_set: Vec<usize>,
    pub stencils: Vec<Builtin>,
    pub seed: u64,
}

impl Default for SweepSpec {
    /// 8 node counts x 9 node sizes x 2 dimensionalities = 144 instances.
    fn default() -> Self {
        let steps: Vec<usize> = (10..=31).step_by(3).collect();
        let mut ppn = steps.clone();
        ppn.push(32);
        SweepSpec {
            node_counts: steps,
            procs_per_node: ppn,
            dims_set: vec![2, 3],
            stencils: Builtin::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl SweepSpec {
    /// Instances `(N, n, d)` in canonical order.
    pub fn instances(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for &nodes in &self.node_counts {
            for &n in &self.procs_per_node {
                for &d in &self.dims_set {
                    out.push((nodes, n, d));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_counts.contains(&0) || self.procs_per_node.contains(&0) {
            return Err(Error::InvalidNodes(
                "node counts and sizes must be positive".into(),
            ));
        }
        if self.dims_set.contains(&0) {
            return Err(Error::InvalidGrid(
                "dimension counts must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub stencil: Builtin,
    pub d: usize,
    pub nodes: usize,
    pub n: usize,
    pub p: usize,
    pub dims: Vec<usize>,
    pub j_sum: Option<u64>,
    pub j_max: Option<u64>,
    pub j_sum_blocked: Option<u64>,
    pub j_max_blocked: Option<u64>,
    pub reduction_sum: Option<f64>,
    pub reduction_max: Option<f64>,
    pub flags: Vec<String>,
}

fn instance_rows(nodes: usize, n: usize, d: usize, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let p = nodes * n;
    let dims = dims_create(p, d);
    let grid = Grid::new(dims.clone())?;
    let nc = NodeConfig::homogeneous(nodes, n)?;
    let mut rows = Vec::new();
    for &builtin in &spec.stencils {
        let row = |algorithm| SweepRow {
            algorithm,
            stencil: builtin,
            d,
            nodes,
            n,
            p,
            dims: dims.clone(),
            j_sum: None,
            j_max: None,
            j_sum_blocked: None,
            j_max_blocked: None,
            reduction_sum: None,
            reduction_max: None,
            flags: Vec::new(),
        };
        let stencil = match Stencil::builtin(builtin, d) {
            Ok(s) => s,
            Err(Error::EmptyStencil(_)) => {
                for a in Algorithm::ALL {
                    let mut r = row(a);
                    r.flags.push("stencil-empty".into());
                    rows.push(r);
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let base = evaluate(&grid, &stencil, &blocked_map(&grid), &nc)?;
        for outcome in run_all(&grid, &stencil, &nc, spec.seed)? {
            let mut r = row(outcome.algorithm);
            r.j_sum_blocked = Some(base.j_sum);
            r.j_max_blocked = Some(base.j_max);
            r.flags = outcome.flags.iter().map(|f| f.code().to_string()).collect();
            if let Some(m) = &outcome.mapping {
                let cost = evaluate(&grid, &stencil, m, &nc)?;
                let red = reduction(&cost, &base)?;
                r.j_sum = Some(cost.j_sum);
                r.j_max = Some(cost.j_max);
                r.reduction_sum = Some(red.sum_ratio);
                r.reduction_max = Some(red.max_ratio);
            }
            rows.push(r);
        }
    }
    Ok(rows)
}

/// All rows in (instance, stencil, algorithm) order. Instances are evaluated
/// in parallel; the order does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let per_instance: Vec<Vec<SweepRow>> = spec
        .instances()
        .into_par_iter()
        .map(|(nodes, n, d)| instance_rows(nodes, n, d, spec))
        .collect::<Result<_>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// Median `(reduction_sum, reduction_max)` of one algorithm on one stencil.
pub fn median_reductions(
    rows: &[SweepRow],
    algorithm: Algorithm,
    stencil: Builtin,
) -> Option<(f64, f64)> {
    let pick = |f: fn(&SweepRow) -> Option<f64>| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.algorithm == algorithm && r.stencil == stencil)
            .filter_map(f)
            .collect()
    };
    let mut sums = pick(|r| r.reduction_sum);
    let mut maxes = pick(|r| r.reduction_max);
    Some((median(&mut sums)?, median(&mut maxes)?))
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn ratio(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x:.6}"),
    }
}

pub const CSV_HEADER: &str = "algorithm,stencil,d,N,n,p,dims,j_sum,j_max,j_sum_blocked,j_max_blocked,reduction_sum,reduction_max,flags";

/// CSV body followed by `#`-prefixed median lines per (algorithm, stencil).
pub fn render_csv(rows: &[SweepRow], spec: &SweepSpec) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let dims = r
            .dims
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("x");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.stencil,
            r.d,
            r.nodes,
            r.n,
            r.p,
            dims,
            opt(&r.j_sum),
            opt(&r.j_max),
            opt(&r.j_sum_blocked),
            opt(&r.j_max_blocked),
            ratio(r.reduction_sum),
            ratio(r.reduction_max),
            r.flags.join(";"),
        )
        .unwrap();
    }
    out.push_str("# summary: algorithm,stencil,median_reduction_sum,median_reduction_max (directed edge counts)\n");
    for &stencil in &spec.stencils {
        for algorithm in Algorithm::ALL {
            if let Some((s, m)) = median_reductions(rows, algorithm, stencil) {
                writeln!(out, "# median,{algorithm},{stencil},{s:.6},{m:.6}").unwrap();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_144_instances() {
        let spec = SweepSpec::default();
        assert_eq!(spec.node_counts, vec![10, 13, 16, 19, 22, 25, 28, 31]);
        assert_eq!(
            spec.procs_per_node,
            vec![10, 13, 16, 19, 22, 25, 28, 31, 32]
        );
        assert_eq!(spec.instances().len(), 144);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }

    #[test]
    fn small_sweep_rows() {
        let spec = SweepSpec {
            node_counts: vec![4],
            procs_per_node: vec![6],
            dims_set: vec![1, 2],
            stencils: Builtin::ALL.to_vec(),
            seed: 3,
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 6);
        let empty: Vec<_> = rows
            .iter()
            .filter(|r| r.flags == ["stencil-empty"])
            .collect();
        assert_eq!(empty.len(), 6);
        assert!(empty
            .iter()
            .all(|r| r.d == 1 && r.stencil == Builtin::Component));
        for r in rows
            .iter()
            .filter(|r| r.algorithm == Algorithm::Blocked && r.j_sum.is_some())
        {
            assert_eq!(r.reduction_sum, Some(1.0));
        }
        let csv = render_csv(&rows, &spec);
        assert_eq!(
            csv.lines().filter(|l| !l.starts_with('#')).count(),
            rows.len() + 1
        );
    }
}
